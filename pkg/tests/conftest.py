import sys

import pytest

from cdanse.mesh import uniform_cavity_mesh
from cdanse.solvers import FlowContext, SolverConfig, compute_reference


@pytest.fixture(scope="session")
def ctx16():
    return FlowContext(uniform_cavity_mesh(16))


@pytest.fixture(scope="session")
def reference_re100_n16(ctx16):
    return compute_reference(ctx16, SolverConfig(nu=1e-2)).velocity


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[k][1])
