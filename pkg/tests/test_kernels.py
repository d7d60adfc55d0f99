import os
import subprocess
import sys

import numpy as np
import pytest

from cdanse.fem import _kernels_py, build_dofmap, kernels
from cdanse.mesh import uniform_cavity_mesh

ckernels = pytest.importorskip("cdanse.fem._ckernels", reason="compiled kernels not built")


@pytest.fixture(scope="module")
def inputs():
    d = build_dofmap(uniform_cavity_mesh(6))
    g = d.geometry()
    wloc = np.random.default_rng(0).standard_normal((len(d.element_nodes), 6, 2))
    return wloc, g.phi, g.grad, g.wdet


def test_convection_backends_agree(inputs):
    a = _kernels_py.convection_local(*inputs)
    b = ckernels.convection_local(*inputs)
    assert np.abs(a - b).max() <= 1e-13 * np.abs(a).max()


def test_newton_backends_agree(inputs):
    (ma, ra), (mb, rb) = _kernels_py.newton_local(*inputs), ckernels.newton_local(*inputs)
    assert np.abs(ma - mb).max() <= 1e-13 * np.abs(ma).max()
    assert np.abs(ra - rb).max() <= 1e-13 * np.abs(ra).max()


def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_pure_python_override():
    env = dict(os.environ, CDANSE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from cdanse.fem import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
