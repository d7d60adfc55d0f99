"""Acceptance gate.

Every criterion is run at its stated tolerance and reported on one line as
``[PASS]`` or ``[FAIL]``. Under pytest the lines are collected and printed in
the terminal summary; ``python3 tests/test_acceptance.py`` prints them
directly.
"""

from __future__ import annotations

import json
import math
import shutil
import subprocess
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from cdanse.diagnostics import DiagnosticError, contraction_rate
from cdanse.fem import (
    Field,
    IHMode,
    assemble_convection,
    assemble_nudging,
    apply_dirichlet,
    build_dofmap,
    dirichlet_data,
    error_norms,
)
from cdanse.fem.quadrature import collapsed_gauss
from cdanse.mesh import CoarseGrid, locate_observation_vertices, uniform_cavity_mesh
from cdanse.observations import make_observations
from cdanse.solvers import (
    FlowContext,
    SolverConfig,
    Status,
    assemble_step_system,
    compute_reference,
    hybrid_cda_newton,
    iterate,
)

RESULTS: dict[int, tuple[bool, str]] = {}

HIGH_RE = 10000.0
HIGH_RE_MESH = 64
HIGH_RE_MU = 1e4  # nudging used for the data-quantity comparison at HIGH_RE


def record(number: int, title: str, passed: bool, detail: str, elapsed: float):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number} ({title}): {detail} [{elapsed:.0f} s]"
    RESULTS[number] = (passed, line)
    print(line, flush=True)
    return passed, line


def rate(e_coarse, e_fine):
    return math.log2(e_coarse / e_fine)


# --- shared fixtures (cached across criteria) --------------------------------

@lru_cache(maxsize=None)
def context(n: int) -> FlowContext:
    return FlowContext(uniform_cavity_mesh(n))


@lru_cache(maxsize=None)
def reference(n: int, Re: float) -> Field:
    return compute_reference(context(n), SolverConfig(nu=1 / Re)).velocity


def observations(n, Re, N, snr, seed, mode=IHMode.POINT_VALUE):
    grid = CoarseGrid(N)
    return make_observations(reference(n, Re), grid, locate_observation_vertices(context(n).mesh, grid),
                             snr=snr, seed=seed, ih_mode=mode)


def run(method, n, Re, mu=0.0, N=None, snr=0.0, seed=1, max_iter=500):
    ctx = context(n)
    cfg = SolverConfig(nu=1 / Re, mu=mu, max_iter=max_iter)
    ref = reference(n, Re)
    obs = observations(n, Re, N, snr, seed) if N else None
    u0 = ctx.initial_guess(cfg)
    if method == "hybrid":
        return hybrid_cda_newton(u0, obs, ctx, cfg, reference=ref, timer=None)[1]
    return iterate(method, u0, ctx, cfg, obs=obs, reference=ref, timer=None)[1]


# --- criteria ----------------------------------------------------------------

def criterion_1():
    """Manufactured solution: velocity L2/H1 and pressure L2 rates on n = 8, 16, 32."""
    import sympy as s

    t0 = time.perf_counter()
    x, y = s.symbols("x y")
    psi = s.sin(s.pi * x) ** 2 * s.sin(s.pi * y) ** 2
    u = (s.diff(psi, y), -s.diff(psi, x))
    p = s.cos(s.pi * x) * s.cos(s.pi * y)
    f = [-(s.diff(u[i], x, 2) + s.diff(u[i], y, 2)) + u[0] * s.diff(u[i], x) + u[1] * s.diff(u[i], y)
         + s.diff(p, (x, y)[i]) for i in range(2)]

    def vec(exprs):
        fns = [s.lambdify((x, y), e, "numpy") for e in exprs]
        return lambda X, Y: tuple(np.broadcast_to(fn(X, Y), np.shape(X)) * np.ones_like(X) for fn in fns)

    ue, fe = vec(u), vec(f)
    grads = [vec([s.diff(c, v) for v in (x, y)]) for c in u]
    ge = lambda X, Y: (grads[0](X, Y), grads[1](X, Y))  # noqa: E731
    pe = vec([p])
    errs = []
    for n in (8, 16, 32):
        ctx = FlowContext(build_dofmap(uniform_cavity_mesh(n)), forcing=fe)
        cfg = SolverConfig(nu=1.0, lid_value=(0.0, 0.0), tol_residual=1e-12, max_iter=20)
        uh, h = iterate("newton", ctx.initial_guess(cfg), ctx, cfg, timer=None)
        e = error_norms(uh, ue, ge, h.final_pressure, lambda X, Y: pe(X, Y)[0], rule=collapsed_gauss(8))
        errs.append((e["u_l2"], e["u_h1"], e["p_l2"]))
    rates = [[rate(a[i], b[i]) for i in range(3)] for a, b in zip(errs, errs[1:])]
    expected = (3.0, 2.0, 2.0)
    ok = all(abs(r[i] - expected[i]) <= 0.3 for r in rates for i in range(3))
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60
    detail = "rates (uL2, uH1, pL2) " + "; ".join("(" + ", ".join(f"{v:.2f}" for v in r) + ")" for r in rates)
    return record(1, "discretization rates", ok, detail, elapsed)


def criterion_2():
    """Skew-symmetry, nudging matrix structure, and mu = 0 CDA system equal to Picard."""
    t0 = time.perf_counter()
    d = build_dofmap(uniform_cavity_mesh(8))
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        w = Field(d, rng.standard_normal(d.n_u))
        v = rng.standard_normal(d.n_u)
        C = assemble_convection(d, w)
        worst = max(worst, abs(v @ (C @ v)) / ((v @ v) * np.abs(w.values).max()))
    skew_ok = worst <= 1e-10
    nud_ok = True
    for mode in IHMode:
        grid = CoarseGrid(2)
        M = assemble_nudging(d, grid, locate_observation_vertices(d.mesh, grid), 1.0, mode).matrix.toarray()
        ev = np.linalg.eigvalsh(M)
        rank = int(np.sum(ev > 1e-10 * ev.max()))
        nud_ok &= np.array_equal(M, M.T) and ev.min() > -1e-12 and rank <= 2 * grid.n_cells
    ctx = context(16)
    cfg = SolverConfig(nu=1e-2)
    u = Field(ctx.dofmap, 0.3 * reference(16, 100.0).values)
    obs = observations(16, 100.0, 4, 0.01, 5)
    dofs, vals = dirichlet_data(ctx.dofmap, cfg.lid_value)
    Ap, bp = apply_dirichlet(*_mat_rhs(assemble_step_system("picard", u, ctx, cfg)), dofs, vals)
    Ac, bc = apply_dirichlet(*_mat_rhs(assemble_step_system("cda_picard", u, ctx, cfg.replace(mu=0.0), obs)), dofs, vals)
    same = (np.array_equal(Ap.indptr, Ac.indptr) and np.array_equal(Ap.indices, Ac.indices)
            and Ap.data.tobytes() == Ac.data.tobytes() and bp.tobytes() == bc.tobytes())
    ok = skew_ok and nud_ok and same
    detail = f"max scaled |v'Cv| {worst:.1e}; nudging sym/PSD/rank {'ok' if nud_ok else 'violated'}; " \
             f"mu=0 system {'bit-identical' if same else 'differs'}"
    return record(2, "operator identities", ok, detail, time.perf_counter() - t0)


def _mat_rhs(system):
    return system.matrix, system.rhs


def criterion_3():
    """Re = 3000, n = 32, N = 10, mu = 1e4, clean data: CDA-Picard beats plain Picard."""
    t0 = time.perf_counter()
    h_cda = run("cda_picard", 32, 3000.0, mu=1e4, N=10, snr=0.0)
    h_pic = run("picard", 32, 3000.0)
    cda_ok = h_cda.status is Status.CONVERGED and h_cda.final_residual < 1e-8 and h_cda.errors[-1] < 1e-6
    faster = h_pic.status is not Status.CONVERGED or len(h_cda) < len(h_pic)
    detail = (f"CDA-Picard {h_cda.status.value} in {len(h_cda)} its (error {h_cda.errors[-1]:.1e}); "
              f"Picard {h_pic.status.value} in {len(h_pic)} its")
    return record(3, "clean-data acceleration", cda_ok and faster, detail, time.perf_counter() - t0)


SNRS = (0.001, 0.01, 0.05)
SEEDS = (1, 2, 3)
MUS = (1.0, 1e4)


def criterion_4():
    """Noise floor at Re = 3000: residual to 1e-8, min error within [snr/10, 10 snr], monotone in snr."""
    t0 = time.perf_counter()
    failures = []
    minerr = {}
    for mu in MUS:
        for seed in SEEDS:
            for snr in SNRS:
                h = run("cda_picard", 32, 3000.0, mu=mu, N=10, snr=snr, seed=seed)
                e = float(np.nanmin(h.errors))
                minerr[mu, seed, snr] = e
                try:
                    rho = contraction_rate(h.residuals, 10)
                except DiagnosticError:
                    rho = float("nan")
                if not (h.status is Status.CONVERGED and h.final_residual < 1e-8):
                    failures.append(f"mu={mu:g} seed={seed} snr={snr}: {h.status.value}")
                if not rho < 1:
                    failures.append(f"mu={mu:g} seed={seed} snr={snr}: rate {rho:.3f}")
                if not 0.1 * snr <= e <= 10 * snr:
                    failures.append(f"mu={mu:g} seed={seed} snr={snr}: min error {e:.2e}")
            errs = [minerr[mu, seed, s] for s in SNRS]
            if any(b < a for a, b in zip(errs, errs[1:])):
                failures.append(f"mu={mu:g} seed={seed}: min error not monotone in snr")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 3600
    ratio = [minerr[k] / k[2] for k in minerr]
    detail = (f"18 runs, min error/snr in [{min(ratio):.2f}, {max(ratio):.2f}]" if ok
              else f"{len(failures)} violations: " + "; ".join(failures[:4]))
    return record(4, "noise floor", ok, detail, elapsed)


def criterion_5():
    """High-Re rescue on n = 64."""
    t0 = time.perf_counter()
    n, Re = HIGH_RE_MESH, HIGH_RE
    h_pic = run("picard", n, Re)
    h_newt = run("newton", n, Re)
    h_hyb = run("hybrid", n, Re, mu=1.0, N=20, snr=0.01)
    h_hyb5 = run("hybrid", n, Re, mu=1.0, N=20, snr=0.05)
    tail = h_pic.residuals[-50:]
    pic_ok = h_pic.status is Status.MAX_ITER and tail.min() > 1e-2
    newt_ok = h_newt.status is Status.DIVERGED and h_newt.h1_norms[-1] > 1e4
    hyb_ok = h_hyb.status is Status.CONVERGED and h_hyb.final_residual < 1e-8
    hyb5_ok = h_hyb5.status is not Status.CONVERGED
    elapsed = time.perf_counter() - t0
    ok = pic_ok and newt_ok and hyb_ok and hyb5_ok and elapsed < 7200
    detail = (f"Re={Re:g}: Picard {h_pic.status.value} (last-50 residual min {tail.min():.1e}); "
              f"Newton {h_newt.status.value} (H1 {h_newt.h1_norms[-1]:.1e}); "
              f"hybrid snr=0.01 {h_hyb.status.value} ({h_hyb.final_residual:.1e}); "
              f"hybrid snr=0.05 {h_hyb5.status.value} in {len(h_hyb5)} its (expected failure)")
    return record(5, "high-Re rescue", ok, detail, elapsed)


def criterion_6():
    """Data quantity at the criterion-5 Reynolds number: N = 10 fails, N = 20 converges."""
    t0 = time.perf_counter()
    n, Re = HIGH_RE_MESH, HIGH_RE
    h10 = run("cda_picard", n, Re, mu=HIGH_RE_MU, N=10, snr=0.01)
    h20 = run("cda_picard", n, Re, mu=HIGH_RE_MU, N=20, snr=0.01)
    ok = h10.status is not Status.CONVERGED and h20.status is Status.CONVERGED
    detail = (f"Re={Re:g}, mu={HIGH_RE_MU:g}, snr=0.01: N=10 {h10.status.value} ({h10.final_residual:.1e}), "
              f"N=20 {h20.status.value} in {len(h20)} its ({h20.final_residual:.1e})")
    return record(6, "data-quantity threshold", ok, detail, time.perf_counter() - t0)


def criterion_7():
    """Contraction at Re = 3000, mu = 1e4 improves when the observation grid is refined."""
    t0 = time.perf_counter()
    r = {N: contraction_rate(run("cda_picard", 32, 3000.0, mu=1e4, N=N, snr=0.0), 10) for N in (10, 20)}
    elapsed = time.perf_counter() - t0
    ok = r[20] < r[10] and elapsed < 900
    return record(7, "H-refinement", ok, f"rate(N=20) {r[20]:.3f} vs rate(N=10) {r[10]:.3f}", elapsed)


def criterion_8(workdir: Path):
    """Two CLI executions of a criterion-4 run give byte-identical history files."""
    t0 = time.perf_counter()
    cfg = {"n": 32, "Re": 3000, "method": "cda_picard", "N": 10, "snr": 0.01, "seed": 2, "mu": 1.0}
    out = workdir / "out"
    path = workdir / "cfg.json"
    path.write_text(json.dumps({**cfg, "out": str(out)}))
    blobs = []
    for _ in range(2):
        shutil.rmtree(out, ignore_errors=True)  # each execution starts from nothing, reference included
        subprocess.run([sys.executable, "-m", "cdanse", "run", "--config", str(path)], check=True,
                       capture_output=True)
        rundir = out / "cda_picard_Re3000_mu1_N10_snr0.01_seed2"
        blobs.append(((rundir / "history.csv").read_bytes(), (rundir / "summary.json").read_bytes()))
    same_hist = blobs[0][0] == blobs[1][0]
    ok = same_hist and blobs[0][1] == blobs[1][1]
    detail = f"history.csv {'identical' if same_hist else 'differs'} ({len(blobs[0][0])} bytes), " \
             f"summary.json {'identical' if blobs[0][1] == blobs[1][1] else 'differs'}"
    return record(8, "determinism", ok, detail, time.perf_counter() - t0)


# --- pytest wrappers -----------------------------------------------------------

def test_criterion_1_rates():
    ok, line = criterion_1()
    assert ok, line


def test_criterion_2_identities():
    ok, line = criterion_2()
    assert ok, line


@pytest.mark.slow
def test_criterion_3_clean_acceleration():
    ok, line = criterion_3()
    assert ok, line


@pytest.mark.slow
def test_criterion_4_noise_floor():
    ok, line = criterion_4()
    assert ok, line


@pytest.mark.slow
def test_criterion_5_high_re_rescue():
    ok, line = criterion_5()
    assert ok, line


@pytest.mark.slow
def test_criterion_6_data_quantity():
    ok, line = criterion_6()
    assert ok, line


@pytest.mark.slow
def test_criterion_7_h_refinement():
    ok, line = criterion_7()
    assert ok, line


@pytest.mark.slow
def test_criterion_8_determinism(tmp_path):
    ok, line = criterion_8(tmp_path)
    assert ok, line


def main():
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
                  lambda: criterion_8(Path(tmp))]
        for check in checks:
            check()
    print()
    for k in sorted(RESULTS):
        print(RESULTS[k][1])
    return 0 if all(ok for ok, _ in RESULTS.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
