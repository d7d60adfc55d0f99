"""Nonlinear drivers: Picard, Newton, CDA-Picard with (noisy) nudging, and the hybrid strategy.

All iterations act on Taylor-Hood velocity/pressure pairs with the lid
boundary data imposed strongly. Convergence is judged on the L2 norm of the
difference between successive velocity iterates.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fem import (
    AssembledSystem,
    DofMap,
    Field,
    IHMode,
    apply_dirichlet,
    assemble_convection,
    assemble_divergence_coupling,
    assemble_load,
    assemble_newton_linearization,
    assemble_nudging,
    assemble_viscous_graddiv,
    build_dofmap,
    dirichlet_data,
    h1_seminorm,
    l2_norm,
    lift_boundary,
    pressure_weights,
)
from .fem.ordering import nested_dissection_order
from .linalg import Factorization, SingularMatrixError
from .mesh import Mesh

log = logging.getLogger(__name__)

REFERENCE_LADDER = (100.0, 500.0, 1000.0, 3000.0, 5000.0, 10000.0)


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    DIVERGED = "Diverged"


class SolverError(RuntimeError):
    """A linear solve failed inside a nonlinear iteration."""

    def __init__(self, message, iteration=None, history=None):
        super().__init__(message)
        self.iteration = iteration
        self.history = history


class ReferenceError(RuntimeError):
    def __init__(self, message, rung=None):
        super().__init__(message)
        self.rung = rung


@dataclass(frozen=True)
class SolverConfig:
    nu: float
    mu: float = 0.0
    gamma_gd: float = 1.0
    tol_residual: float = 1e-8
    max_iter: int = 500
    blowup_threshold: float = 1e4
    switch_tol: float = 1e-2
    ih_mode: IHMode = IHMode.POINT_VALUE
    lid_value: tuple = (1.0, 0.0)

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if self.gamma_gd < 0:
            raise ValueError(f"gamma_gd must be nonnegative, got {self.gamma_gd}")
        if not 0 < self.tol_residual < self.switch_tol < self.blowup_threshold:
            raise ValueError("need 0 < tol_residual < switch_tol < blowup_threshold")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        object.__setattr__(self, "ih_mode", IHMode(self.ih_mode))
        object.__setattr__(self, "lid_value", tuple(float(v) for v in self.lid_value))

    @property
    def Re(self) -> float:
        return 1.0 / self.nu

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class IterationRecord:
    k: int
    l2_residual: float
    l2_error: float | None
    h1_norm: float
    wall_time: float
    phase: str


@dataclass
class IterationHistory:
    records: list = field(default_factory=list)
    status: Status | None = None
    final_pressure: Field | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.records)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.l2_residual for r in self.records])

    @property
    def errors(self) -> np.ndarray:
        return np.array([np.nan if r.l2_error is None else r.l2_error for r in self.records])

    @property
    def h1_norms(self) -> np.ndarray:
        return np.array([r.h1_norm for r in self.records])

    @property
    def final_residual(self) -> float:
        return self.records[-1].l2_residual if self.records else float("nan")


class FlowContext:
    """Operators that do not change between iterations, plus caches keyed by parameters."""

    def __init__(self, mesh_or_dofmap, forcing=None):
        self.dofmap: DofMap = mesh_or_dofmap if isinstance(mesh_or_dofmap, DofMap) else build_dofmap(mesh_or_dofmap)
        self.mesh: Mesh = self.dofmap.mesh
        d = self.dofmap
        self.load = assemble_load(d, forcing) if forcing is not None else np.zeros(d.n_u)
        self.B = assemble_divergence_coupling(d)
        self._saddle = {}
        self._nudging = {}

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_dofs

    def saddle_matrix(self, config: SolverConfig) -> sp.csr_matrix:
        """[[nu K + gamma G, -B^T], [B, 0]] without any convection."""
        key = (config.nu, config.gamma_gd)
        if key not in self._saddle:
            A0 = assemble_viscous_graddiv(self.dofmap, config.nu, config.gamma_gd)
            K = sp.bmat([[A0, -self.B.T], [self.B, None]], format="csr")
            K.sort_indices()
            self._saddle[key] = K
        return self._saddle[key]

    def nudging(self, obs, config: SolverConfig):
        key = (obs.grid.N, IHMode(config.ih_mode), config.mu, obs.obs_vertices.tobytes())
        if key not in self._nudging:
            self._nudging[key] = assemble_nudging(self.dofmap, obs.grid, obs.obs_vertices, config.mu, config.ih_mode)
        return self._nudging[key]

    def initial_guess(self, config: SolverConfig) -> Field:
        """Zero interior velocity carrying the boundary data."""
        return Field(self.dofmap, lift_boundary(self.dofmap, config.lid_value))

    def pad(self, V) -> sp.csr_matrix:
        """Embed a velocity-block matrix into the full velocity-pressure system."""
        V = sp.csr_matrix(V)
        n = self.n_dofs
        indptr = np.concatenate([V.indptr, np.full(self.dofmap.n_p, V.indptr[-1], dtype=V.indptr.dtype)])
        return sp.csr_matrix((V.data, V.indices, indptr), shape=(n, n))


def _check_field(u: Field, ctx: FlowContext):
    if u.dofmap is not ctx.dofmap or u.kind != "velocity":
        raise ValueError("iterate must be a velocity field on the context's dof map")


def assemble_step_system(method: str, u_k: Field, ctx: FlowContext, config: SolverConfig, obs=None) -> AssembledSystem:
    """Linear system of one Picard / Newton / CDA-Picard step before boundary conditions."""
    _check_field(u_k, ctx)
    V = assemble_convection(ctx.dofmap, u_k)
    f = ctx.load.copy()
    if method == "newton":
        Nmat, nrhs = assemble_newton_linearization(ctx.dofmap, u_k)
        V = V + Nmat
        f = f + nrhs
    elif method == "cda_picard":
        if obs is None:
            raise ValueError("CDA-Picard needs an observation set")
        nud = ctx.nudging(obs, config)
        V = V + nud.matrix
        f = f + nud.rhs(obs.noisy_values)
    elif method != "picard":
        raise ValueError(f"unknown method {method!r}")
    A = ctx.saddle_matrix(config) + ctx.pad(V)
    rhs = np.concatenate([f, np.zeros(ctx.dofmap.n_p)])
    return AssembledSystem(ctx.dofmap, A.tocsr(), rhs)


def solve_system(system: AssembledSystem, config: SolverConfig) -> tuple[Field, Field]:
    """Impose lid data, factor, solve, and shift the pressure to zero mean."""
    d = system.dofmap
    dofs, vals = dirichlet_data(d, config.lid_value)
    A, b = apply_dirichlet(system.matrix, system.rhs, dofs, vals)
    x = Factorization(A, perm=nested_dissection_order(d)).solve(b)
    u = x[: d.n_u]
    p = x[d.n_u:]
    w = pressure_weights(d)
    p = p - (w @ p) / w.sum()
    return Field(d, u), Field(d, p, "pressure")


def picard_step(u_k: Field, ctx: FlowContext, config: SolverConfig, obs=None):
    return solve_system(assemble_step_system("picard", u_k, ctx, config), config)


def newton_step(u_k: Field, ctx: FlowContext, config: SolverConfig, obs=None):
    return solve_system(assemble_step_system("newton", u_k, ctx, config), config)


def cda_picard_step(u_k: Field, ctx: FlowContext, config: SolverConfig, obs=None):
    return solve_system(assemble_step_system("cda_picard", u_k, ctx, config, obs), config)


STEPPERS = {"picard": picard_step, "newton": newton_step, "cda_picard": cda_picard_step}


def nonlinear_residual(u: Field, p: Field, ctx: FlowContext, config: SolverConfig) -> float:
    """Max-norm of the discrete Navier-Stokes residual on unconstrained rows."""
    V = assemble_convection(ctx.dofmap, u)
    A = ctx.saddle_matrix(config) + ctx.pad(V)
    x = np.concatenate([u.values, p.values])
    r = A @ x - np.concatenate([ctx.load, np.zeros(ctx.dofmap.n_p)])
    dofs, _ = dirichlet_data(ctx.dofmap, config.lid_value)
    r[dofs] = 0.0
    # the pinned pressure row is replaced, but the continuity equation still holds there
    r[ctx.dofmap.n_u] = (ctx.B @ u.values)[0]
    return float(np.abs(r).max())


def _null_timer():
    return 0.0


def iterate(stepper, u0: Field, ctx: FlowContext, config: SolverConfig, obs=None, reference: Field | None = None,
            timer=time.perf_counter, phase: str | None = None, history: IterationHistory | None = None,
            tol: float | None = None):
    """Run ``stepper`` from ``u0`` until converged, out of iterations, or blown up.

    Returns ``(u_final, history)``; the last pressure is kept on ``history.final_pressure``.
    """
    if isinstance(stepper, str):
        stepper = STEPPERS[stepper]
    _check_field(u0, ctx)
    timer = timer or _null_timer
    tol = config.tol_residual if tol is None else tol
    phase = phase or getattr(stepper, "__name__", "step").replace("_step", "")
    history = history if history is not None else IterationHistory()
    k0 = len(history.records)
    u = u0
    d = ctx.dofmap
    status = Status.MAX_ITER
    for k in range(1, config.max_iter + 1):
        t0 = timer()
        try:
            u_new, p_new = stepper(u, ctx, config, obs=obs)
        except SingularMatrixError as exc:
            history.status = Status.DIVERGED
            raise SolverError(f"linear solve failed at iterate {k0 + k}: {exc}", k0 + k, history) from exc
        res = l2_norm(d, u_new.values - u.values)
        h1 = h1_seminorm(d, u_new.values)
        err = l2_norm(d, u_new.values - reference.values) if reference is not None else None
        history.records.append(IterationRecord(k0 + k, res, err, h1, timer() - t0, phase))
        history.final_pressure = p_new
        u = u_new
        if not np.isfinite(h1) or h1 > config.blowup_threshold:
            status = Status.DIVERGED
            break
        if res < tol:
            status = Status.CONVERGED
            break
    history.status = status
    log.debug("%s finished: %s after %d iterations, residual %.3e", phase, status.value, len(history) - k0, history.final_residual)
    return u, history


def hybrid_cda_newton(u0: Field, obs, ctx: FlowContext, config: SolverConfig, reference: Field | None = None,
                      timer=time.perf_counter):
    """CDA-Picard down to ``config.switch_tol``, then plain Newton to ``config.tol_residual``."""
    u1, history = iterate(cda_picard_step, u0, ctx, config, obs=obs, reference=reference, timer=timer,
                          phase="cda_picard", tol=config.switch_tol)
    if history.status is not Status.CONVERGED:
        return u1, history
    return iterate(newton_step, u1, ctx, config.replace(mu=0.0), reference=reference, timer=timer,
                   phase="newton", history=history)


@dataclass
class ReferenceSolution:
    velocity: Field
    pressure: Field
    nonlinear_residual: float
    rungs: list


def reynolds_ladder(Re_target: float, ladder=REFERENCE_LADDER) -> list:
    return [r for r in ladder if r < Re_target] + [float(Re_target)]


def compute_reference(ctx: FlowContext, config: SolverConfig, picard_tol: float = 1e-2, newton_tol: float = 1e-10,
                      picard_max_iter: int = 100, newton_max_iter: int = 40, ladder=REFERENCE_LADDER) -> ReferenceSolution:
    """Discrete steady solution at ``config.nu`` by Reynolds continuation.

    Each rung runs Picard to ``picard_tol`` (or its iteration cap) and then
    Newton to ``newton_tol``, warm-started from the previous rung.
    """
    if not isinstance(ctx, FlowContext):
        ctx = FlowContext(ctx)
    u = ctx.initial_guess(config)
    rungs = []
    p = None
    for Re in reynolds_ladder(config.Re, ladder):
        cfg = config.replace(nu=1.0 / Re, mu=0.0)
        u, hp = iterate(picard_step, u, ctx, cfg.replace(max_iter=picard_max_iter), tol=picard_tol, timer=None)
        u, hn = iterate(newton_step, u, ctx, cfg.replace(max_iter=newton_max_iter), tol=newton_tol, timer=None)
        rungs.append({"Re": Re, "picard_iterations": len(hp), "picard_status": hp.status.value,
                      "newton_iterations": len(hn), "newton_residual": hn.final_residual})
        if hn.status is not Status.CONVERGED:
            raise ReferenceError(f"Newton did not converge on continuation rung Re={Re:g} ({hn.status.value})", rung=Re)
        p = hn.final_pressure
        log.info("reference rung Re=%g: %d Picard + %d Newton iterations", Re, len(hp), len(hn))
    return ReferenceSolution(u, p, nonlinear_residual(u, p, ctx, config), rungs)
