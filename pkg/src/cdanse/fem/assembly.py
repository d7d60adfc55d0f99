"""Global assembly of the Taylor-Hood operators.

Every velocity-block matrix is scattered through one shared (E, 12, 12)
triplet layout, so all of them have the same CSR sparsity pattern and can be
added without pattern merging.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..linalg import TripletPattern
from . import kernels
from .dofmap import DofMap, DofMismatchError, Field


def _velocity_pattern(dofmap: DofMap) -> TripletPattern:
    key = "velocity_pattern"
    if key not in dofmap._cache:
        ed = dofmap.element_velocity_dofs
        rows = np.repeat(ed[:, :, None], 12, axis=2)
        cols = np.repeat(ed[:, None, :], 12, axis=1)
        dofmap._cache[key] = TripletPattern(dofmap.n_u, rows, cols)
    return dofmap._cache[key]


def _divergence_pattern(dofmap: DofMap) -> TripletPattern:
    key = "divergence_pattern"
    if key not in dofmap._cache:
        pr = dofmap.mesh.triangles  # pressure rows are vertex ids
        ed = dofmap.element_velocity_dofs
        rows = np.repeat(pr[:, :, None], 12, axis=2)
        cols = np.repeat(ed[:, None, :], 3, axis=1)
        dofmap._cache[key] = TripletPattern((dofmap.n_p, dofmap.n_u), rows, cols)
    return dofmap._cache[key]


def scatter_velocity(dofmap: DofMap, local) -> sp.csr_matrix:
    """Assemble (E, 12, 12) element matrices into an n_u x n_u CSR matrix."""
    return _velocity_pattern(dofmap).assemble(local)


def _diagonal_blocks(scalar_local) -> np.ndarray:
    E = scalar_local.shape[0]
    out = np.zeros((E, 2, 6, 2, 6))
    out[:, 0, :, 0, :] = scalar_local
    out[:, 1, :, 1, :] = scalar_local
    return out.reshape(E, 12, 12)


def _local_stiffness(dofmap: DofMap) -> np.ndarray:
    g = dofmap.geometry()
    return np.einsum("eq,eqic,eqjc->eij", g.wdet, g.grad, g.grad, optimize=True)


def _local_graddiv(dofmap: DofMap) -> np.ndarray:
    g = dofmap.geometry()
    E = g.grad.shape[0]
    d = np.einsum("eq,eqic,eqjd->ecidj", g.wdet, g.grad, g.grad, optimize=True)
    return d.reshape(E, 12, 12)


def assemble_stiffness(dofmap: DofMap) -> sp.csr_matrix:
    """Vector Laplacian (grad u, grad v) on velocity dofs."""
    key = "stiffness"
    if key not in dofmap._cache:
        dofmap._cache[key] = scatter_velocity(dofmap, _diagonal_blocks(_local_stiffness(dofmap)))
    return dofmap._cache[key]


def assemble_graddiv(dofmap: DofMap) -> sp.csr_matrix:
    """(div u, div v) on velocity dofs."""
    key = "graddiv"
    if key not in dofmap._cache:
        dofmap._cache[key] = scatter_velocity(dofmap, _local_graddiv(dofmap))
    return dofmap._cache[key]


def assemble_mass(dofmap: DofMap) -> sp.csr_matrix:
    """Vector L2 mass matrix (u, v) on velocity dofs."""
    key = "mass"
    if key not in dofmap._cache:
        g = dofmap.geometry()
        m = np.einsum("eq,qi,qj->eij", g.wdet, g.phi, g.phi)
        dofmap._cache[key] = scatter_velocity(dofmap, _diagonal_blocks(m))
    return dofmap._cache[key]


def assemble_viscous_graddiv(dofmap: DofMap, nu: float, gamma_gd: float = 1.0) -> sp.csr_matrix:
    """Matrix of nu (grad u, grad v) + gamma_gd (div u, div v)."""
    if not nu > 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    if gamma_gd < 0:
        raise ValueError(f"grad-div weight must be nonnegative, got {gamma_gd}")
    return nu * assemble_stiffness(dofmap) + gamma_gd * assemble_graddiv(dofmap)


def assemble_divergence_coupling(dofmap: DofMap) -> sp.csr_matrix:
    """B (n_p x n_u) with q . (B u) = (div u_h, q_h)."""
    key = "divergence"
    if key not in dofmap._cache:
        g = dofmap.geometry()
        E = g.grad.shape[0]
        local = np.einsum("eq,qa,eqjd->eadj", g.wdet, g.psi, g.grad, optimize=True).reshape(E, 3, 12)
        dofmap._cache[key] = _divergence_pattern(dofmap).assemble(local)
    return dofmap._cache[key]


def _element_coefficients(dofmap: DofMap, w: Field) -> np.ndarray:
    if w.dofmap is not dofmap:
        raise DofMismatchError("convecting field is defined on a different dof map")
    if w.kind != "velocity":
        raise DofMismatchError("convecting field must be a velocity field")
    return np.ascontiguousarray(w.components[dofmap.element_nodes])  # (E, 6, 2)


def assemble_convection(dofmap: DofMap, w: Field) -> sp.csr_matrix:
    """C(w) with v^T C(w) z = b*(w, z, v); antisymmetric, so v^T C(w) v = 0."""
    g = dofmap.geometry()
    local = kernels.convection_local(_element_coefficients(dofmap, w), g.phi, g.grad, g.wdet)
    return scatter_velocity(dofmap, _diagonal_blocks(local))


def assemble_newton_linearization(dofmap: DofMap, w: Field) -> tuple[sp.csr_matrix, np.ndarray]:
    """Matrix of z -> b*(z, w, v) and the vector b*(w, w, v) over test functions v."""
    g = dofmap.geometry()
    local, local_rhs = kernels.newton_local(_element_coefficients(dofmap, w), g.phi, g.grad, g.wdet)
    mat = scatter_velocity(dofmap, local)
    rhs = np.bincount(dofmap.element_velocity_dofs.ravel(), weights=local_rhs.ravel(), minlength=dofmap.n_u)
    return mat, rhs


def assemble_load(dofmap: DofMap, f, rule=None) -> np.ndarray:
    """Vector of (f, v) for a body force ``f(x, y) -> (fx, fy)``."""
    g = dofmap.geometry(rule)
    x, y = g.points[..., 0], g.points[..., 1]
    fx, fy = (np.broadcast_to(c, x.shape) for c in f(x, y))
    E = x.shape[0]
    local = np.empty((E, 2, 6))
    local[:, 0] = np.einsum("eq,qi,eq->ei", g.wdet, g.phi, fx)
    local[:, 1] = np.einsum("eq,qi,eq->ei", g.wdet, g.phi, fy)
    return np.bincount(dofmap.element_velocity_dofs.ravel(), weights=local.reshape(E, 12).ravel(), minlength=dofmap.n_u)


def pressure_weights(dofmap: DofMap) -> np.ndarray:
    """Integral of each P1 pressure basis function."""
    key = "pressure_weights"
    if key not in dofmap._cache:
        g = dofmap.geometry()
        local = np.einsum("eq,qa->ea", g.wdet, g.psi)
        dofmap._cache[key] = np.bincount(dofmap.mesh.triangles.ravel(), weights=local.ravel(), minlength=dofmap.n_p)
    return dofmap._cache[key]
