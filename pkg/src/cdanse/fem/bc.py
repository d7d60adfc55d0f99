"""Dirichlet data for the lid-driven cavity and its strong imposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..mesh import BoundaryTag
from .dofmap import DofMap


@dataclass
class AssembledSystem:
    """Full velocity-pressure system; ``bc_dofs`` are identity rows once constraints are applied."""

    dofmap: DofMap
    matrix: sp.csr_matrix
    rhs: np.ndarray
    bc_dofs: np.ndarray | None = None
    bc_values: np.ndarray | None = None


def dirichlet_data(dofmap: DofMap, lid_value=(1.0, 0.0), pin_pressure: bool = True):
    """Constrained dofs and their values: lid nodes get ``lid_value``, other wall nodes 0.

    The first pressure dof is pinned to 0 when ``pin_pressure`` is set.
    """
    key = ("dirichlet", tuple(float(v) for v in lid_value), pin_pressure)
    if key not in dofmap._cache:
        nodes, tags = dofmap.boundary_nodes
        lid = tags == BoundaryTag.LID
        n = dofmap.n_nodes
        dofs = [nodes, nodes + n]
        vals = [np.where(lid, lid_value[0], 0.0), np.where(lid, lid_value[1], 0.0)]
        if pin_pressure:
            dofs.append(np.array([dofmap.n_u]))
            vals.append(np.array([0.0]))
        dofs = np.concatenate(dofs)
        vals = np.concatenate(vals).astype(float)
        order = np.argsort(dofs)
        dofmap._cache[key] = (dofs[order], vals[order])
    return dofmap._cache[key]


def lift_boundary(dofmap: DofMap, lid_value=(1.0, 0.0)) -> np.ndarray:
    """Velocity vector that is zero in the interior and matches the boundary data."""
    dofs, vals = dirichlet_data(dofmap, lid_value, pin_pressure=False)
    u = np.zeros(dofmap.n_u)
    u[dofs] = vals
    return u


def apply_dirichlet(matrix, rhs, dofs, values):
    """Row replacement with column elimination; constrained rows become identity rows."""
    A = sp.csr_matrix(matrix)
    n = A.shape[0]
    xc = np.zeros(n)
    xc[dofs] = values
    b = np.asarray(rhs, dtype=float) - A @ xc
    b[dofs] = values
    free = np.ones(n)
    free[dofs] = 0.0
    D = sp.diags(free)
    A = (D @ A @ D + sp.diags(1.0 - free)).tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    return A, b


def apply_lid_bc(system: AssembledSystem, lid_value=(1.0, 0.0)) -> AssembledSystem:
    dofs, vals = dirichlet_data(system.dofmap, lid_value)
    A, b = apply_dirichlet(system.matrix, system.rhs, dofs, vals)
    return AssembledSystem(system.dofmap, A, b, dofs, vals)
