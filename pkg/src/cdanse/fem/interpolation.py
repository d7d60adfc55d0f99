"""Coarse-grid interpolant I_H and the nudging operator built on it."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..mesh import CoarseGrid
from .dofmap import DofMap, DofMismatchError, Field


class IHMode(str, enum.Enum):
    POINT_VALUE = "point_value"
    CELL_AVERAGE = "cell_average"


def interpolation_matrix(dofmap: DofMap, grid: CoarseGrid, mode=IHMode.POINT_VALUE, obs_vertices=None) -> sp.csr_matrix:
    """Scalar map (N^2 x n_nodes) from nodal values to piecewise-constant cell values."""
    mode = IHMode(mode)
    if mode is IHMode.POINT_VALUE:
        if obs_vertices is None:
            raise ValueError("point-value interpolation needs one observation vertex per cell")
        obs = np.asarray(obs_vertices, dtype=np.int64)
        if obs.shape != (grid.n_cells,):
            raise ValueError(f"expected {grid.n_cells} observation vertices, got {obs.shape}")
        if obs.min() < 0 or obs.max() >= dofmap.n_vertices:
            raise IndexError("observation vertex out of range")
        return sp.csr_matrix((np.ones(grid.n_cells), (np.arange(grid.n_cells), obs)), shape=(grid.n_cells, dofmap.n_nodes))

    n = dofmap.mesh.n
    if n % grid.N:
        raise ValueError(f"cell averages need coarse cells made of whole fine cells (n={n} not divisible by N={grid.N})")
    key = ("cell_average", grid.N)
    if key not in dofmap._cache:
        g = dofmap.geometry()
        centroid = dofmap.mesh.vertices[dofmap.mesh.triangles].mean(axis=1)
        cell = grid.cell_of(centroid)
        local = np.einsum("eq,qi->ei", g.wdet, g.phi) / grid.cell_area
        rows = np.repeat(cell, 6)
        A = sp.coo_matrix((local.ravel(), (rows, dofmap.element_nodes.ravel())), shape=(grid.n_cells, dofmap.n_nodes))
        dofmap._cache[key] = A.tocsr()
    return dofmap._cache[key]


def interpolate_IH(u: Field, grid: CoarseGrid, mode=IHMode.POINT_VALUE, obs_vertices=None) -> np.ndarray:
    """Cell values (N^2, 2) of I_H u."""
    P = interpolation_matrix(u.dofmap, grid, mode, obs_vertices)
    c = u.components
    return np.column_stack([P @ c[:, 0], P @ c[:, 1]])


@dataclass
class NudgingOperator:
    """mu (I_H u, I_H v) as a velocity-block matrix plus the data-to-load map."""

    matrix: sp.csr_matrix
    interp: sp.csr_matrix
    mu: float
    cell_area: float

    def rhs(self, cell_values) -> np.ndarray:
        """Vector of mu (I_H d, I_H v) for observed cell values d of shape (N^2, 2)."""
        d = np.asarray(cell_values, dtype=float)
        if d.shape != (self.interp.shape[0], 2):
            raise ValueError(f"expected cell values of shape {(self.interp.shape[0], 2)}, got {d.shape}")
        s = self.mu * self.cell_area
        PT = self.interp.T
        return s * np.concatenate([PT @ d[:, 0], PT @ d[:, 1]])


def assemble_nudging(dofmap: DofMap, grid: CoarseGrid, obs_vertices=None, mu: float = 1.0, mode=IHMode.POINT_VALUE) -> NudgingOperator:
    if mu < 0:
        raise ValueError(f"nudging parameter must be nonnegative, got {mu}")
    P = interpolation_matrix(dofmap, grid, mode, obs_vertices)
    block = (P.T @ P).tocsr()
    M = sp.block_diag([block, block], format="csr") * (mu * grid.cell_area)
    M.sum_duplicates()
    M.sort_indices()
    return NudgingOperator(M, P, float(mu), grid.cell_area)


def check_velocity(u: Field, dofmap: DofMap):
    if u.dofmap is not dofmap or u.kind != "velocity":
        raise DofMismatchError("expected a velocity field on this dof map")
