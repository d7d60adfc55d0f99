"""Structured triangulations of the unit square and coarse observation grids."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

_Y_TOL = 1e-12


class BoundaryTag(enum.IntEnum):
    WALL = 0
    LID = 1


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangular mesh of (0, 1)^2.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise
    boundary_edges : (nb, 2) int array of vertex pairs
    boundary_tags : (nb,) int array of :class:`BoundaryTag` values
    n : cells per side of the generating grid
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    n: int

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def lid_vertices(self) -> np.ndarray:
        lid = self.boundary_edges[self.boundary_tags == BoundaryTag.LID]
        return np.unique(lid)


def uniform_cavity_mesh(n: int) -> Mesh:
    """Uniform n x n grid of the unit square, each square cut along its SW-NE diagonal."""
    if int(n) != n or n < 2:
        raise ValueError(f"mesh resolution n must be an integer >= 2, got {n!r}")
    n = int(n)
    ticks = np.linspace(0.0, 1.0, n + 1)
    # exact endpoints matter for the lid tag rule
    ticks[0], ticks[-1] = 0.0, 1.0
    X, Y = np.meshgrid(ticks, ticks)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)  # idx[j, i] -> (x_i, y_j)
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[1:, :-1].ravel()
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    bottom = np.column_stack([idx[0, :-1], idx[0, 1:]])
    right = np.column_stack([idx[:-1, -1], idx[1:, -1]])
    top = np.column_stack([idx[-1, 1:], idx[-1, :-1]])
    left = np.column_stack([idx[1:, 0], idx[:-1, 0]])
    boundary_edges = np.vstack([bottom, right, top, left]).astype(np.int64)
    on_top = np.abs(vertices[boundary_edges, 1] - 1.0) <= _Y_TOL
    tags = np.where(on_top.all(axis=1), BoundaryTag.LID, BoundaryTag.WALL).astype(np.int8)

    for arr in (vertices, triangles, boundary_edges, tags):
        arr.setflags(write=False)
    return Mesh(vertices, triangles, boundary_edges, tags, n)


@dataclass(frozen=True)
class CoarseGrid:
    """N x N partition of the unit square into square cells, numbered row-major (x fastest)."""

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"coarse grid size N must be an integer >= 1, got {self.N!r}")

    @property
    def H(self) -> float:
        return 1.0 / self.N

    @property
    def n_cells(self) -> int:
        return self.N * self.N

    @property
    def cell_area(self) -> float:
        return self.H * self.H

    @cached_property
    def cell_midpoints(self) -> np.ndarray:
        c = (np.arange(self.N) + 0.5) / self.N
        X, Y = np.meshgrid(c, c)
        return np.column_stack([X.ravel(), Y.ravel()])

    def cell_of(self, points) -> np.ndarray:
        """Cell index of each point; points on a shared cell edge go to the lower index."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        ij = np.clip(np.ceil(p * self.N).astype(np.int64) - 1, 0, self.N - 1)
        return ij[:, 1] * self.N + ij[:, 0]


def locate_observation_vertices(mesh: Mesh, grid: CoarseGrid) -> np.ndarray:
    """Index of the mesh vertex nearest each coarse-cell midpoint (ties -> smallest index)."""
    mid = grid.cell_midpoints
    out = np.empty(len(mid), dtype=np.int64)
    verts = mesh.vertices
    for k, m in enumerate(mid):
        d2 = np.sum((verts - m) ** 2, axis=1)
        out[k] = int(np.argmin(d2))  # argmin returns the first minimiser
    return out
