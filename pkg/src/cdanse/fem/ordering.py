"""Geometric nested-dissection ordering of the velocity-pressure dofs.

On the structured cavity mesh every grid line is a vertex separator of the
P2/P1 dof graph (no element straddles it), so recursive bisection along grid
lines yields a fill-reducing elimination order without a graph partitioner.
"""

from __future__ import annotations

import numpy as np

from .dofmap import DofMap


def nested_dissection_order(dofmap: DofMap, leaf_size: int = 16) -> np.ndarray:
    """Permutation of all dofs: both halves recursively, then the separator line.

    Inside every block velocity dofs precede pressure dofs.
    """
    key = ("nd_order", leaf_size)
    if key in dofmap._cache:
        return dofmap._cache[key]
    n = dofmap.mesh.n
    # coordinates in units of h/2: vertices even, edge midpoints may be odd
    node = np.rint(dofmap.node_coords * 2 * n).astype(np.int64)
    vert = np.rint(dofmap.mesh.vertices * 2 * n).astype(np.int64)
    coords = np.vstack([node, node, vert])
    is_pressure = np.r_[np.zeros(dofmap.n_u, dtype=np.int8), np.ones(dofmap.n_p, dtype=np.int8)]

    blocks = []

    def emit(idx):
        blocks.append(idx[np.argsort(is_pressure[idx], kind="stable")])

    def split(idx, box):
        x0, x1, y0, y1 = box
        axis = 0 if x1 - x0 >= y1 - y0 else 1
        lo, hi = (x0, x1) if axis == 0 else (y0, y1)
        cut = (lo + hi) // 2
        cut -= cut % 2  # separators lie on grid lines
        if len(idx) <= leaf_size or cut <= lo or cut >= hi:
            emit(idx)
            return
        c = coords[idx, axis]
        if axis == 0:
            split(idx[c < cut], (x0, cut, y0, y1))
            split(idx[c > cut], (cut, x1, y0, y1))
        else:
            split(idx[c < cut], (x0, x1, y0, cut))
            split(idx[c > cut], (x0, x1, cut, y1))
        emit(idx[c == cut])

    split(np.arange(dofmap.n_dofs), (0, 2 * n, 0, 2 * n))
    perm = np.concatenate(blocks)
    dofmap._cache[key] = perm
    return perm
