"""Triangle quadrature rules and Lagrange P1/P2 shape functions in barycentric form.

Local P2 node order: vertices 0, 1, 2, then midpoints of edges (0,1), (1,2), (2,0).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# midpoint (node 3 + k) sits on the edge joining these local vertices
P2_EDGE_VERTICES = ((0, 1), (1, 2), (2, 0))

# gradients of the barycentric coordinates on the reference triangle (0,0),(1,0),(0,1)
_DLAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class TriangleRule:
    """Quadrature on a triangle; ``weights`` sum to 1 and are scaled by the area."""

    bary: np.ndarray  # (Q, 3)
    weights: np.ndarray  # (Q,)
    degree: int

    @property
    def n_points(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def radon7() -> TriangleRule:
    """Seven-point symmetric rule, exact for polynomials of degree 5."""
    s = np.sqrt(15.0)
    a1, b1 = (6 - s) / 21, (9 + 2 * s) / 21
    a2, b2 = (6 + s) / 21, (9 - 2 * s) / 21
    w1, w2 = (155 - s) / 1200, (155 + s) / 1200
    bary = [(1 / 3, 1 / 3, 1 / 3)]
    weights = [9 / 40]
    for a, b, w in ((a1, b1, w1), (a2, b2, w2)):
        bary += [(b, a, a), (a, b, a), (a, a, b)]
        weights += [w, w, w]
    return TriangleRule(np.array(bary), np.array(weights), 5)


@lru_cache(maxsize=None)
def collapsed_gauss(m: int = 8) -> TriangleRule:
    """Duffy-collapsed tensor Gauss-Legendre rule with m^2 points, exact to degree 2m - 2."""
    g, w = np.polynomial.legendre.leggauss(m)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    S, T = np.meshgrid(g, g, indexing="ij")
    WS, WT = np.meshgrid(w, w, indexing="ij")
    x = S.ravel()
    y = ((1.0 - S) * T).ravel()
    weights = (WS * WT * (1.0 - S)).ravel() * 2.0  # reference area is 1/2
    bary = np.column_stack([1.0 - x - y, x, y])
    return TriangleRule(bary, weights, 2 * m - 2)


def p1_values(bary) -> np.ndarray:
    return np.asarray(bary, dtype=float).copy()


def p2_values(bary) -> np.ndarray:
    L = np.asarray(bary, dtype=float)
    out = np.empty(L.shape[:-1] + (6,))
    for i in range(3):
        out[..., i] = L[..., i] * (2.0 * L[..., i] - 1.0)
    for k, (i, j) in enumerate(P2_EDGE_VERTICES):
        out[..., 3 + k] = 4.0 * L[..., i] * L[..., j]
    return out


def p2_reference_gradients(bary) -> np.ndarray:
    """Gradients w.r.t. reference coordinates, shape (..., 6, 2)."""
    L = np.asarray(bary, dtype=float)
    out = np.empty(L.shape[:-1] + (6, 2))
    for i in range(3):
        out[..., i, :] = (4.0 * L[..., i, None] - 1.0) * _DLAMBDA[i]
    for k, (i, j) in enumerate(P2_EDGE_VERTICES):
        out[..., 3 + k, :] = 4.0 * (L[..., i, None] * _DLAMBDA[j] + L[..., j, None] * _DLAMBDA[i])
    return out


def p1_reference_gradients() -> np.ndarray:
    return _DLAMBDA.copy()
