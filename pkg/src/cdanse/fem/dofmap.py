"""Taylor-Hood (P2 velocity / P1 pressure) degree-of-freedom layout.

Global numbering: x-velocity at every P2 node, then y-velocity at every P2
node, then pressure at every vertex. P2 nodes are the mesh vertices (same
index) followed by the edge midpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..mesh import BoundaryTag, Mesh
from .quadrature import P2_EDGE_VERTICES, TriangleRule, p1_values, p2_reference_gradients, p2_values, radon7


class DofMismatchError(ValueError):
    pass


class ElementGeometry:
    """Affine-map data for every triangle evaluated at one quadrature rule."""

    def __init__(self, mesh: Mesh, rule: TriangleRule):
        p = mesh.vertices[mesh.triangles]  # (E, 3, 2)
        J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)  # columns are edge vectors
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        Jinv = np.empty_like(J)
        Jinv[:, 0, 0] = J[:, 1, 1] / det
        Jinv[:, 1, 1] = J[:, 0, 0] / det
        Jinv[:, 0, 1] = -J[:, 0, 1] / det
        Jinv[:, 1, 0] = -J[:, 1, 0] / det
        self.rule = rule
        self.area = 0.5 * det
        self.Jinv = Jinv
        self.phi = p2_values(rule.bary)  # (Q, 6)
        self.psi = p1_values(rule.bary)  # (Q, 3)
        ref = p2_reference_gradients(rule.bary)  # (Q, 6, 2)
        # physical gradient row = reference gradient row @ J^{-1}
        self.grad = np.ascontiguousarray(np.einsum("qik,ekl->eqil", ref, Jinv))  # (E, Q, 6, 2)
        self.wdet = np.ascontiguousarray(self.area[:, None] * rule.weights[None, :])  # (E, Q)
        self.points = np.einsum("qa,ead->eqd", rule.bary, p)  # (E, Q, 2)


@dataclass(eq=False)
class DofMap:
    mesh: Mesh
    edges: np.ndarray  # (n_edges, 2) vertex pairs, sorted
    element_nodes: np.ndarray  # (E, 6) P2 node ids
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self) -> int:
        return self.mesh.n_vertices

    @property
    def n_nodes(self) -> int:
        return self.mesh.n_vertices + len(self.edges)

    @property
    def n_u(self) -> int:
        return 2 * self.n_nodes

    @property
    def n_p(self) -> int:
        return self.mesh.n_vertices

    @property
    def n_dofs(self) -> int:
        return self.n_u + self.n_p

    @cached_property
    def node_coords(self) -> np.ndarray:
        v = self.mesh.vertices
        mid = 0.5 * (v[self.edges[:, 0]] + v[self.edges[:, 1]])
        return np.vstack([v, mid])

    def velocity_dof(self, component: int, node):
        return component * self.n_nodes + np.asarray(node)

    def pressure_dof(self, vertex):
        return self.n_u + np.asarray(vertex)

    @cached_property
    def element_velocity_dofs(self) -> np.ndarray:
        """(E, 12): local index c*6 + i -> global velocity dof."""
        en = self.element_nodes
        return np.hstack([en, en + self.n_nodes])

    @cached_property
    def boundary_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """(node ids, tags) of P2 nodes on the boundary; a node touching a lid edge is tagged LID."""
        mesh = self.mesh
        tag = np.full(self.n_nodes, -1, dtype=np.int64)
        edge_id = self._edge_lookup(mesh.boundary_edges)
        order = np.argsort(mesh.boundary_tags, kind="stable")  # walls first so lid wins at corners
        for b in order:
            t = int(mesh.boundary_tags[b])
            a, c = mesh.boundary_edges[b]
            for node in (a, c, self.n_vertices + edge_id[b]):
                tag[node] = max(tag[node], t)
        nodes = np.flatnonzero(tag >= 0)
        return nodes, tag[nodes]

    @cached_property
    def lid_nodes(self) -> np.ndarray:
        nodes, tags = self.boundary_nodes
        return nodes[tags == BoundaryTag.LID]

    def _edge_lookup(self, pairs) -> np.ndarray:
        pairs = np.sort(np.asarray(pairs), axis=1)
        nv = self.n_vertices
        keys = self.edges[:, 0] * nv + self.edges[:, 1]
        q = pairs[:, 0] * nv + pairs[:, 1]
        pos = np.searchsorted(keys, q)
        if np.any(pos >= len(keys)) or np.any(keys[np.minimum(pos, len(keys) - 1)] != q):
            raise ValueError("edge not present in mesh")
        return pos

    def geometry(self, rule: TriangleRule | None = None) -> ElementGeometry:
        rule = rule or radon7()
        key = ("geometry", rule.bary.tobytes(), rule.weights.tobytes())
        if key not in self._cache:
            self._cache[key] = ElementGeometry(self.mesh, rule)
        return self._cache[key]

    def check_same(self, other: "DofMap"):
        if other is not self:
            raise DofMismatchError("fields live on different dof maps")


def build_dofmap(mesh: Mesh) -> DofMap:
    tri = mesh.triangles
    nv = mesh.n_vertices
    local = np.array(P2_EDGE_VERTICES)
    all_edges = np.sort(tri[:, local].reshape(-1, 2), axis=1)  # (3E, 2)
    keys = all_edges[:, 0] * nv + all_edges[:, 1]
    uniq, inverse = np.unique(keys, return_inverse=True)
    edges = np.column_stack([uniq // nv, uniq % nv])
    element_nodes = np.hstack([tri, nv + inverse.reshape(-1, 3)])
    return DofMap(mesh, edges, element_nodes)


class Field:
    """Coefficient vector on one block of a :class:`DofMap` (``kind`` is 'velocity' or 'pressure')."""

    __slots__ = ("dofmap", "values", "kind")

    def __init__(self, dofmap: DofMap, values, kind: str = "velocity"):
        values = np.asarray(values, dtype=float)
        expected = dofmap.n_u if kind == "velocity" else dofmap.n_p
        if kind not in ("velocity", "pressure"):
            raise ValueError(f"unknown field kind {kind!r}")
        if values.shape != (expected,):
            raise DofMismatchError(f"{kind} field needs {expected} coefficients, got shape {values.shape}")
        self.dofmap = dofmap
        self.values = values
        self.kind = kind

    @classmethod
    def zeros(cls, dofmap: DofMap, kind: str = "velocity") -> "Field":
        n = dofmap.n_u if kind == "velocity" else dofmap.n_p
        return cls(dofmap, np.zeros(n), kind)

    @classmethod
    def interpolate(cls, dofmap: DofMap, fn, kind: str = "velocity") -> "Field":
        """Nodal interpolant of ``fn(x, y)``; velocity callables return a pair of arrays."""
        if kind == "velocity":
            xy = dofmap.node_coords
            ux, uy = fn(xy[:, 0], xy[:, 1])
            n = dofmap.n_nodes
            vals = np.concatenate([np.broadcast_to(ux, n), np.broadcast_to(uy, n)]).astype(float)
        else:
            xy = dofmap.mesh.vertices
            vals = np.broadcast_to(fn(xy[:, 0], xy[:, 1]), dofmap.n_p).astype(float)
        return cls(dofmap, vals, kind)

    @property
    def components(self) -> np.ndarray:
        """(n_nodes, 2) view of a velocity field."""
        if self.kind != "velocity":
            raise ValueError("components are defined for velocity fields only")
        return self.values.reshape(2, -1).T

    def __sub__(self, other: "Field") -> "Field":
        self.dofmap.check_same(other.dofmap)
        return Field(self.dofmap, self.values - other.values, self.kind)

    def __repr__(self):
        return f"Field({self.kind}, n={self.values.size})"
