from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdanse.mesh import BoundaryTag, CoarseGrid, locate_observation_vertices, uniform_cavity_mesh


def test_counts_n2():
    m = uniform_cavity_mesh(2)
    assert m.n_vertices == 9
    assert m.n_triangles == 8
    assert len(m.boundary_edges) == 8
    assert np.sum(m.boundary_tags == BoundaryTag.LID) == 2


def test_counts_n64():
    m = uniform_cavity_mesh(64)
    assert m.n_vertices == 4225
    assert m.n_triangles == 8192


@pytest.mark.parametrize("n", [0, 1, -3, 2.5])
def test_rejects_small_or_fractional_n(n):
    with pytest.raises(ValueError):
        uniform_cavity_mesh(n)


def test_area_exact_oracle_n3():
    m = uniform_cavity_mesh(3)
    # exact rational arithmetic on the lattice coordinates i/3
    total = Fraction(0)
    for tri in m.triangles:
        p = [tuple(Fraction(round(c * 3), 3) for c in m.vertices[v]) for v in tri]
        total += Fraction(1, 2) * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]))
    assert total == 1
    assert abs(m.signed_areas().sum() - 1.0) < 1e-14


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=2, max_value=40))
def test_mesh_invariants(n):
    m = uniform_cavity_mesh(n)
    assert np.all(m.signed_areas() > 0)
    assert abs(m.signed_areas().sum() - 1.0) < 1e-12
    assert m.n_vertices == (n + 1) ** 2 and m.n_triangles == 2 * n * n
    # conforming: each interior edge shared by exactly two triangles, boundary edges by one
    e = np.sort(m.triangles[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert set(counts) <= {1, 2}
    assert np.sum(counts == 1) == len(m.boundary_edges) == 4 * n
    # lid tag iff both endpoints on y = 1
    top = np.all(np.abs(m.vertices[m.boundary_edges, 1] - 1) <= 1e-12, axis=1)
    assert np.array_equal(top, m.boundary_tags == BoundaryTag.LID)


def test_sw_ne_diagonals():
    m = uniform_cavity_mesh(4)
    h = 0.25
    for tri in m.triangles:
        p = m.vertices[tri]
        lo = p.min(axis=0)
        # each triangle contains its square's SW and NE corners
        assert np.any(np.all(np.isclose(p, lo), axis=1))
        assert np.any(np.all(np.isclose(p, lo + h), axis=1))


def test_coarse_grid_midpoints_and_ties():
    g = CoarseGrid(2)
    np.testing.assert_allclose(g.cell_midpoints, [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])
    assert g.H == 0.5
    # a point on the shared edge x = 0.5 goes to the lower-index cell
    assert g.cell_of([[0.5, 0.1]])[0] == 0
    assert list(g.cell_of([[0.0, 0.0], [1.0, 1.0], [0.6, 0.6]])) == [0, 3, 3]
    with pytest.raises(ValueError):
        CoarseGrid(0)


def test_observation_vertices_on_lattice():
    m = uniform_cavity_mesh(4)
    g = CoarseGrid(2)
    idx = locate_observation_vertices(m, g)
    np.testing.assert_array_equal(m.vertices[idx], g.cell_midpoints)


def test_observation_vertices_brute_force_n3():
    m = uniform_cavity_mesh(3)
    g = CoarseGrid(2)
    idx = locate_observation_vertices(m, g)
    for k, mid in enumerate(g.cell_midpoints):
        dists = [np.hypot(*(v - mid)) for v in m.vertices]
        best = min(dists)
        assert dists[idx[k]] == best
        assert idx[k] == dists.index(best)
        assert best <= np.sqrt(2) / 6 + 1e-15


@pytest.mark.parametrize("n,N", [(64, 10), (64, 20), (32, 10), (8, 4)])
def test_observation_vertices_injective(n, N):
    idx = locate_observation_vertices(uniform_cavity_mesh(n), CoarseGrid(N))
    assert len(idx) == N * N
    assert len(np.unique(idx)) == N * N
