import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from faultdarcy.mesh import (COORD_TOL, DegenerateCellError, EdgeTag, Mesh, ProblemGeometry,
                             build_structured, mesh_from_arrays, read_mesh, refine, uniform_refine)


def gamma_union(mesh):
    g = mesh.edge_tags == EdgeTag.GAMMA
    pts = mesh.vertices[mesh.edges[g]]
    return pts, mesh.edge_lengths[g]


def assert_gamma_is_segment(mesh, y0=0.25, y1=0.75):
    pts, lengths = gamma_union(mesh)
    assert np.all(np.abs(pts[..., 0] - 0.5) < COORD_TOL)
    assert pts[..., 1].min() == pytest.approx(y0, abs=1e-12)
    assert pts[..., 1].max() == pytest.approx(y1, abs=1e-12)
    assert lengths.sum() == pytest.approx(y1 - y0, abs=1e-12)


def test_structured_counts():
    m = build_structured(4)
    assert (m.n_cells, m.n_vertices, m.n_edges) == (32, 25, 56)
    assert m.n_edges == m.n_vertices + m.n_cells - 1
    assert m.is_conforming()


def test_structured_gamma_edges():
    m = build_structured(4)
    g = np.flatnonzero(m.edge_tags == EdgeTag.GAMMA)
    assert len(g) == 2
    segs = sorted(tuple(sorted(map(tuple, m.vertices[m.edges[e]]))) for e in g)
    assert segs == [((0.5, 0.25), (0.5, 0.5)), ((0.5, 0.5), (0.5, 0.75))]


def test_fault_flow_boundary_tags():
    m = build_structured(4, ProblemGeometry.fault_flow())
    assert np.sum(m.edge_tags == EdgeTag.NEUMANN) == 8
    assert np.sum(m.edge_tags == EdgeTag.DIRICHLET) == 8
    neu = m.vertices[m.edges[m.edge_tags == EdgeTag.NEUMANN]]
    assert np.all((np.abs(neu[..., 1]) < 1e-12) | (np.abs(neu[..., 1] - 1) < 1e-12))


@pytest.mark.parametrize("n", [0, 6, 10, -4])
def test_structured_rejects_misaligned(n):
    with pytest.raises(ValueError):
        build_structured(n)


def test_refine_empty_is_identity():
    m = build_structured(4)
    r = refine(m, [])
    assert (r.n_cells, r.n_edges, r.n_vertices) == (m.n_cells, m.n_edges, m.n_vertices)
    np.testing.assert_array_equal(r.edge_tags, m.edge_tags)
    np.testing.assert_array_equal(r.cells, m.cells)


def test_refine_all():
    m = build_structured(4)
    r = refine(m, range(m.n_cells))
    assert r.n_cells >= 64
    assert r.is_conforming()
    # every coarse cell has at least two children
    assert np.all(np.bincount(r.parent, minlength=m.n_cells) >= 2)


def test_refine_single_cell_closure():
    m = build_structured(4)
    interior = 10
    r = refine(m, [interior])
    assert r.is_conforming()
    assert r.n_cells >= m.n_cells + 2
    assert np.sum(r.parent == interior) >= 2


def test_geometry_queries(unit_triangle):
    m = unit_triangle
    assert m.areas[0] == 0.5
    e = np.flatnonzero((m.edges == [0, 2]).all(axis=1))[0]
    assert m.edge_lengths[e] == 1.0
    np.testing.assert_allclose(np.abs(m.edge_normals[e]), [1.0, 0.0])
    small = mesh_from_arrays([(0, 0), (0.25, 0), (0, 0.25)], [(1, 2, 0)])
    assert small.diameters[0] == pytest.approx(np.sqrt(2) / 4, rel=1e-15)


def test_normals_unit_and_gamma_orientation():
    m = build_structured(8)
    np.testing.assert_allclose(np.linalg.norm(m.edge_normals, axis=1), 1.0, atol=1e-15)
    g = m.edge_tags == EdgeTag.GAMMA
    np.testing.assert_allclose(m.edge_normals[g], np.tile([1.0, 0.0], (g.sum(), 1)))
    # each interior edge is outward for exactly one neighbour
    inner = m.edge_cells[:, 1] >= 0
    signs = np.zeros(m.n_edges)
    np.add.at(signs, m.cell_edges.ravel(), m.outward_signs.ravel())
    np.testing.assert_array_equal(signs[inner], 0.0)


def test_degenerate_cell_rejected():
    with pytest.raises(DegenerateCellError):
        mesh_from_arrays([(0, 0), (1, 0), (2, 0)], [(0, 1, 2)])


def test_hanging_node_detected():
    # cell 0 keeps the diagonal whole while cells 1 and 2 split it at (1/2, 1/2)
    verts = np.array([(0, 0), (1, 0), (0, 1), (1, 1), (0.5, 0.5)], dtype=float)

    def tags(edges, edge_cells):
        return np.where(edge_cells[:, 1] < 0, EdgeTag.DIRICHLET, EdgeTag.INTERIOR)

    bad = Mesh.from_cells(verts, np.array([(1, 2, 0), (1, 3, 4), (3, 2, 4)]), tags)
    assert not bad.is_conforming()


def _random_refinements(seed, steps, n=4):
    rng = np.random.default_rng(seed)
    m = build_structured(n)
    meshes = [m]
    for _ in range(steps):
        k = rng.integers(1, max(2, m.n_cells // 5))
        m = refine(m, rng.choice(m.n_cells, size=k, replace=False))
        meshes.append(m)
    return meshes


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_refinement_invariants(seed):
    meshes = _random_refinements(seed, 6)
    floor = meshes[0].cell_min_angles().min()
    for m in meshes:
        assert m.is_conforming()
        assert m.areas.sum() == pytest.approx(1.0, abs=1e-12)
        assert_gamma_is_segment(m)
        assert m.cell_min_angles().min() >= floor - 1e-12


def test_min_angle_over_ten_refinements():
    meshes = _random_refinements(7, 10)
    # the structured mesh has one similarity class (right isosceles) which
    # newest-vertex bisection preserves
    for m in meshes:
        assert m.cell_min_angles().min() == pytest.approx(np.pi / 4, abs=1e-12)


def test_boundary_tags_inherited():
    m = uniform_refine(build_structured(4, ProblemGeometry.fault_flow()), 3)
    neu = m.vertices[m.edges[m.edge_tags == EdgeTag.NEUMANN]]
    assert np.all((np.abs(neu[..., 1]) < 1e-12) | (np.abs(neu[..., 1] - 1) < 1e-12))
    dirich = m.vertices[m.edges[m.edge_tags == EdgeTag.DIRICHLET]]
    assert np.all((np.abs(dirich[..., 0]) < 1e-12) | (np.abs(dirich[..., 0] - 1) < 1e-12))
    assert m.edge_lengths[m.edge_tags == EdgeTag.NEUMANN].sum() == pytest.approx(2.0)


def test_refine_is_pure():
    m = build_structured(4)
    cells = m.cells.copy()
    refine(m, [0, 1, 2])
    np.testing.assert_array_equal(m.cells, cells)
    with pytest.raises(ValueError):
        m.cells[0, 0] = 5


def test_dump_round_trip(tmp_path):
    m = refine(build_structured(4), [3, 17])
    path = tmp_path / "mesh.txt"
    m.dump(path)
    head = path.read_text().splitlines()[0]
    assert head == f"mesh {m.n_vertices} {m.n_cells} {m.n_edges}"
    r = read_mesh(path)
    np.testing.assert_array_equal(r.vertices, m.vertices)
    np.testing.assert_array_equal(r.cells, m.cells)
    np.testing.assert_array_equal(r.edge_tags, m.edge_tags)
