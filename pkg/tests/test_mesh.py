import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_facets, det_volume, facet_normal
from stmesh import meshes
from stmesh.errors import MeshError
from stmesh.extrusion import extrude_multi, uniform_levels
from stmesh.mesh import (
    SpaceTimeMesh,
    SpatialMesh,
    check_admissible,
    check_consistent,
    extract_facets,
    make_consistent,
    simplex_measure,
)


def two_triangles(elements=((0, 1, 2), (1, 3, 2))):
    return SpatialMesh([[0, 0], [1, 0], [0, 1], [1, 1]], elements)


# -- consistent numbering ---------------------------------------------------


def test_make_consistent_sorts_elements():
    m = SpatialMesh([[i, i * i] for i in range(8)], [[5, 2, 7]])
    assert make_consistent(m).elements.tolist() == [[2, 5, 7]]
    assert make_consistent(np.array([[2, 5, 7]])).tolist() == [[2, 5, 7]]


def test_shared_face_has_same_order_from_both_sides(rng):
    mesh = make_consistent(meshes.shuffle_nodes(meshes.unit_cube(2), rng))
    els = mesh.elements
    for a, b in itertools.combinations(range(len(els)), 2):
        shared = set(els[a]) & set(els[b])
        if len(shared) >= 2:
            in_a = [v for v in els[a] if v in shared]
            in_b = [v for v in els[b] if v in shared]
            assert in_a == in_b


def test_check_consistent_detects_swapped_pair():
    assert check_consistent(make_consistent(two_triangles())).ok
    rep = check_consistent(two_triangles(((0, 1, 2), (2, 1, 3))))
    assert not rep.ok
    assert rep.pairs == [(0, 1)]


def test_single_element_is_consistent():
    assert check_consistent(SpatialMesh([[0, 0], [1, 0], [0, 1]], [[2, 0, 1]])).ok


# -- admissibility ----------------------------------------------------------


def test_two_triangles_sharing_an_edge_are_admissible():
    assert check_admissible(two_triangles()).ok


def test_hanging_node_is_reported():
    # big triangle (0,1,2) and two small ones on its edge 0-1 with a midpoint 3
    coords = [[0, 0], [2, 0], [0, 2], [1, 0], [0, -1], [2, -1]]
    mesh = SpatialMesh(coords, [[0, 1, 2], [0, 3, 4], [3, 1, 5], [3, 4, 5]])
    rep = check_admissible(mesh)
    assert not rep.ok
    assert any(0 in v[:2] for v in rep.violations)


def test_overlapping_triangles_are_reported():
    mesh = SpatialMesh([[0, 0], [1, 0], [0, 1], [0.2, 0.2], [1.2, 0.2], [0.2, 1.2]], [[0, 1, 2], [3, 4, 5]])
    for method in ("local", "pairwise"):
        assert not check_admissible(mesh, method=method).ok


def test_facet_shared_by_three_elements_is_rejected():
    mesh = SpatialMesh([[0, 0], [1, 0], [0, 1], [0, -1], [1, 1]], [[0, 1, 2], [0, 1, 3], [0, 1, 4]])
    assert not check_admissible(mesh).ok
    with pytest.raises(MeshError):
        extract_facets(mesh)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_local_and_pairwise_methods_agree_on_extrusions(d, rng):
    base = make_consistent(meshes.random_delaunay(12 if d < 3 else 9, d, rng))
    st = extrude_multi(base, uniform_levels(1.0, 2))
    assert check_admissible(st).ok
    assert check_admissible(st, method="pairwise").ok


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.05, 0.6))
def test_local_matches_pairwise_on_perturbed_meshes(seed, scale):
    # moving one interior node far enough folds elements over each other
    rng = np.random.default_rng(seed)
    mesh = meshes.unit_square(3)
    coords = mesh.coords.copy()
    interior = np.flatnonzero((coords > 1e-9).all(axis=1) & (coords < 1 - 1e-9).all(axis=1))
    i = rng.choice(interior)
    coords[i] += scale * rng.uniform(-1, 1, 2)
    moved = mesh.with_coords(coords)
    local = check_admissible(moved)
    pairwise = check_admissible(moved, method="pairwise")
    assert local.ok == pairwise.ok


# -- measures, facets, normals ----------------------------------------------


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_reference_simplex_measure(d):
    ref = np.vstack([np.zeros(d), np.eye(d)])
    assert simplex_measure(ref) == pytest.approx(1 / np.prod(np.arange(1, d + 1)), rel=1e-14)


def test_random_tetrahedron_measure(rng):
    for _ in range(20):
        p = rng.normal(size=(4, 3))
        assert simplex_measure(p) == pytest.approx(det_volume(p), rel=1e-12)


def test_facets_of_two_triangles_and_single_pentatope():
    fs = two_triangles().facets
    assert (len(fs.interior), len(fs.boundary)) == (1, 4)
    one = SpaceTimeMesh(np.vstack([np.zeros(4), np.eye(4)]), [[0, 1, 2, 3, 4]])
    assert (len(one.facets.interior), len(one.facets.boundary)) == (0, 5)


@pytest.mark.parametrize("K", [1, 3])
def test_facet_counts_match_brute_force(K, rng):
    base = make_consistent(meshes.random_delaunay(15, 2, rng))
    st = extrude_multi(base, uniform_levels(1.0, K))
    table = brute_facets(st.elements)
    interior = sum(1 for v in table.values() if len(v) == 2)
    boundary = sum(1 for v in table.values() if len(v) == 1)
    assert len(st.facets.interior) == interior
    assert len(st.facets.boundary) == boundary


def test_normals_orthogonal_to_facets_and_outward(rng):
    base = make_consistent(meshes.random_delaunay(12, 3, rng))
    st = extrude_multi(base, uniform_levels(1.0, 2))
    fs = st.facets
    coords = st.coords
    for f in rng.choice(fs.interior, 30, replace=False):
        nodes = fs.nodes[f]
        nrm = fs.normals[f]
        edges = coords[nodes[1:]] - coords[nodes[0]]
        assert np.abs(edges @ nrm).max() < 1e-12
        k = fs.owners[f, 0]
        centroid = coords[st.elements[k]].mean(axis=0)
        assert np.dot(coords[nodes].mean(axis=0) - centroid, nrm) > 0
        opp = [v for v in st.elements[k] if v not in nodes][0]
        assert np.allclose(facet_normal(coords, tuple(nodes), opp), nrm, atol=1e-12)


def test_slab_bottom_and_top_normals():
    st = extrude_multi(meshes.unit_square(1), uniform_levels(1.0, 1))
    fs = st.facets
    t = st.coords[:, -1]
    for f in fs.boundary:
        tf = t[fs.nodes[f]]
        if np.all(tf == 0):
            assert np.allclose(fs.normals[f], [0, 0, -1])
        elif np.all(tf == 1):
            assert np.allclose(fs.normals[f], [0, 0, 1])
