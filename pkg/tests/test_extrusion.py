import math

import numpy as np
import pytest

from oracles import det_volume
from stmesh import meshes
from stmesh.dg import count_dofs
from stmesh.errors import DegenerateElementError, InconsistentNumberingError
from stmesh.extrusion import (
    Hyperprism,
    SlabSpec,
    classify_boundary,
    decompose_hyperprism,
    extrude_multi,
    extrude_slab,
    prism_pattern,
    uniform_levels,
)
from stmesh.mesh import BoundaryClass, BoundaryTag, SpatialMesh, check_admissible, make_consistent


def test_prism_pattern_d1():
    assert prism_pattern(1).tolist() == [[0, 1, 2], [1, 2, 3]]


def test_segment_splits_into_two_half_unit_triangles():
    pieces = decompose_hyperprism(Hyperprism(np.array([[0.0], [1.0]]), 1.0))
    # [e0', e1', e0''] and [e1', e0'', e1'']
    assert pieces[0].tolist() == [[0, 0], [1, 0], [0, 1]]
    assert pieces[1].tolist() == [[1, 0], [0, 1], [1, 1]]
    assert [det_volume(p) for p in pieces] == pytest.approx([0.5, 0.5], rel=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_reference_prism_pieces_have_equal_volume(d):
    ref = np.vstack([np.zeros(d), np.eye(d)])
    vols = [det_volume(p) for p in decompose_hyperprism(Hyperprism(ref, 1.0))]
    assert vols == pytest.approx([1 / math.factorial(d + 1)] * (d + 1), rel=1e-13)


def test_random_tetrahedron_prism_volume(rng):
    for _ in range(10):
        base = rng.normal(size=(4, 3))
        pieces = decompose_hyperprism(Hyperprism(base, 0.3))
        assert len(pieces) == 4
        assert sum(det_volume(p) for p in pieces) == pytest.approx(det_volume(base) * 0.3, rel=1e-12)


def test_degenerate_prism_is_refused():
    with pytest.raises(DegenerateElementError):
        decompose_hyperprism(Hyperprism(np.array([[0.0, 0], [1, 0], [2, 0]]), 1.0))
    with pytest.raises(DegenerateElementError):
        decompose_hyperprism(Hyperprism(np.eye(3)[:, :2], 0.0))


def two_triangles(elements=((0, 1, 2), (1, 2, 3))):
    return SpatialMesh([[0, 0], [1, 0], [0, 1], [1, 1]], elements)


def test_one_slab_of_two_triangles():
    st = extrude_slab(two_triangles(), SlabSpec(0.0, 1.0))
    assert st.num_elements == 6
    assert check_admissible(st).ok


def test_single_tetrahedron_gives_four_pentatopes():
    tet = SpatialMesh(np.vstack([np.zeros(3), np.eye(3)]), [[0, 1, 2, 3]])
    assert extrude_multi(tet, [0.0, 1.0]).num_elements == 4


def test_broken_ordering_is_refused():
    with pytest.raises(InconsistentNumberingError):
        extrude_multi(two_triangles(((0, 1, 2), (2, 1, 3))), [0.0, 1.0])


def test_unit_square_four_slabs():
    st = extrude_multi(two_triangles(), uniform_levels(1.0, 4))
    assert st.num_elements == 24
    assert st.measures.sum() == pytest.approx(1.0, rel=1e-14)
    assert check_admissible(st).ok


def test_single_slab_matches_extrude_slab():
    a = extrude_multi(two_triangles(), [0.0, 0.5])
    b = extrude_slab(two_triangles(), SlabSpec(0.0, 0.5))
    assert np.array_equal(a.coords, b.coords)
    assert np.array_equal(a.elements, b.elements)


def test_slab_interfaces_share_nodes():
    base = meshes.unit_square(2)
    st = extrude_multi(base, uniform_levels(1.0, 3))
    assert st.num_nodes == 4 * base.num_nodes
    assert np.array_equal(st.spatial_node, np.tile(np.arange(base.num_nodes), 4))


def test_dof_relation_for_pentatope_meshes():
    tet = SpatialMesh(np.vstack([np.zeros(3), np.eye(3)]), [[0, 1, 2, 3]])
    st = extrude_multi(tet, uniform_levels(1.0, 2))
    assert count_dofs(num_elements=st.num_elements, d=3) == 15 * st.num_elements
    assert count_dofs(num_elements=951360, d=3) == 14_270_400


def test_boundary_classes():
    tags = {(0, 1): BoundaryTag.ROBIN_IN}
    base = SpatialMesh([[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 1, 2], [1, 2, 3]], tags)
    st = extrude_multi(base, uniform_levels(1.0, 2))
    fs = st.facets
    t = st.coords[:, -1]
    assert len(st.boundary_class) == len(fs.boundary)
    for f, cls, tag in zip(fs.boundary, st.boundary_class, st.boundary_tag):
        tf = t[fs.nodes[f]]
        if np.all(tf == 0):
            assert cls == BoundaryClass.SIGMA0
        elif np.all(tf == 1):
            assert cls == BoundaryClass.SIGMAT
        else:
            y = st.coords[fs.nodes[f], 1]
            expected = BoundaryClass.SIGMAR if np.all(y == 0) else BoundaryClass.SIGMAD
            assert cls == expected
            assert (tag == BoundaryTag.ROBIN_IN) == (cls == BoundaryClass.SIGMAR)
    counts = {c: sum(1 for x in st.boundary_class if x == c) for c in BoundaryClass}
    assert counts[BoundaryClass.SIGMA0] == counts[BoundaryClass.SIGMAT] == 2
    assert counts[BoundaryClass.SIGMAR] == 2 * 2  # one edge, two slabs, two triangles each


def test_classification_requires_origin_data():
    st = extrude_multi(two_triangles(), [0.0, 1.0])
    from stmesh.mesh import SpaceTimeMesh
    from stmesh.errors import MeshError

    bare = SpaceTimeMesh(st.coords, st.elements)
    with pytest.raises(MeshError):
        classify_boundary(bare, two_triangles())


def test_unsorted_input_is_accepted_after_make_consistent(rng):
    base = meshes.shuffle_nodes(meshes.unit_square(3), rng)
    with pytest.raises(InconsistentNumberingError):
        extrude_multi(base, [0.0, 1.0])
    st = extrude_multi(make_consistent(base), uniform_levels(2.0, 3))
    assert st.measures.sum() == pytest.approx(2.0, rel=1e-13)
    assert check_admissible(st).ok
