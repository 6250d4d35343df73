import math

import numpy as np
import pytest

from stmesh import meshes
from stmesh.extrusion import extrude_multi, uniform_levels
from stmesh.mesh import BoundaryTag, check_admissible
from stmesh.motion import (
    MotionSpec,
    TabulatedDisplacement,
    displacement_field,
    eval_motion,
    laplace_matrix,
    smooth_displacement,
)
from stmesh.slicing import slice_mesh


def test_pump_rest_shape_has_no_displacement():
    spec = MotionSpec("pump")
    assert np.allclose(eval_motion(spec, [0, 0, 0.4], 0.0), 0.0)


def test_pump_half_period_centre():
    assert np.allclose(eval_motion(MotionSpec("pump"), [0, 0, 0.4], 0.5), [0, 0, 1.0], atol=1e-15)


def test_pump_full_point_formula_drags_points_to_the_axis():
    g = eval_motion(MotionSpec("pump"), [0.3, -0.2, 0.4], 0.0)
    assert np.allclose(g, [-0.3, 0.2, 0.0])
    g = eval_motion(MotionSpec("pump", z_only=True), [0.3, -0.2, 0.4], 0.0)
    assert np.allclose(g, 0.0)


def test_ypipe_anchor_does_not_move():
    spec = MotionSpec("ypipe")
    for t in (0.0, 0.3, 0.5, 1.0):
        assert np.allclose(eval_motion(spec, [1.0, 2.0, -3.0], t), 0.0)
    assert eval_motion(spec, [0, 0, 4.0], 0.5)[2] == pytest.approx(4.0)


def test_time_outside_interval_is_rejected():
    with pytest.raises(ValueError):
        eval_motion(MotionSpec("pump"), [0, 0, 0], 1.5)


def test_smoothing_zero_and_constant_data():
    mesh = meshes.unit_square(4)
    n = mesh.num_nodes
    assert np.array_equal(smooth_displacement(mesh, np.zeros((n, 2))), np.zeros((n, 2)))
    c = np.tile([0.1, -0.2], (n, 1))
    assert np.allclose(smooth_displacement(mesh, c), c, atol=1e-12)


def test_smoothing_reproduces_affine_data(rng):
    mesh = meshes.random_delaunay(30, 2, rng)
    A = rng.normal(size=(2, 2))
    b = rng.normal(size=2)
    data = mesh.coords @ A.T + b
    out = smooth_displacement(mesh, data, rtol=1e-14)
    assert np.abs(out - data).max() < 1e-10
    # dense oracle for the interior solve
    L = laplace_matrix(mesh).toarray()
    bnd = mesh.boundary_nodes
    inner = np.setdiff1d(np.arange(mesh.num_nodes), bnd)
    x = np.linalg.solve(L[np.ix_(inner, inner)], -L[np.ix_(inner, bnd)] @ data[bnd])
    assert np.abs(out[inner] - x).max() < 1e-10


def test_boundary_only_policy_moves_only_tagged_nodes():
    mesh = meshes.cylinder()
    spec = MotionSpec("pump", amplitude=0.1, z_only=True, smoothing="boundary")
    g = displacement_field(mesh, spec, 0.5)
    moving = mesh.nodes_with_tags({BoundaryTag.DIRICHLET_MOVING})
    still = np.setdiff1d(np.arange(mesh.num_nodes), moving)
    assert np.all(g[still] == 0)
    assert np.abs(g[moving]).max() > 0


def test_tabulated_displacement_is_linear_in_time():
    tab = TabulatedDisplacement(np.array([0.0, 1.0]), np.array([np.zeros((3, 2)), np.ones((3, 2))]))
    assert np.allclose(tab.at_nodes(0.25), 0.25)
    with pytest.raises(ValueError):
        tab.at_nodes(2.0)


def test_pump_motion_keeps_the_mesh_valid_and_volume_periodic():
    spec = MotionSpec("pump", amplitude=0.1, z_only=True)
    st = extrude_multi(meshes.cylinder(), uniform_levels(1.0, 8), motion=spec)
    assert check_admissible(st).ok
    v0 = slice_mesh(st, 0.0).measure()
    v1 = slice_mesh(st, 1.0).measure()
    vmid = slice_mesh(st, 0.5).measure()
    assert abs(v1 - v0) <= 1e-8 * v0
    assert vmid > v0


def test_membrane_volume_gain_matches_the_paraboloid():
    # the membrane lifts by a (1 - r^2/R^2): added volume pi a R^2 / 2
    spec = MotionSpec("pump", amplitude=0.1, z_only=True)
    base = meshes.cylinder(n_sectors=24, n_rings=4)
    st = extrude_multi(base, [0.0, 0.5], motion=spec)
    gain = slice_mesh(st, 0.5).measure() - slice_mesh(st, 0.0).measure()
    assert gain == pytest.approx(math.pi * 0.1 * 0.75**2 / 2, rel=0.05)
