import math

import numpy as np
import pytest
from scipy.io import mmread

from stmesh import meshes
from stmesh.dg import (
    ProblemData,
    SolverConfig,
    build_block_system,
    gmres_solve,
    l2_error,
    l2_error_pressure,
    pressure_space,
    solve_stokes,
    velocity_space,
)
from stmesh.dg.problems import constant_flow, manufactured_1d, manufactured_mesh_1d, pump_problem
from stmesh.errors import SolverError
from stmesh.extrusion import extrude_multi, uniform_levels
from stmesh.motion import MotionSpec


def test_zero_data_gives_zero_solution():
    st = extrude_multi(meshes.unit_square(2), uniform_levels(1.0, 2))
    sol = solve_stokes(st, ProblemData())
    assert np.all(sol.u == 0) and np.all(sol.p == 0)
    assert sol.iterations == 0


@pytest.mark.parametrize("mesh, c", [(meshes.interval(6), [0.7]), (meshes.unit_square(3), [1.0, -2.0])])
def test_patch_test(mesh, c):
    st = extrude_multi(mesh, uniform_levels(1.0, 3))
    sol = solve_stokes(st, constant_flow(c), SolverConfig(rel_tol=1e-13, max_iter=3000))
    assert np.abs(sol.velocity_nodal() - np.array(c)).max() < 1e-9
    # the pressure is determined up to functions of time only
    B = sol.system.B  # free velocity dofs only
    assert np.linalg.norm(B.T @ sol.p) < 1e-8 * max(1.0, np.linalg.norm(sol.p))


def test_manufactured_solution_converges():
    data, u_ex, p_ex = manufactured_1d()
    errors = []
    for n in (4, 8, 16):
        st = extrude_multi(manufactured_mesh_1d(n), uniform_levels(1.0, n))
        sol = solve_stokes(st, data, SolverConfig(rel_tol=1e-10, max_iter=2000))
        errors.append((l2_error(velocity_space(st), sol.u, u_ex), l2_error_pressure(pressure_space(st), sol.p, p_ex)))
    orders = [math.log2(errors[i][0] / errors[i + 1][0]) for i in range(2)]
    assert min(orders) > 1.4
    assert errors[2][1] < errors[1][1] < errors[0][1]


def test_block_structure_and_rhs():
    st = extrude_multi(meshes.unit_square(2), uniform_levels(1.0, 2))
    V, Q = velocity_space(st), pressure_space(st)
    system = build_block_system(V, Q, constant_flow([1.0, 0.0]), SolverConfig())
    assert system.K.shape == (system.nu, system.nu)
    assert system.B.shape == (Q.ndofs, system.nu)
    assert system.matrix().shape == (system.nu + system.np,) * 2
    # the Dirichlet extension of a constant is exact on the touched elements
    ug = V.split(system.u_g)
    touched = np.abs(ug).sum(axis=(1, 2)) > 0
    assert np.allclose(ug[touched], [1.0, 0.0])


def test_matrix_market_export(tmp_path):
    st = extrude_multi(meshes.interval(3), uniform_levels(1.0, 2))
    V, Q = velocity_space(st), pressure_space(st)
    system = build_block_system(V, Q, constant_flow([1.0]), SolverConfig())
    paths = system.write_matrix_market(str(tmp_path / "sys"))
    K = mmread(paths[0]).toarray()
    assert np.array_equal(K, system.K.toarray())
    rhs = np.asarray(mmread(paths[3])).ravel()
    assert np.array_equal(rhs, system.rhs())


def test_solver_failure_is_reported():
    st = extrude_multi(meshes.unit_square(3), uniform_levels(1.0, 2))
    V, Q = velocity_space(st), pressure_space(st)
    config = SolverConfig(max_iter=2, rel_tol=1e-12)
    system = build_block_system(V, Q, constant_flow([1.0, 1.0]), config)
    with pytest.raises(SolverError) as info:
        gmres_solve(system, config)
    assert len(info.value.residuals) == 3


def test_coarse_pump_runs():
    spec = MotionSpec("pump", amplitude=0.1, z_only=True)
    base = meshes.cylinder(n_rings=2, n_sectors=4, n_layers=2)
    st = extrude_multi(base, uniform_levels(1.0, 2), motion=spec)
    sol = solve_stokes(st, pump_problem(spec), SolverConfig(sigma_u=200))
    assert sol.iterations < 500
    assert np.all(np.isfinite(sol.u))
    # membrane velocity is imposed on the moving boundary
    assert np.abs(sol.u).max() > 0
