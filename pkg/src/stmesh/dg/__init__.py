"""Space-time discontinuous Galerkin discretization of transient Stokes flow
(P1 velocity, P0 pressure) on simplex space-time meshes."""
from .forms import (
    ProblemData,
    SolverConfig,
    assemble_a_h,
    assemble_b_p,
    assemble_b_T,
    assemble_d_p,
    dirichlet_dofs,
    l2_project_dirichlet,
    robin_valve,
    valve_coefficients,
)
from .norms import l2_error, l2_error_pressure
from .quadrature import simplex_rule
from .solvers import ILU, BlockDiagPreconditioner, gmres
from .spaces import DgSpace, count_dofs, facet_jump_average_upwind, pressure_space, velocity_space
from .system import BlockSystem, Solution, build_block_system, gmres_solve, solve_stokes
