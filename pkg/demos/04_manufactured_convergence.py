"""
Convergence on a manufactured solution
======================================

u = sin(pi x) e^-t, p = cos(pi x) e^-t on (0,1) x (0,1), Dirichlet at x=0,
Robin at x=1. Refining space and time together (K = n slabs) the velocity
error in L2 of the space-time domain decreases at about second order.
"""
import math

from stmesh.dg import SolverConfig, l2_error, l2_error_pressure, pressure_space, solve_stokes, velocity_space
from stmesh.dg.problems import manufactured_1d, manufactured_mesh_1d
from stmesh.extrusion import extrude_multi, uniform_levels

data, u_exact, p_exact = manufactured_1d()
config = SolverConfig(rel_tol=1e-10, max_iter=3000)

prev = None
print(f"{'n':>4} {'dofs':>7} {'its':>5} {'|u-uh|':>11} {'|p-ph|':>11} {'order':>6}")
for n in (4, 8, 16, 32):
    st = extrude_multi(manufactured_mesh_1d(n), uniform_levels(1.0, n))
    sol = solve_stokes(st, data, config)
    V, Q = velocity_space(st), pressure_space(st)
    eu = l2_error(V, sol.u, u_exact)
    ep = l2_error_pressure(Q, sol.p, p_exact)
    order = "" if prev is None else f"{math.log2(prev / eu):.2f}"
    print(f"{n:4d} {V.ndofs + Q.ndofs:7d} {sol.iterations:5d} {eu:11.4e} {ep:11.4e} {order:>6}")
    prev = eu
