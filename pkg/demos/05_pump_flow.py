"""
Flow in the membrane pump
=========================

The moving membrane drives the fluid; the valves are Robin patches whose
coefficient switches between open and closed over the period. We assemble
the saddle-point system, solve it with GMRES and the block preconditioner,
and write velocity/pressure slices.

The velocity penalty matters here: on the flat elements of this coarse
cylinder the default value is not large enough for a coercive diffusion
block and GMRES stalls. A larger penalty fixes that.
"""
import os

import numpy as np

from stmesh import meshes
from stmesh.dg import SolverConfig, solve_stokes
from stmesh.dg.problems import pump_problem
from stmesh.errors import SolverError
from stmesh.extrusion import extrude_multi, uniform_levels
from stmesh.io import write_residuals, write_vtk_slice
from stmesh.motion import MotionSpec
from stmesh.slicing import slice_mesh

out = os.path.join(os.path.dirname(__file__), "out", "pump")
os.makedirs(out, exist_ok=True)

spec = MotionSpec("pump", amplitude=0.1, z_only=True)
st = extrude_multi(meshes.cylinder(n_rings=2, n_sectors=6, n_layers=2), uniform_levels(1.0, 4), motion=spec)
data = pump_problem(spec)

for sigma_u in (40.0, 200.0):
    try:
        sol = solve_stokes(st, data, SolverConfig(sigma_u=sigma_u))
        print(f"sigma_u = {sigma_u:g}: {sol.iterations} GMRES iterations")
    except SolverError as exc:
        print(f"sigma_u = {sigma_u:g}: {exc}")

write_residuals(os.path.join(out, "residuals.csv"), sol.residuals)
uk = sol.velocity_nodal()
pk = np.repeat(sol.p[:, None], st.elements.shape[1], axis=1)
for i, t in enumerate((0.25, 0.5, 0.75)):
    sec = slice_mesh(st, t, element_fields={"velocity": uk, "pressure": pk})
    write_vtk_slice(os.path.join(out, f"flow_{i}.vtk"), sec)
    w = sec.point_data["velocity"][:, 2]
    print(f"t = {t}: vertical velocity in [{w.min():+.3f}, {w.max():+.3f}]")
