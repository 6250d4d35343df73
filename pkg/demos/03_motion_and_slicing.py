"""
Moving meshes and time slices
=============================

A membrane pump: the top of a cylinder bulges with a sin^2 pulse. Interior
nodes follow a discrete harmonic extension of the boundary displacement.
Slicing the space-time mesh at t = const gives the domain at that instant;
the sections are tetrahedra and wedges.
"""
import os

import numpy as np

from stmesh import meshes
from stmesh.extrusion import extrude_multi, uniform_levels
from stmesh.io import write_vtk_slice
from stmesh.mesh import check_admissible
from stmesh.motion import MotionSpec, displacement_field
from stmesh.slicing import Hyperplane, slice_mesh

out = os.path.join(os.path.dirname(__file__), "out", "motion")
os.makedirs(out, exist_ok=True)

base = meshes.cylinder()
spec = MotionSpec("pump", amplitude=0.1, z_only=True)
g = displacement_field(base, spec, 0.5)
print("largest displacement at t=1/2:", np.abs(g).max())

st = extrude_multi(base, uniform_levels(1.0, 8), motion=spec)
print(st.num_elements, "pentatopes;", check_admissible(st).summary())

t_star = np.linspace(0.0, 1.0, 11)  # mostly between the slab levels
for i, t in enumerate(t_star):
    sec = slice_mesh(st, t, fields={"time": st.coords[:, -1]})
    write_vtk_slice(os.path.join(out, f"pump_{i:02d}.vtk"), sec)
    print(f"t = {t:.3f}  volume {sec.measure():.6f}  cells {sec.type_counts()}")

# the volume comes back after a full period
v0, v1 = slice_mesh(st, 0.0).measure(), slice_mesh(st, 1.0).measure()
print("relative volume drift over one period:", abs(v1 - v0) / v0)

# oblique planes work too: cut the unit square x [0,1] along x = t
sq = extrude_multi(meshes.unit_square(4), uniform_levels(1.0, 2))
plane = Hyperplane([0.0, 0.0, 0.0], [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
print("\noblique section area:", slice_mesh(sq, plane).measure(), "(sqrt 2 =", np.sqrt(2), ")")
