"""
Mesh files and the command line
===============================

The native format is plain text: a header, a node block, an element block
and a boundary block with tag names. Coordinates are written with 17
significant digits, so a write/read round trip is exact.
"""
import os

import numpy as np

from stmesh import meshes
from stmesh.cli import main
from stmesh.io import read_mesh, write_mesh

out = os.path.join(os.path.dirname(__file__), "out", "files")
os.makedirs(out, exist_ok=True)
path = os.path.join(out, "square.mesh")

mesh = meshes.random_delaunay(12, 2, np.random.default_rng(1))
write_mesh(path, mesh)
print(open(path).read()[:300], "...\n")

back = read_mesh(path, check=False)
print("exact round trip:", np.array_equal(back.coords, mesh.coords))

# the CLI: check sorts the numbering and writes the fixed mesh,
# extrude and slice build on it
fixed = os.path.join(out, "square_sorted.mesh")
print("\n$ stmesh check")
code = main(["check", "--mesh", path, "--out", fixed])
print("exit code", code, "(3: the input numbering was inconsistent)")
print("\n$ stmesh extrude")
main(["extrude", "--mesh", fixed, "--slabs", "4", "--out", os.path.join(out, "square_st.mesh")])
print("\n$ stmesh slice")
main(["slice", "--mesh", fixed, "--slabs", "4", "--slices", "0.3,0.6", "--out", out])
