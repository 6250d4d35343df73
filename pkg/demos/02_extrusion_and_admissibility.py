"""
Extruding a spatial mesh into space-time
========================================

Elements must be numbered consistently: two elements sharing nodes list them
in the same relative order. Sorting every element's node list is enough.
The extruded mesh is then conforming, which we verify geometrically.
"""
import numpy as np

from stmesh import meshes
from stmesh.extrusion import extrude_multi, uniform_levels
from stmesh.mesh import SpatialMesh, check_admissible, check_consistent, make_consistent

# a Delaunay mesh with Qhull's node order is generally not consistent
rng = np.random.default_rng(3)
mesh = meshes.random_delaunay(60, 2, rng)
print("Delaunay mesh:", mesh.num_elements, "triangles")
print("inconsistent pairs before sorting:", len(check_consistent(mesh).pairs))
mesh = make_consistent(mesh)
print("inconsistent pairs after sorting: ", len(check_consistent(mesh).pairs))

# three slabs of unequal height
st = extrude_multi(mesh, [0.0, 0.2, 0.5, 1.0])
print("\nspace-time mesh:", st.num_elements, "tetrahedra =", mesh.num_elements, "x 3 x 3")
print("total measure:", st.measures.sum(), " (area x T =", mesh.measures.sum(), ")")
print(check_admissible(st).summary())

# the exact pairwise test agrees with the fast local one
print("pairwise:", check_admissible(st, method="pairwise").summary())

# boundary facets carry their class: bottom, top, or lateral
classes, counts = np.unique([c.value for c in st.boundary_class], return_counts=True)
print(dict(zip(classes.tolist(), counts.tolist())))

# what goes wrong without a consistent order: the shared edge (1, 2) is
# listed as 1->2 in one triangle and 2->1 in the other
bad = SpatialMesh([[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 1, 2], [2, 1, 3]])
broken = extrude_multi(bad, uniform_levels(1.0, 1), check=False)
print("\nbadly ordered square:", check_admissible(broken).summary())
