"""Space-time simplex meshes.

Extrude a spatial simplex mesh over time slabs into an admissible mesh of
one dimension higher, slice it back with hyperplanes, and discretize the
transient Stokes equations on it with a space-time DG method.
"""
from .errors import (
    DegenerateElementError,
    InconsistentNumberingError,
    MeshError,
    MeshFormatError,
    NonAdmissibleError,
    SolverError,
    StmeshError,
)
from .extrusion import (
    Hyperprism,
    SlabSpec,
    classify_boundary,
    decompose_hyperprism,
    extrude_multi,
    extrude_slab,
    uniform_levels,
)
from .mesh import (
    BoundaryClass,
    BoundaryTag,
    SpaceTimeMesh,
    SpatialMesh,
    check_admissible,
    check_consistent,
    extract_facets,
    facet_normal,
    make_consistent,
    simplex_measure,
)
from .motion import MotionSpec, displacement_field, eval_motion, smooth_displacement
from .slicing import Hyperplane, SliceComplex, edge_plane_intersection, slice_element, slice_mesh

__version__ = "0.1.0"
