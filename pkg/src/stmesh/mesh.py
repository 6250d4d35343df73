"""Simplicial meshes in 1 to 4 dimensions.

Meshes are stored as a node coordinate array plus an integer connectivity
array; one row per simplex, in the node order that defines the simplex.
Facets are keyed by their sorted node tuple, so two elements sharing a face
see the same key regardless of local ordering.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import NamedTuple

import numba
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateElementError, MeshError

__all__ = [
    "BoundaryTag",
    "BoundaryClass",
    "SpatialMesh",
    "SpaceTimeMesh",
    "Facet",
    "FacetSet",
    "ConsistencyReport",
    "AdmissibilityReport",
    "simplex_measure",
    "simplex_measures",
    "signed_measures",
    "barycentric_gradients",
    "max_edge_lengths",
    "make_consistent",
    "check_consistent",
    "check_admissible",
    "extract_facets",
    "facet_normal",
]

GEOM_TOL = 1e-10
DEGENERATE_TOL = 1e-12
LP_TOL = 1e-7  # feasibility tolerance of the LP solver, relative


class BoundaryTag(str, enum.Enum):
    DIRICHLET = "Dirichlet"
    DIRICHLET_MOVING = "DirichletMoving"
    ROBIN_IN = "RobinIn"
    ROBIN_OUT = "RobinOut"

    @property
    def is_dirichlet(self):
        return self in (BoundaryTag.DIRICHLET, BoundaryTag.DIRICHLET_MOVING)


class BoundaryClass(str, enum.Enum):
    SIGMA0 = "Sigma0"
    SIGMAT = "SigmaT"
    SIGMAD = "SigmaD"
    SIGMAR = "SigmaR"


# ---------------------------------------------------------------------------
# geometry of single simplices


def simplex_measure(points) -> float:
    """n-dimensional measure of the simplex spanned by ``n+1`` points in R^m.

    Uses the Gram determinant of the edge vectors, so ``m > n`` (a triangle
    embedded in 4D, say) is fine. Degenerate input returns 0.
    """
    points = np.asarray(points, dtype=float)
    edges = points[1:] - points[0]
    n = edges.shape[0]
    if n == 0:
        return 1.0
    gram = edges @ edges.T
    return math.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(n)


def simplex_measures(coords, elements):
    """Vectorised :func:`simplex_measure` over the rows of ``elements``."""
    coords = np.asarray(coords, dtype=float)
    elements = np.asarray(elements)
    pts = coords[elements]
    edges = pts[:, 1:] - pts[:, :1]
    n = edges.shape[1]
    if n == 0:
        return np.ones(len(elements))
    if n == coords.shape[1]:
        return np.abs(np.linalg.det(edges)) / math.factorial(n)
    gram = np.einsum("kim,kjm->kij", edges, edges)
    return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None)) / math.factorial(n)


def signed_measures(coords, elements):
    """Signed volume of full-dimensional simplices (orientation sensitive)."""
    pts = np.asarray(coords, dtype=float)[np.asarray(elements)]
    edges = pts[:, 1:] - pts[:, :1]
    n = edges.shape[1]
    return np.linalg.det(edges) / math.factorial(n)


def barycentric_gradients(coords, elements):
    """Gradients of the barycentric coordinates, shape ``(N, n+1, n)``.

    Row ``i`` of element ``k`` is the (constant) gradient of the P1 hat
    function attached to local vertex ``i``.
    """
    pts = np.asarray(coords, dtype=float)[np.asarray(elements)]
    edges = pts[:, 1:] - pts[:, :1]  # (N, n, n): row j is v_{j+1} - v_0
    inv = np.linalg.inv(edges)  # columns are grad lambda_{1..n}
    grads = np.empty(pts.shape, dtype=float)
    grads[:, 1:] = np.swapaxes(inv, 1, 2)
    grads[:, 0] = -grads[:, 1:].sum(axis=1)
    return grads


def max_edge_lengths(coords, elements):
    """Element size ``h_k``: the longest edge of each simplex."""
    pts = np.asarray(coords, dtype=float)[np.asarray(elements)]
    n1 = pts.shape[1]
    h = np.zeros(len(pts))
    for i, j in combinations(range(n1), 2):
        h = np.maximum(h, np.linalg.norm(pts[:, i] - pts[:, j], axis=1))
    return h


def facet_normal(facet_points, owner_points):
    """Unit normal of a facet, pointing away from the owner's centroid.

    ``facet_points`` are the ``n`` vertices of a facet of the n-simplex
    ``owner_points`` (``n+1`` points in R^n). The normal is taken from the
    null space of the facet's edge vectors.
    """
    facet_points = np.asarray(facet_points, dtype=float)
    owner_points = np.asarray(owner_points, dtype=float)
    dim = owner_points.shape[1]
    edges = facet_points[1:] - facet_points[0]
    scale = max(np.abs(owner_points - owner_points[0]).max(), 1e-300)
    if edges.shape[0] == 0:
        # facet of a segment is a point; the normal is +-1
        normal = np.ones(1)
    else:
        _, s, vt = np.linalg.svd(edges, full_matrices=True)
        if s.size < dim - 1 or s[-1] <= DEGENERATE_TOL * scale:
            raise DegenerateElementError("degenerate facet: zero measure")
        normal = vt[-1]
    out = facet_points.mean(axis=0) - owner_points.mean(axis=0)
    side = float(normal @ out)
    if abs(side) <= DEGENERATE_TOL * scale:
        raise DegenerateElementError("owner element is degenerate")
    return normal if side > 0 else -normal


# ---------------------------------------------------------------------------
# facets


class Facet(NamedTuple):
    nodes: tuple
    owners: tuple  # (k, l) with k < l, or (k, -1) on the boundary
    normal: np.ndarray
    measure: float


@dataclass(frozen=True, eq=False)
class FacetSet:
    """All codimension-one faces of a full-dimensional simplex mesh.

    ``owners[f, 1] == -1`` marks a boundary facet. ``local[f, s]`` is the
    local index (within ``owners[f, s]``) of the vertex *opposite* the facet.
    Normals are unit vectors, outward from ``owners[f, 0]``.
    """

    nodes: np.ndarray
    owners: np.ndarray
    local: np.ndarray
    normals: np.ndarray
    measures: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, f):
        return Facet(
            tuple(int(i) for i in self.nodes[f]),
            (int(self.owners[f, 0]), int(self.owners[f, 1])),
            self.normals[f],
            float(self.measures[f]),
        )

    @cached_property
    def interior(self):
        return np.flatnonzero(self.owners[:, 1] >= 0)

    @cached_property
    def boundary(self):
        return np.flatnonzero(self.owners[:, 1] < 0)

    def index(self):
        """Dictionary from sorted node tuple to facet number."""
        return {tuple(int(i) for i in row): f for f, row in enumerate(self.nodes)}


def _local_facets(n1):
    """Local node lists of the facets of a simplex with ``n1`` vertices.

    Facet ``i`` omits local vertex ``i``.
    """
    return np.array([[j for j in range(n1) if j != i] for i in range(n1)], dtype=int)


def _unique_rows(rows):
    """``np.unique(rows, axis=0, return_inverse=True, return_counts=True)``
    for nonnegative integer rows, packing each row into one int64 key when
    the node range allows it (much faster than the row-wise sort)."""
    rows = np.asarray(rows, dtype=np.int64)
    m = rows.shape[1]
    base = int(rows.max()) + 1 if rows.size else 1
    if m == 0 or base ** m >= 2**62:
        keys, inverse, counts = np.unique(rows, axis=0, return_inverse=True, return_counts=True)
        return keys, inverse.ravel(), counts
    packed = np.zeros(len(rows), dtype=np.int64)
    for j in range(m):
        packed = packed * base + rows[:, j]
    _, first, inverse, counts = np.unique(packed, return_index=True, return_inverse=True, return_counts=True)
    return rows[first], inverse.ravel(), counts


def _facet_table(elements):
    elements = np.asarray(elements)
    n_el, n1 = elements.shape
    loc = _local_facets(n1)
    faces = np.sort(elements[:, loc], axis=2).reshape(n_el * n1, n1 - 1)
    return _unique_rows(faces)


def extract_facets(mesh, coords=None):
    """Interior and boundary facets of a full-dimensional simplex mesh.

    Accepts a mesh object (anything with ``coords`` and ``elements``) or a
    bare connectivity array together with ``coords``. Raises
    :class:`MeshError` if a facet is shared by more than two elements.
    """
    if coords is None:
        coords, elements = mesh.coords, mesh.elements
    else:
        elements = mesh
    coords = np.asarray(coords, dtype=float)
    elements = np.asarray(elements)
    n_el, n1 = elements.shape
    if coords.shape[1] != n1 - 1:
        raise ValueError("extract_facets needs a full-dimensional simplex mesh")
    keys, inverse, counts = _facet_table(elements)
    if counts.size and counts.max() > 2:
        bad = keys[np.argmax(counts)]
        raise MeshError(f"facet {tuple(bad.tolist())} is shared by {counts.max()} elements")

    n_f = len(keys)
    owners = np.full((n_f, 2), -1, dtype=np.int64)
    local = np.full((n_f, 2), -1, dtype=np.int64)
    elem_of = np.repeat(np.arange(n_el), n1)
    loc_of = np.tile(np.arange(n1), n_el)
    # entries are visited in increasing element order, so slot 0 gets k < l
    order = np.lexsort((elem_of, inverse))
    inv_s = inverse[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = inv_s[1:] != inv_s[:-1]
    owners[inv_s[first], 0] = elem_of[order][first]
    local[inv_s[first], 0] = loc_of[order][first]
    owners[inv_s[~first], 1] = elem_of[order][~first]
    local[inv_s[~first], 1] = loc_of[order][~first]

    grads = barycentric_gradients(coords, elements[owners[:, 0]])
    g = grads[np.arange(n_f), local[:, 0]]
    norm = np.linalg.norm(g, axis=1)
    normals = -g / norm[:, None]
    measures = simplex_measures(coords, keys)
    return FacetSet(keys, owners, local, normals, measures)


# ---------------------------------------------------------------------------
# mesh containers


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpatialMesh:
    """A d-dimensional simplicial mesh (d = 1, 2, 3).

    Parameters
    ----------
    coords : (num_nodes, d) array
    elements : (num_elements, d+1) int array
        Node order is significant; see :func:`make_consistent`.
    boundary_tags : dict, optional
        Sorted boundary-facet node tuple -> :class:`BoundaryTag`. Boundary
        facets missing from the dict are tagged Dirichlet.
    """

    coords: np.ndarray
    elements: np.ndarray
    boundary_tags: dict = field(default_factory=dict)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        elements = np.asarray(self.elements, dtype=np.int64)
        if elements.ndim != 2 or elements.shape[1] != coords.shape[1] + 1:
            raise MeshError(
                f"elements of a {coords.shape[1]}-d mesh need {coords.shape[1] + 1} nodes"
            )
        if elements.size and (elements.min() < 0 or elements.max() >= len(coords)):
            raise MeshError("element references a node that does not exist")
        if np.any(np.sort(elements, axis=1)[:, 1:] == np.sort(elements, axis=1)[:, :-1]):
            raise MeshError("element with a repeated node")
        object.__setattr__(self, "coords", _readonly(coords, float))
        object.__setattr__(self, "elements", _readonly(elements, np.int64))
        tags = {}
        for key, tag in dict(self.boundary_tags).items():
            tags[tuple(sorted(int(i) for i in key))] = BoundaryTag(tag)
        object.__setattr__(self, "boundary_tags", tags)

    @property
    def dim(self):
        return self.coords.shape[1]

    @property
    def num_nodes(self):
        return len(self.coords)

    @property
    def num_elements(self):
        return len(self.elements)

    @cached_property
    def measures(self):
        return simplex_measures(self.coords, self.elements)

    @cached_property
    def facets(self):
        return extract_facets(self)

    @cached_property
    def boundary_facets(self):
        """Sorted node tuples of all boundary facets, in facet order."""
        fs = self.facets
        return [tuple(int(i) for i in fs.nodes[f]) for f in fs.boundary]

    def tag(self, facet_nodes):
        key = tuple(sorted(int(i) for i in facet_nodes))
        return self.boundary_tags.get(key, BoundaryTag.DIRICHLET)

    @cached_property
    def boundary_nodes(self):
        fs = self.facets
        return np.unique(fs.nodes[fs.boundary])

    def nodes_with_tags(self, tags):
        """Nodes lying on at least one boundary facet carrying one of ``tags``."""
        tags = {BoundaryTag(t) for t in tags}
        hit = [f for f in self.boundary_facets if self.tag(f) in tags]
        if not hit:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.array(hit, dtype=np.int64))

    def with_elements(self, elements):
        return SpatialMesh(self.coords, elements, self.boundary_tags)

    def with_coords(self, coords):
        return SpatialMesh(coords, self.elements, self.boundary_tags)

    def validate_tags(self):
        """Raise if a tag is attached to something that is not a boundary facet."""
        known = set(self.boundary_facets)
        for key in self.boundary_tags:
            if key not in known:
                raise MeshError(f"tagged facet {key} is not a boundary facet")


@dataclass(frozen=True, eq=False)
class SpaceTimeMesh:
    """A (d+1)-dimensional simplex mesh; the last coordinate is time.

    Meshes produced by extrusion also know, for every node, the spatial node
    it was copied from (``spatial_node``) and its time level (``level``).
    ``boundary_class``/``boundary_tag`` are filled by
    :func:`stmesh.extrusion.classify_boundary` and run parallel to
    ``facets.boundary``.
    """

    coords: np.ndarray
    elements: np.ndarray
    spatial_node: np.ndarray | None = None
    level: np.ndarray | None = None
    time_levels: np.ndarray | None = None
    boundary_class: np.ndarray | None = None
    boundary_tag: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "coords", _readonly(self.coords, float))
        object.__setattr__(self, "elements", _readonly(self.elements, np.int64))
        for name in ("spatial_node", "level"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, _readonly(getattr(self, name), np.int64))
        if self.time_levels is not None:
            object.__setattr__(self, "time_levels", _readonly(self.time_levels, float))
        if self.elements.shape[1] != self.coords.shape[1] + 1:
            raise MeshError("space-time elements need dim+1 nodes")

    @property
    def dim(self):
        """Space-time dimension d+1."""
        return self.coords.shape[1]

    @property
    def spatial_dim(self):
        return self.coords.shape[1] - 1

    @property
    def num_nodes(self):
        return len(self.coords)

    @property
    def num_elements(self):
        return len(self.elements)

    @property
    def T(self):
        return float(self.coords[:, -1].max())

    @property
    def t0(self):
        return float(self.coords[:, -1].min())

    @cached_property
    def measures(self):
        return simplex_measures(self.coords, self.elements)

    @cached_property
    def h(self):
        return max_edge_lengths(self.coords, self.elements)

    @cached_property
    def facets(self):
        return extract_facets(self)

    @property
    def interior_facets(self):
        return self.facets.interior

    @property
    def boundary_facets(self):
        return self.facets.boundary

    def facets_of_class(self, cls):
        """Facet numbers (into ``facets``) of boundary facets of class ``cls``."""
        if self.boundary_class is None:
            raise MeshError("boundary facets have not been classified")
        cls = BoundaryClass(cls)
        mask = np.array([c == cls for c in self.boundary_class], dtype=bool)
        return self.facets.boundary[mask]


# ---------------------------------------------------------------------------
# consistent numbering


def _elements_of(mesh):
    return np.asarray(mesh.elements if hasattr(mesh, "elements") else mesh)


def make_consistent(mesh):
    """Sort every element's nodes by global node number.

    Returns a new mesh of the same type. Sorting may flip the orientation of
    individual simplices; nothing downstream relies on the sign.
    """
    elements = np.sort(_elements_of(mesh), axis=1)
    if isinstance(mesh, SpatialMesh):
        return mesh.with_elements(elements)
    if isinstance(mesh, SpaceTimeMesh):
        return SpaceTimeMesh(mesh.coords, elements, mesh.spatial_node, mesh.level, mesh.time_levels)
    return elements


@dataclass
class ConsistencyReport:
    pairs: list  # element pairs (i, j), i < j, whose shared nodes are ordered differently
    nonadmissible: "AdmissibilityReport | None" = None

    @property
    def ok(self):
        bad_geom = self.nonadmissible is not None and not self.nonadmissible.ok
        return not self.pairs and not bad_geom

    def __bool__(self):
        return self.ok


def check_consistent(mesh, check_admissibility=False):
    """Check the consistent-numbering property.

    Shared node sets are consistently ordered iff every shared *edge* has the
    same orientation in all elements containing it, so the check runs over
    edges. With ``check_admissibility`` the geometric conformity of the mesh
    is checked too and reported in ``nonadmissible``.
    """
    elements = _elements_of(mesh)
    n_el, n1 = elements.shape
    pairs = []
    if n1 >= 2 and n_el > 1:
        p, q = np.array(list(combinations(range(n1), 2))).T
        a = elements[:, p].ravel()
        b = elements[:, q].ravel()
        elem = np.repeat(np.arange(n_el), len(p))
        key = np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)
        forward = a < b
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        inv = inv.ravel()
        n_fwd = np.bincount(inv, weights=forward, minlength=len(uniq))
        n_all = np.bincount(inv, minlength=len(uniq))
        mixed = np.flatnonzero((n_fwd > 0) & (n_fwd < n_all))
        if mixed.size:
            sel = np.isin(inv, mixed)
            found = set()
            for e in mixed:
                rows = sel & (inv == e)
                fw = elem[rows & forward]
                bw = elem[rows & ~forward]
                for i in fw:
                    for j in bw:
                        found.add((int(min(i, j)), int(max(i, j))))
            pairs = sorted(found)
    report = ConsistencyReport(pairs)
    if check_admissibility:
        report.nonadmissible = check_admissible(mesh)
    return report


# ---------------------------------------------------------------------------
# admissibility


@dataclass
class AdmissibilityReport:
    """Outcome of :func:`check_admissible`.

    ``violations`` holds ``(k, l, kind)`` triples; ``degenerate`` lists
    elements of (numerically) zero measure, which are excluded from the
    pairwise tests.
    """

    violations: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)
    pairs_checked: int = 0

    @property
    def ok(self):
        return not self.violations and not self.degenerate

    def __bool__(self):
        return self.ok

    def summary(self):
        if self.ok:
            return f"admissible ({self.pairs_checked} element pairs checked)"
        kinds = {}
        for _, _, kind in self.violations:
            kinds[kind] = kinds.get(kind, 0) + 1
        parts = [f"{v} {k}" for k, v in sorted(kinds.items())]
        if self.degenerate:
            parts.append(f"{len(self.degenerate)} degenerate elements")
        return "not admissible: " + ", ".join(parts)


def _candidate_pairs(lo, hi, tol, chunk=2_000_000):
    """Element pairs with overlapping (tolerance-padded) bounding boxes."""
    n = len(lo)
    if n < 2:
        return
    extent = np.maximum(hi.max(0) - lo.min(0), 1e-300)
    axis = int(np.argmin((hi - lo).mean(0) / extent))
    order = np.argsort(lo[:, axis], kind="stable")
    slo = lo[order, axis]
    shi = hi[order, axis]
    end = np.searchsorted(slo, shi + tol, side="right")
    counts = np.maximum(end - np.arange(n) - 1, 0)
    start = 0
    while start < n:
        stop = start
        acc = 0
        while stop < n and (acc + counts[stop] <= chunk or stop == start):
            acc += counts[stop]
            stop += 1
        c = counts[start:stop]
        total = int(c.sum())
        if total:
            i = np.repeat(np.arange(start, stop), c)
            offs = np.arange(total) - np.repeat(np.cumsum(c) - c, c)
            j = i + 1 + offs
            a, b = order[i], order[j]
            keep = np.all((lo[a] <= hi[b] + tol) & (lo[b] <= hi[a] + tol), axis=1)
            yield a[keep], b[keep]
        start = stop


def _facet_planes(pts):
    """Per element: W, c such that ``W @ x + c`` are signed distances to the
    facet hyperplanes (positive inside)."""
    edges = pts[:, 1:] - pts[:, :1]
    inv = np.linalg.inv(edges)
    grads = np.empty(pts.shape)
    grads[:, 1:] = np.swapaxes(inv, 1, 2)
    grads[:, 0] = -grads[:, 1:].sum(axis=1)
    heights = 1.0 / np.linalg.norm(grads, axis=2)
    W = grads * heights[:, :, None]
    c = heights - np.einsum("kid,kid->ki", W, pts)
    return W, c


def _separated(W, c, other_pts, other_shared, tol):
    """True where some facet plane of the first element weakly separates the
    second, touching it only in shared vertices."""
    dist = np.einsum("pid,pjd->pij", W, other_pts) + c[:, :, None]
    below = np.all(dist <= tol, axis=2)
    on = np.abs(dist) <= tol
    touch_ok = np.all(~on | other_shared[:, None, :], axis=2)
    return np.any(below & touch_ok, axis=1)


def _lp_excess(pa, pb, shared_a, heights_a):
    """Largest distance-weighted barycentric mass that a point of A n B puts
    on vertices of A not shared with B. Zero iff A n B = conv(shared)."""
    n1, dim = pa.shape
    free = ~shared_a
    if not free.any():
        return 0.0
    cost = np.concatenate([-np.where(free, heights_a, 0.0), np.zeros(n1)])
    A_eq = np.zeros((dim + 2, 2 * n1))
    A_eq[:dim, :n1] = pa.T
    A_eq[:dim, n1:] = -pb.T
    A_eq[dim, :n1] = 1.0
    A_eq[dim + 1, n1:] = 1.0
    b_eq = np.zeros(dim + 2)
    b_eq[dim:] = 1.0
    res = linprog(
        cost,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
    )
    if res.status == 2:  # infeasible: A and B do not meet at all
        return 0.0
    if res.status != 0:
        raise MeshError(f"admissibility LP failed: {res.message}")
    return max(-res.fun, 0.0)


def check_admissible(mesh, coords=None, tol=GEOM_TOL, method="local"):
    """Verify that any two elements meet in a common sub-simplex (or not at all).

    Parameters
    ----------
    mesh
        Mesh object, or a connectivity array when ``coords`` is given.
    tol
        Geometric tolerance relative to the mesh diameter.
    method
        ``"local"`` (default) uses only local tests and runs in linear time:

        * every facet has at most two elements, lying on opposite sides;
        * around every ridge (face of codimension two) the elements close up
          exactly once (dihedral angles sum to ``2*pi``) or, on the boundary,
          form fans that do not wrap (sum below ``2*pi``);
        * no node lies in the closed hull of an element it does not belong to.

        ``"pairwise"`` tests every pair of elements with overlapping bounding
        boxes exactly (separating facet planes, otherwise a small linear
        program). It is quadratic-ish and meant for small meshes and for
        cross-checking.

    Returns
    -------
    AdmissibilityReport
    """
    if coords is None:
        coords, elements = mesh.coords, mesh.elements
    else:
        elements = mesh
    coords = np.asarray(coords, dtype=float)
    elements = np.asarray(elements, dtype=np.int64)
    if method not in ("local", "pairwise"):
        raise ValueError(f"unknown method {method!r}")
    report = AdmissibilityReport()
    n_el, n1 = elements.shape
    if n_el == 0:
        return report
    if coords.shape[1] != n1 - 1:
        raise ValueError("check_admissible needs a full-dimensional simplex mesh")

    diam = float(np.linalg.norm(coords.max(0) - coords.min(0)))
    dtol = tol * diam
    h = max_edge_lengths(coords, elements)
    vol = simplex_measures(coords, elements)
    degenerate = vol <= DEGENERATE_TOL * h ** (n1 - 1)
    report.degenerate = np.flatnonzero(degenerate).tolist()

    keys, inverse, counts = _facet_table(elements)
    for f in np.flatnonzero(counts > 2):
        owners = sorted({int(o) // n1 for o in np.flatnonzero(inverse == f)})
        report.violations.append((owners[0], owners[1], "facet shared by more than two elements"))
    if method == "pairwise":
        _pairwise(report, coords, elements, degenerate, dtol)
    elif not degenerate.any() and not report.violations:
        # the local tests assume a pseudo-manifold of proper simplices
        _local(report, coords, elements, inverse, counts, dtol)
    report.violations = sorted(set(report.violations))
    return report


def _local(report, coords, elements, inverse, counts, dtol, angle_tol=1e-9):
    n_el, n1 = elements.shape
    n = n1 - 1
    pts = coords[elements]
    W, c = _facet_planes(pts)  # W[k, i]: inward unit normal of facet i

    # facets: partners must sit on opposite sides
    owner = np.repeat(np.arange(n_el), n1)
    local = np.tile(np.arange(n1), n_el)
    paired = counts[inverse] == 2
    order = np.argsort(inverse, kind="stable")
    first = order[np.concatenate([[True], np.diff(inverse[order]) != 0])]
    pair_rows = np.flatnonzero(paired[first])
    ia = first[pair_rows]  # incidence rows of the first owner of each paired facet
    ib = order[np.searchsorted(inverse[order], inverse[ia]) + 1]
    ka, kb = owner[ia], owner[ib]
    opp_b = pts[kb, local[ib]]
    side = np.einsum("kd,kd->k", W[ka, local[ia]], opp_b) + c[ka, local[ia]]
    for k, l in zip(ka[side >= -dtol], kb[side >= -dtol]):
        report.violations.append((int(min(k, l)), int(max(k, l)), "elements on the same side of a shared facet"))
    report.pairs_checked += len(ka)

    # nodes inside foreign elements
    _vertex_containment(report, coords, elements, pts, W, c, dtol)

    if n < 2:
        return
    # ridges: omit local vertices i < j
    combos = np.array(list(combinations(range(n1), 2)), dtype=np.int64)
    R = len(combos)
    keep = np.array([[m for m in range(n1) if m not in pair] for pair in combos])
    ridges = np.sort(elements[:, keep], axis=2).reshape(n_el * R, n - 1)
    _, rid, rcount = _unique_rows(ridges)
    n_ridge = len(rcount)
    # dihedral angle between facets i and j: pi minus the angle of the normals
    ni = W[:, combos[:, 0]]
    nj = W[:, combos[:, 1]]
    angle = (2.0 * np.arctan2(np.linalg.norm(ni + nj, axis=2), np.linalg.norm(ni - nj, axis=2))).ravel()
    angle_sum = np.bincount(rid, weights=angle, minlength=n_ridge)
    # unpaired facets around each ridge; each is seen by exactly one incidence
    paired_el = paired.reshape(n_el, n1)
    unpaired = (~paired_el[:, combos[:, 0]]).astype(int) + (~paired_el[:, combos[:, 1]])
    n_unpaired = np.bincount(rid, weights=unpaired.ravel(), minlength=n_ridge).astype(int)

    # link graph: incidences (element, ridge) joined through paired facets
    inc_key = rid * n_el + np.repeat(np.arange(n_el), R)
    inc_order = np.argsort(inc_key)
    sorted_key = inc_key[inc_order]
    combo_index = -np.ones((n1, n1), dtype=np.int64)
    combo_index[combos[:, 0], combos[:, 1]] = np.arange(R)
    combo_index[combos[:, 1], combos[:, 0]] = np.arange(R)
    rows, cols = [], []
    for m in range(n1):
        # ridges of facet ia (omitting local[ia]) also omit one further vertex
        sel = local[ia] != m
        if not sel.any():
            continue
        a_inc = ka[sel] * R + combo_index[local[ia][sel], m]
        key = rid[a_inc] * n_el + kb[sel]
        pos = np.searchsorted(sorted_key, key)
        pos = np.minimum(pos, len(sorted_key) - 1)
        hit = sorted_key[pos] == key
        rows.append(a_inc[hit])
        cols.append(inc_order[pos[hit]])
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    graph = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_el * R, n_el * R))
    _, label = connected_components(graph, directed=False)
    comp = np.unique(rid.astype(np.int64) * n_el * R + label)
    n_comp = np.bincount(comp // (n_el * R), minlength=n_ridge)

    full = 2.0 * math.pi
    interior = (n_unpaired == 0) & (n_comp == 1) & (np.abs(angle_sum - full) <= angle_tol * rcount)
    fans = (n_unpaired == 2 * n_comp) & (angle_sum < full - angle_tol)
    bad = ~(interior | fans)
    # several boundary fans around one ridge: decide those pairs exactly
    multi = np.flatnonzero(fans & (n_comp > 1))
    inc_el = np.repeat(np.arange(n_el), R)
    for r in multi:
        members = np.flatnonzero(rid == r)
        for x, y in combinations(members, 2):
            if label[x] == label[y]:
                continue
            k, l = int(inc_el[x]), int(inc_el[y])
            if _pair_violation(pts[k], pts[l], elements[k], elements[l], dtol):
                report.violations.append((min(k, l), max(k, l), "overlapping elements around a ridge"))
    for r in np.flatnonzero(bad):
        members = inc_el[rid == r]
        k, l = int(members.min()), int(members.max())
        if len(members) == 1:
            l = k
        kind = "elements overlap around a ridge" if angle_sum[r] > full - angle_tol else "non-matching faces around a ridge"
        report.violations.append((k, l, kind))


@numba.njit(cache=True)
def _contained_nodes(coords, elements, order, start, counts, lo, hi, W, c, dtol):
    """(element, node) pairs with a foreign node in the closed element."""
    n_el, n1 = elements.shape
    dim = coords.shape[1]
    cap = 16
    out = np.empty((cap, 2), dtype=np.int64)
    m = 0
    for k in range(n_el):
        for p in range(start[k], start[k] + counts[k]):
            v = order[p]
            ok = True
            for a in range(dim):
                x = coords[v, a]
                if x < lo[k, a] or x > hi[k, a]:
                    ok = False
                    break
            if not ok:
                continue
            for i in range(n1):
                if elements[k, i] == v:
                    ok = False
                    break
            if not ok:
                continue
            for i in range(n1):
                dist = c[k, i]
                for a in range(dim):
                    dist += W[k, i, a] * coords[v, a]
                if dist < -dtol:
                    ok = False
                    break
            if not ok:
                continue
            if m == cap:
                cap *= 2
                grown = np.empty((cap, 2), dtype=np.int64)
                grown[:m] = out[:m]
                out = grown
            out[m, 0] = k
            out[m, 1] = v
            m += 1
    return out[:m]


def _vertex_containment(report, coords, elements, pts, W, c, dtol):
    # candidates: nodes in the padded bounding box of the element, found by a
    # sweep along the most selective axis (balls are far too loose for the
    # long thin elements of graded extrusions)
    lo = pts.min(axis=1) - dtol
    hi = pts.max(axis=1) + dtol
    extent = np.maximum(coords.max(0) - coords.min(0), 1e-300)
    axis = int(np.argmin((hi - lo).mean(0) / extent))
    order = np.argsort(coords[:, axis], kind="stable")
    sorted_x = coords[order, axis]
    start = np.searchsorted(sorted_x, lo[:, axis], side="left")
    counts = np.searchsorted(sorted_x, hi[:, axis], side="right") - start
    hits = _contained_nodes(
        np.ascontiguousarray(coords), np.ascontiguousarray(elements, dtype=np.int64), order.astype(np.int64),
        start.astype(np.int64), counts.astype(np.int64), lo, hi, np.ascontiguousarray(W), np.ascontiguousarray(c),
        float(dtol),
    )
    if len(hits) == 0:
        return
    # report the element together with one element owning the node
    star = np.full(len(coords), -1)
    star[elements.ravel()] = np.repeat(np.arange(len(elements)), elements.shape[1])
    for k, v in hits:
        l = int(star[v])
        report.violations.append((int(min(k, l)), int(max(k, l)), "node inside another element"))


def _pair_violation(pa, pb, ea, eb, dtol):
    shared_a = np.isin(ea, eb)
    shared_b = np.isin(eb, ea)
    Wa, ca = _facet_planes(pa[None])
    Wb, cb = _facet_planes(pb[None])
    if _separated(Wa, ca, pb[None], shared_b[None], dtol)[0]:
        return False
    if _separated(Wb, cb, pa[None], shared_a[None], dtol)[0]:
        return False
    return _lp_excess(pa, pb, shared_a, _heights(pa)) > max(dtol, LP_TOL * np.ptp(pa, axis=0).max())


def _pairwise(report, coords, elements, degenerate, dtol):
    n1 = elements.shape[1]
    pts = coords[elements]
    good = np.flatnonzero(~degenerate)
    if good.size < 2:
        return
    W = np.zeros((len(elements), n1, n1 - 1))
    c = np.zeros((len(elements), n1))
    W[good], c[good] = _facet_planes(pts[good])
    lo = pts.min(axis=1)
    hi = pts.max(axis=1)
    for ga, gb in _candidate_pairs(lo[good], hi[good], dtol):
        a, b = good[ga], good[gb]
        report.pairs_checked += len(a)
        ea, eb = elements[a], elements[b]
        match = ea[:, :, None] == eb[:, None, :]
        shared_a = match.any(axis=2)
        shared_b = match.any(axis=1)
        n_shared = shared_a.sum(axis=1)
        dup = n_shared == n1
        for k, l in zip(a[dup], b[dup]):
            report.violations.append((int(min(k, l)), int(max(k, l)), "duplicate element"))
        ok = dup.copy()
        rest = ~ok
        ok[rest] = _separated(W[a[rest]], c[a[rest]], pts[b[rest]], shared_b[rest], dtol)
        rest = ~ok
        ok[rest] = _separated(W[b[rest]], c[b[rest]], pts[a[rest]], shared_a[rest], dtol)
        for idx in np.flatnonzero(~ok):
            k, l = int(a[idx]), int(b[idx])
            excess = _lp_excess(pts[k], pts[l], shared_a[idx], _heights(pts[k]))
            if excess > max(dtol, LP_TOL * np.ptp(pts[k], axis=0).max()):
                kind = "hanging node or partial overlap" if n_shared[idx] else "overlapping elements"
                report.violations.append((min(k, l), max(k, l), kind))


def _heights(p):
    """Vertex-to-opposite-facet distances of one simplex."""
    edges = p[1:] - p[0]
    inv = np.linalg.inv(edges)
    g = np.empty(p.shape)
    g[1:] = inv.T
    g[0] = -g[1:].sum(axis=0)
    return 1.0 / np.linalg.norm(g, axis=1)
