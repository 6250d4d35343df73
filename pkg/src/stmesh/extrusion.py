"""Extrusion of a spatial simplex mesh into a space-time simplex mesh.

Each spatial simplex ``[p_1, ..., p_{d+1}]`` is swept over a time slab into
a hyperprism whose bottom copies ``p_i'`` and top copies ``p_i''`` are split
into the ``d+1`` simplices

    [p_i', ..., p_{d+1}', p_1'', ..., p_i'']      i = 1, ..., d+1.

The split only depends on the local node order, so neighbouring prisms are
cut the same way on their common side exactly when the spatial mesh is
consistently numbered.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateElementError, InconsistentNumberingError, MeshError
from .mesh import (
    DEGENERATE_TOL,
    BoundaryClass,
    SpaceTimeMesh,
    SpatialMesh,
    check_consistent,
    max_edge_lengths,
    signed_measures,
    simplex_measure,
)

__all__ = [
    "Hyperprism",
    "SlabSpec",
    "prism_pattern",
    "decompose_hyperprism",
    "extrude_slab",
    "extrude_multi",
    "uniform_levels",
    "classify_boundary",
]


def prism_pattern(d):
    """Local vertex lists of the ``d+1`` simplices splitting a hyperprism.

    Prism vertices are numbered ``0..d`` (bottom, in simplex order) and
    ``d+1..2d+1`` (top copies in the same order).
    """
    return np.array(
        [list(range(r, d + 1)) + [d + 1 + j for j in range(r + 1)] for r in range(d + 1)],
        dtype=np.int64,
    )


@dataclass(frozen=True)
class Hyperprism:
    """A d-simplex swept from ``t0`` to ``t0 + tau``.

    ``top`` optionally replaces the spatial positions of the top copies
    (moving boundaries); by default the top equals ``base``.
    """

    base: np.ndarray
    tau: float
    t0: float = 0.0
    top: np.ndarray | None = None

    @property
    def d(self):
        return np.asarray(self.base).shape[1]

    def vertices(self):
        base = np.asarray(self.base, dtype=float)
        top = base if self.top is None else np.asarray(self.top, dtype=float)
        n = len(base)
        bottom = np.column_stack([base, np.full(n, self.t0)])
        upper = np.column_stack([top, np.full(n, self.t0 + self.tau)])
        return np.concatenate([bottom, upper])


def decompose_hyperprism(prism):
    """Split a :class:`Hyperprism` into ``d+1`` simplices.

    Returns an array of shape ``(d+1, d+2, d+1)``: vertex coordinates of each
    space-time simplex, in the order given by :func:`prism_pattern`.
    """
    base = np.asarray(prism.base, dtype=float)
    d = base.shape[1]
    if base.shape[0] != d + 1:
        raise ValueError(f"a {d}-simplex needs {d + 1} vertices")
    if not prism.tau > 0:
        raise DegenerateElementError(f"slab height must be positive, got {prism.tau}")
    h = max(np.linalg.norm(base[i] - base[j]) for i in range(d + 1) for j in range(i))
    if simplex_measure(base) <= DEGENERATE_TOL * h**d:
        raise DegenerateElementError("hyperprism over a degenerate base simplex")
    return prism.vertices()[prism_pattern(d)]


@dataclass(frozen=True)
class SlabSpec:
    """One time slab ``[t_start, t_start + tau]`` with optional nodal
    displacements of the bottom and top node layers."""

    t_start: float
    tau: float
    bottom_displacement: np.ndarray | None = None
    top_displacement: np.ndarray | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"slab height must be positive, got {self.tau}")


def uniform_levels(T, K):
    if T <= 0 or K < 1:
        raise ValueError("need T > 0 and K >= 1")
    return np.linspace(0.0, T, K + 1)


def _require_consistent(mesh):
    report = check_consistent(mesh)
    if not report.ok:
        k, l = report.pairs[0]
        raise InconsistentNumberingError(
            f"spatial mesh is not consistently numbered ({len(report.pairs)} element pairs, "
            f"first: {k} and {l}); sort element nodes with make_consistent first",
            report.pairs,
        )


def _check_elements(coords, elements, reference, where=""):
    """Raise on zero-volume or orientation-flipped simplices."""
    vol = signed_measures(coords, elements)
    h = max_edge_lengths(coords, elements)
    n = elements.shape[1] - 1
    small = np.abs(vol) <= DEGENERATE_TOL * h**n
    flipped = np.sign(vol) != np.sign(reference)
    bad = np.flatnonzero(small | flipped)
    if bad.size:
        kind = "degenerate" if small[bad[0]] else "inverted"
        raise DegenerateElementError(
            f"{kind} space-time element {int(bad[0])}{where} "
            f"({bad.size} bad elements); the boundary motion is too large for this mesh",
            bad.tolist(),
        )


def _stack(mesh, levels, displacements, check, slab_offset=0):
    d = mesh.dim
    n = mesh.num_nodes
    K = len(levels) - 1
    coords = []
    for k, t in enumerate(levels):
        x = mesh.coords if displacements[k] is None else mesh.coords + displacements[k]
        coords.append(np.column_stack([x, np.full(n, t)]))
    coords = np.concatenate(coords)
    ref_coords = np.concatenate(
        [np.column_stack([mesh.coords, np.full(n, t)]) for t in levels]
    )
    pattern = prism_pattern(d)
    blocks = []
    for k in range(K):
        prism_nodes = np.concatenate([mesh.elements + k * n, mesh.elements + (k + 1) * n], axis=1)
        # element order: spatial element major, then the d+1 pieces
        blocks.append(prism_nodes[:, pattern].reshape(-1, d + 2))
    elements = np.concatenate(blocks)
    if check:
        reference = signed_measures(ref_coords, elements)
        per_slab = len(mesh.elements) * (d + 1)
        for k in range(K):
            sl = slice(k * per_slab, (k + 1) * per_slab)
            _check_elements(
                coords, elements[sl], reference[sl], where=f" in slab {k + slab_offset}"
            )
    return SpaceTimeMesh(
        coords,
        elements,
        spatial_node=np.tile(np.arange(n), K + 1),
        level=np.repeat(np.arange(K + 1), n),
        time_levels=np.asarray(levels, dtype=float),
    )


def extrude_slab(mesh: SpatialMesh, slab: SlabSpec, check=True):
    """Extrude one time slab.

    The spatial mesh must be consistently numbered; pass ``check=False`` to
    skip that test, the degeneracy test and boundary classification, e.g. to
    demonstrate what goes wrong without it. Node ``i`` of the spatial mesh becomes nodes ``i``
    (bottom) and ``num_nodes + i`` (top).
    """
    if check:
        _require_consistent(mesh)
    levels = [slab.t_start, slab.t_start + slab.tau]
    st = _stack(mesh, levels, [slab.bottom_displacement, slab.top_displacement], check)
    return classify_boundary(st, mesh) if check else st


def extrude_multi(mesh: SpatialMesh, time_levels, motion=None, check=True):
    """Stack ``K = len(time_levels) - 1`` slabs into one space-time mesh.

    Nodes on a slab interface are shared by construction: the copy of spatial
    node ``i`` at level ``k`` is node ``k * num_nodes + i``. ``motion`` is a
    :class:`stmesh.motion.MotionSpec` (or ``None`` for a fixed domain); its
    displacement field is evaluated at every time level.
    """
    levels = np.asarray(time_levels, dtype=float)
    if levels.ndim != 1 or len(levels) < 2 or np.any(np.diff(levels) <= 0):
        raise ValueError("time levels must be strictly increasing, at least two of them")
    if check:
        _require_consistent(mesh)
    if motion is None:
        disp = [None] * len(levels)
    else:
        from .motion import displacement_field

        disp = [displacement_field(mesh, motion, t) for t in levels]
    st = _stack(mesh, levels, disp, check)
    return classify_boundary(st, mesh) if check else st


def classify_boundary(stmesh: SpaceTimeMesh, spatial: SpatialMesh, T=None, tol=1e-10):
    """Attach a boundary class to every boundary facet.

    Bottom facets (all nodes at the first time level, normal ``-e_t``) are
    Sigma0, top facets (last level, ``+e_t``) SigmaT. Every other boundary
    facet lies on the mantle and inherits the tag of the spatial boundary
    facet it was swept from: Dirichlet tags give SigmaD, Robin tags SigmaR.
    """
    if stmesh.spatial_node is None:
        raise MeshError("space-time mesh does not record its spatial nodes")
    fs = stmesh.facets
    t = stmesh.coords[:, -1]
    t_lo = stmesh.t0
    t_hi = stmesh.T if T is None else float(T)
    scale = max(t_hi - t_lo, 1.0)
    known = set(spatial.boundary_facets)
    classes = []
    tags = []
    for f in fs.boundary:
        nodes = fs.nodes[f]
        nt = fs.normals[f, -1]
        tf = t[nodes]
        if np.all(np.abs(tf - t_lo) <= tol * scale) and nt < -1 + tol:
            classes.append(BoundaryClass.SIGMA0)
            tags.append(None)
            continue
        if np.all(np.abs(tf - t_hi) <= tol * scale) and nt > 1 - tol:
            classes.append(BoundaryClass.SIGMAT)
            tags.append(None)
            continue
        key = tuple(np.unique(stmesh.spatial_node[nodes]).tolist())
        if len(key) != spatial.dim or key not in known:
            raise MeshError(f"cannot classify boundary facet {tuple(nodes.tolist())}")
        tag = spatial.tag(key)
        classes.append(BoundaryClass.SIGMAD if tag.is_dirichlet else BoundaryClass.SIGMAR)
        tags.append(tag)
    out = SpaceTimeMesh(
        stmesh.coords,
        stmesh.elements,
        stmesh.spatial_node,
        stmesh.level,
        stmesh.time_levels,
        boundary_class=np.array(classes, dtype=object),
        boundary_tag=np.array(tags, dtype=object),
    )
    out.__dict__["facets"] = fs  # same geometry, reuse the facet table
    return out


def prism_volume(base, tau):
    """Volume of the straight hyperprism over ``base``: ``|base| * tau``."""
    return simplex_measure(base) * tau


def reference_decomposition_volumes(d):
    """Volumes of the pieces of the reference hyperprism; each is 1/(d+1)!."""
    e = np.vstack([np.zeros(d), np.eye(d)])
    pieces = decompose_hyperprism(Hyperprism(e, 1.0))
    return np.array([simplex_measure(p) for p in pieces]), 1.0 / math.factorial(d + 1)
