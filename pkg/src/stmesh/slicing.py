"""Hyperplane sections of simplex meshes.

Cutting an (n)-simplex with a hyperplane gives the convex hull of the
vertices lying on the plane and of the points where edges cross it. With
``P`` the vertices below and ``Q`` those above the plane, the crossing
points form a product of simplices ``P x Q``: a simplex when one side has a
single vertex, a quadrilateral for ``2 x 2`` and a wedge for ``2 x 3``.
On-plane vertices are coned onto that product.

For constant-time planes ``t = t*`` the section of a space-time mesh is a
mesh of the spatial domain at time ``t*``, which is what gets written to VTK.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .mesh import max_edge_lengths, simplex_measures

__all__ = [
    "Hyperplane",
    "SliceComplex",
    "ElementSection",
    "VTK_LINE",
    "VTK_TRIANGLE",
    "VTK_QUAD",
    "VTK_TETRA",
    "VTK_WEDGE",
    "edge_plane_intersection",
    "slice_element",
    "slice_mesh",
]

VTK_LINE = 3
VTK_TRIANGLE = 5
VTK_QUAD = 9
VTK_TETRA = 10
VTK_WEDGE = 13

_SIMPLEX_TYPE = {1: VTK_LINE, 2: VTK_TRIANGLE, 3: VTK_TETRA}

# splits of non-simplex cells, used for measures
_SPLITS = {
    VTK_QUAD: np.array([[0, 1, 2], [0, 2, 3]]),
    VTK_WEDGE: np.array([[0, 1, 2, 3], [1, 2, 3, 4], [2, 3, 4, 5]]),
}


@dataclass(frozen=True)
class Hyperplane:
    """The affine set ``p0 + span(spans)`` in R^n, with ``n - 1`` spanning vectors.

    ``time`` is set for constant-time planes built with :meth:`at_time`;
    sections of those use the closed-form edge parameter and drop the time
    coordinate.
    """

    p0: np.ndarray
    spans: np.ndarray  # (n-1, n)
    time: float | None = None

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=float)
        spans = np.atleast_2d(np.asarray(self.spans, dtype=float))
        n = p0.shape[0]
        if spans.shape != (n - 1, n):
            raise ValueError(f"a hyperplane in R^{n} needs {n - 1} spanning vectors of length {n}")
        sv = np.linalg.svd(spans, compute_uv=False)
        if sv.size and sv.min() <= 1e-12 * max(sv.max(), 1.0):
            raise ValueError("spanning vectors are linearly dependent")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "spans", spans)

    @classmethod
    def at_time(cls, t, dim):
        """The plane ``t = const`` in space-time R^dim (time is the last axis)."""
        p0 = np.zeros(dim)
        p0[-1] = t
        return cls(p0, np.eye(dim)[:-1], time=float(t))

    @property
    def dim(self):
        return self.p0.shape[0]

    @property
    def normal(self):
        """Unit normal; for constant-time planes this is ``+e_t``."""
        if self.time is not None:
            e = np.zeros(self.dim)
            e[-1] = 1.0
            return e
        _, _, vt = np.linalg.svd(self.spans)
        nrm = vt[-1]
        # deterministic orientation: largest component positive
        return nrm if nrm[np.argmax(np.abs(nrm))] > 0 else -nrm

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        if self.time is not None:
            return x[..., -1] - self.time
        return (x - self.p0) @ self.normal

    @property
    def basis(self):
        """Orthonormal basis of the span (rows), from a QR factorization of the spans."""
        q, r = np.linalg.qr(self.spans.T)
        return (q * np.sign(np.diag(r))).T

    def local_coords(self, x):
        """Orthonormal in-plane coordinates of (points projected onto) the plane.

        For constant-time planes these are the spatial coordinates, so
        measures of sections are true measures in every case.
        """
        x = np.asarray(x, dtype=float)
        if self.time is not None:
            return x[..., :-1].copy()
        return (x - self.p0) @ self.basis.T


def edge_plane_intersection(x1, x2, plane: Hyperplane, tol=1e-12):
    """Crossing of the segment ``[x1, x2]`` with ``plane``.

    Solves ``A (mu, lambda) = x1 - p0`` with ``A = (p_1, ..., p_{n-1}, x1 - x2)``,
    so the point is ``x1 + lambda (x2 - x1)``. Returns ``(lambda, point)`` or
    ``None`` when the edge is parallel to the plane (no crossing or a whole
    segment of them) or ``lambda`` falls outside ``[0, 1]``.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    A = np.column_stack([plane.spans.T, x1 - x2])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.min() <= tol * max(sv.max(), 1.0):
        return None
    sol = np.linalg.solve(A, x1 - plane.p0)
    lam = float(sol[-1])
    if lam < -tol or lam > 1 + tol:
        return None
    lam = min(max(lam, 0.0), 1.0)
    return lam, x1 + lam * (x2 - x1)


@dataclass
class SliceComplex:
    """Cells of a hyperplane section.

    ``points`` are in-plane coordinates (for constant-time planes: the
    spatial coordinates). ``cells`` is a list of point-index arrays with
    matching ``cell_types`` (VTK type ids) and ``cell_element`` (the element
    each cell was cut from). ``point_data`` holds interpolated fields.
    """

    points: np.ndarray
    cells: list
    cell_types: np.ndarray
    cell_element: np.ndarray
    point_data: dict = field(default_factory=dict)
    time: float | None = None

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def num_points(self):
        return len(self.points)

    @property
    def num_cells(self):
        return len(self.cells)

    def cell_measures(self):
        out = np.zeros(len(self.cells))
        for ctype in np.unique(self.cell_types):
            idx = np.flatnonzero(self.cell_types == ctype)
            conn = np.array([self.cells[i] for i in idx])
            if ctype in _SPLITS:
                parts = conn[:, _SPLITS[ctype]]
                m = simplex_measures(self.points, parts.reshape(-1, parts.shape[2]))
                out[idx] = m.reshape(len(idx), -1).sum(axis=1)
            else:
                out[idx] = simplex_measures(self.points, conn)
        return out

    def measure(self):
        """Total d-dimensional measure of the section."""
        return float(self.cell_measures().sum()) if self.cells else 0.0

    def type_counts(self):
        types, counts = np.unique(self.cell_types, return_counts=True)
        return {int(t): int(c) for t, c in zip(types, counts)}


@dataclass(frozen=True)
class ElementSection:
    """Section of a single simplex.

    ``sources[j] = (a, b, lam)`` says point ``j`` is ``x_a + lam (x_b - x_a)``
    in local vertex numbers (``a == b`` for an on-plane vertex).
    """

    points: np.ndarray
    sources: list
    cells: list  # (vtk type, local point indices)


def _cell_templates(signs):
    """Cells for one sign pattern as lists of (a, b) vertex pairs.

    Returns ``None`` for an empty (lower-dimensional) section, or
    ``"facet"`` when a whole facet lies in the plane.
    """
    n1 = len(signs)
    n = n1 - 1
    d = n - 1  # dimension of the section
    P = [i for i in range(n1) if signs[i] < 0]
    Q = [i for i in range(n1) if signs[i] > 0]
    Z = [(i, i) for i in range(n1) if signs[i] == 0]
    if not P or not Q:
        return "facet" if len(Z) == n else None

    def c(p, q):
        return (p, q)

    if len(P) == 1 or len(Q) == 1:
        base = [c(p, q) for p, q in product(P, Q)]
        return [(_SIMPLEX_TYPE[d], base + Z)]
    if len(P) == 2 and len(Q) == 2:
        quad = [c(P[0], Q[0]), c(P[0], Q[1]), c(P[1], Q[1]), c(P[1], Q[0])]
        if not Z:
            return [(VTK_QUAD, quad)]
        # pyramid over the quad: split along a diagonal
        return [
            (VTK_TETRA, [quad[0], quad[1], quad[2]] + Z),
            (VTK_TETRA, [quad[0], quad[2], quad[3]] + Z),
        ]
    if len(P) == 2 and len(Q) == 3:
        return [(VTK_WEDGE, [c(P[0], q) for q in Q] + [c(P[1], q) for q in Q])]
    if len(P) == 3 and len(Q) == 2:
        return [(VTK_WEDGE, [c(p, Q[0]) for p in P] + [c(p, Q[1]) for p in P])]
    raise NotImplementedError(f"sections of {n}-simplices with sign pattern {signs}")


def _classify(dist, scale, tol):
    s = np.sign(dist).astype(np.int64)
    s[np.abs(dist) <= tol * scale] = 0
    return s


def slice_element(vertices, plane: Hyperplane, tol=1e-10):
    """Section of one simplex (``n+1`` vertices in R^n) with ``plane``.

    Vertices within ``tol * h`` of the plane (``h`` the longest edge) are
    snapped onto it. Returns an :class:`ElementSection`, or ``None`` if the
    simplex only touches the plane in a lower-dimensional face. A facet lying
    in the plane is returned as a single simplex cell.
    """
    x = np.asarray(vertices, dtype=float)
    h = float(max_edge_lengths(x, np.arange(len(x))[None])[0])
    signs = _classify(plane.signed_distance(x), h, tol)
    cells = _cell_templates(tuple(signs))
    if cells is None:
        return None
    if cells == "facet":
        z = [(i, i) for i in range(len(x)) if signs[i] == 0]
        cells = [(_SIMPLEX_TYPE[len(z) - 1], z)]
    dist = plane.signed_distance(x)
    keys = []
    for _, pts in cells:
        for key in pts:
            if key not in keys:
                keys.append(key)
    sources, points = [], []
    for a, b in keys:
        if a == b:
            lam = 0.0
        else:
            lam = dist[a] / (dist[a] - dist[b])
        sources.append((a, b, float(lam)))
        points.append(x[a] + lam * (x[b] - x[a]))
    local = np.array([plane.local_coords(p) for p in points])
    out_cells = [(t, [keys.index(k) for k in pts]) for t, pts in cells]
    out_cells = [(t, _orient(local, t, conn)) for t, conn in out_cells]
    return ElementSection(local, sources, out_cells)


def _orient(points, ctype, conn):
    """Reorder cell nodes so simplices, quads and wedges are positively oriented."""
    conn = list(conn)
    dim = points.shape[1]
    if ctype in (VTK_TRIANGLE, VTK_TETRA) and len(conn) == dim + 1:
        e = points[conn[1:]] - points[conn[0]]
        if np.linalg.det(e) < 0:
            conn[1], conn[2] = conn[2], conn[1]
    elif ctype == VTK_QUAD:
        e = points[conn[1:3]] - points[conn[0]]
        if np.linalg.det(e) < 0:
            conn = [conn[0], conn[3], conn[2], conn[1]]
    elif ctype == VTK_WEDGE:
        # VTK: the normal of (0,1,2) by the right-hand rule points away from (3,4,5)
        a, b, c, top = points[conn[0]], points[conn[1]], points[conn[2]], points[conn[3]]
        if np.dot(np.cross(b - a, c - a), top - a) > 0:
            conn = [conn[0], conn[2], conn[1], conn[3], conn[5], conn[4]]
    return conn


def _orient_batch(points, ctype, conn):
    """Vectorized :func:`_orient` over rows of ``conn``."""
    conn = conn.copy()
    dim = points.shape[1]
    if ctype in (VTK_TRIANGLE, VTK_TETRA) and conn.shape[1] == dim + 1:
        e = points[conn[:, 1:]] - points[conn[:, :1]]
        flip = np.linalg.det(e) < 0
        conn[flip, 1], conn[flip, 2] = conn[flip, 2], conn[flip, 1].copy()
    elif ctype == VTK_QUAD:
        e = points[conn[:, 1:3]] - points[conn[:, :1]]
        flip = np.linalg.det(e) < 0
        conn[flip] = conn[flip][:, [0, 3, 2, 1]]
    elif ctype == VTK_WEDGE:
        p = points[conn]
        nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        flip = np.einsum("kd,kd->k", nrm, p[:, 3] - p[:, 0]) > 0
        conn[flip] = conn[flip][:, [0, 2, 1, 3, 5, 4]]
    return conn


def slice_mesh(stmesh, plane, fields=None, element_fields=None, tol=1e-10):
    """Cut a space-time (or any full-dimensional simplex) mesh with a hyperplane.

    Parameters
    ----------
    stmesh
        Mesh with ``coords`` (n columns) and ``elements`` (n+1 columns).
    plane
        A :class:`Hyperplane` or a time value ``t*``, meaning ``t = t*``.
    fields
        Mapping name -> nodal array (first axis over mesh nodes); values are
        interpolated linearly along cut edges.
    element_fields
        Mapping name -> element-local P1 values of shape
        ``(num_elements, n+1, ...)`` (discontinuous fields). When given, the
        section points are not shared between cells.
    tol
        Snapping tolerance relative to the local element size.

    Returns
    -------
    SliceComplex
    """
    coords = np.asarray(stmesh.coords, dtype=float)
    elements = np.asarray(stmesh.elements, dtype=np.int64)
    n_el, n1 = elements.shape
    n = n1 - 1
    if not isinstance(plane, Hyperplane):
        t = float(plane)
        t_lo, t_hi = coords[:, -1].min(), coords[:, -1].max()
        slack = 1e-12 * max(t_hi - t_lo, 1.0)
        if t < t_lo - slack or t > t_hi + slack:
            raise ValueError(f"slice time {t} outside [{t_lo}, {t_hi}]")
        plane = Hyperplane.at_time(t, n)
    fields = dict(fields or {})
    element_fields = dict(element_fields or {})
    merge = not element_fields

    h = max_edge_lengths(coords, elements)
    node_h = np.zeros(len(coords))
    np.maximum.at(node_h, elements.ravel(), np.repeat(h, n1))
    dist = plane.signed_distance(coords)
    node_sign = _classify(dist, node_h, tol)
    signs = node_sign[elements]
    code = ((signs + 1) * (3 ** np.arange(n1))).sum(axis=1)

    # facets lying in the plane are emitted once: by the element above, or by
    # the element below when nothing lies above
    boundary_key = None

    keys_a, keys_b, keys_el = [], [], []
    cell_blocks = []  # (vtk type, element ids, key index array (m, npts))
    offset = 0
    for cval in np.unique(code):
        els = np.flatnonzero(code == cval)
        pattern = tuple(int(s) for s in signs[els[0]])
        cells = _cell_templates(pattern)
        if cells is None:
            continue
        if cells == "facet":
            off = pattern.index(1) if 1 in pattern else pattern.index(-1)
            if pattern[off] < 0:
                if boundary_key is None:
                    fs = stmesh.facets if hasattr(stmesh, "facets") else None
                    boundary_key = _boundary_facet_keys(elements, fs)
                face = np.sort(np.delete(elements[els], off, axis=1), axis=1)
                on_bnd = np.array([tuple(r) in boundary_key for r in face.tolist()], dtype=bool)
                els = els[on_bnd]
                if els.size == 0:
                    continue
            z = [(i, i) for i in range(n1) if pattern[i] == 0]
            cells = [(_SIMPLEX_TYPE[len(z) - 1], z)]
        local_keys = []
        for _, pts in cells:
            for k in pts:
                if k not in local_keys:
                    local_keys.append(k)
        la = np.array([k[0] for k in local_keys])
        lb = np.array([k[1] for k in local_keys])
        ga = elements[els][:, la]
        gb = elements[els][:, lb]
        keys_a.append(ga.ravel())
        keys_b.append(gb.ravel())
        keys_el.append(np.repeat(els, len(local_keys)))
        base = offset + np.arange(len(els))[:, None] * len(local_keys)
        for ctype, pts in cells:
            idx = np.array([local_keys.index(k) for k in pts])
            cell_blocks.append((ctype, els, base + idx[None, :], la, lb))
        offset += len(els) * len(local_keys)

    d = n - 1
    if offset == 0:
        return SliceComplex(np.zeros((0, d)), [], np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                            {k: np.zeros((0,) + np.asarray(v).shape[1:]) for k, v in {**fields, **element_fields}.items()},
                            plane.time)
    A = np.concatenate(keys_a)
    B = np.concatenate(keys_b)
    E = np.concatenate(keys_el)
    lo = np.minimum(A, B)
    hi = np.maximum(A, B)
    if merge:
        key = np.stack([lo, hi], axis=1)
    else:
        key = np.stack([E, lo, hi], axis=1)
    uniq, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    pa = lo[first]
    pb = hi[first]
    da, db = dist[pa], dist[pb]
    same = pa == pb
    lam = np.where(same, 0.0, da / np.where(same, 1.0, da - db))
    xyz = coords[pa] + lam[:, None] * (coords[pb] - coords[pa])
    points = plane.local_coords(xyz)

    point_data = {}
    for name, values in fields.items():
        v = np.asarray(values, dtype=float)
        wa = v[pa]
        wb = v[pb]
        shape = (-1,) + (1,) * (v.ndim - 1)
        point_data[name] = wa + lam.reshape(shape) * (wb - wa)
    if element_fields:
        el_of = E[first]
        # local vertex numbers of pa, pb inside the owning element
        loc_a = np.argmax(elements[el_of] == pa[:, None], axis=1)
        loc_b = np.argmax(elements[el_of] == pb[:, None], axis=1)
        for name, values in element_fields.items():
            v = np.asarray(values, dtype=float)
            wa = v[el_of, loc_a]
            wb = v[el_of, loc_b]
            shape = (-1,) + (1,) * (wa.ndim - 1)
            point_data[name] = wa + lam.reshape(shape) * (wb - wa)

    cells, types, owner = [], [], []
    for ctype, els, conn, _, _ in cell_blocks:
        conn = _orient_batch(points, ctype, inverse[conn]) if d >= 2 else inverse[conn]
        cells.extend(conn)
        types.append(np.full(len(els), ctype))
        owner.append(els)
    types = np.concatenate(types)
    owner = np.concatenate(owner)
    order = np.lexsort((types, owner))  # deterministic: by element, then type
    cells = [np.asarray(cells[i]) for i in order]
    return SliceComplex(points, cells, types[order], owner[order], point_data, plane.time)


def _boundary_facet_keys(elements, facets=None):
    if facets is not None:
        b = facets.boundary
        return {tuple(r) for r in facets.nodes[b].tolist()}
    from .mesh import _facet_table

    keys, _, counts = _facet_table(elements)
    return {tuple(r) for r in keys[counts == 1].tolist()}
