"""Small builtin spatial meshes: intervals, boxes, random Delaunay meshes and
coarse cylinders for the pump-like moving-boundary demo."""
from __future__ import annotations

import math
from itertools import permutations

import numpy as np
from scipy.spatial import Delaunay

from .mesh import BoundaryTag, SpatialMesh, make_consistent, simplex_measures

__all__ = [
    "interval",
    "unit_square",
    "unit_cube",
    "random_delaunay",
    "cylinder",
    "pipe",
    "tag_boundary",
    "shuffle_nodes",
]


def tag_boundary(mesh, rule):
    """Return ``mesh`` with boundary tags assigned by ``rule``.

    ``rule(centroid, normal)`` receives the centroid and outward unit normal
    of a boundary facet and returns a :class:`BoundaryTag` (or its name).
    """
    fs = mesh.facets
    tags = {}
    for f in fs.boundary:
        nodes = fs.nodes[f]
        centroid = mesh.coords[nodes].mean(axis=0)
        tags[tuple(int(i) for i in nodes)] = BoundaryTag(rule(centroid, fs.normals[f]))
    return SpatialMesh(mesh.coords, mesh.elements, tags)


def interval(n, a=0.0, b=1.0):
    x = np.linspace(a, b, n + 1)[:, None]
    elements = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    return SpatialMesh(x, elements)


def unit_square(n, m=None):
    """Structured triangulation of [0,1]^2 with ``2*n*m`` triangles, nodes sorted."""
    m = n if m is None else m
    x, y = np.meshgrid(np.linspace(0, 1, n + 1), np.linspace(0, 1, m + 1), indexing="ij")
    coords = np.stack([x.ravel(), y.ravel()], axis=1)
    idx = np.arange((n + 1) * (m + 1)).reshape(n + 1, m + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    elements = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return SpatialMesh(coords, np.sort(elements, axis=1))


def unit_cube(n):
    """Kuhn triangulation of [0,1]^3: six tetrahedra per sub-cube."""
    g = np.linspace(0, 1, n + 1)
    x, y, z = np.meshgrid(g, g, g, indexing="ij")
    coords = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    idx = np.arange((n + 1) ** 3).reshape(n + 1, n + 1, n + 1)
    base = idx[:-1, :-1, :-1].ravel()
    step = np.array([(n + 1) ** 2, n + 1, 1])
    elements = []
    for perm in permutations(range(3)):
        nodes = [base]
        cur = base
        for axis in perm:
            cur = cur + step[axis]
            nodes.append(cur)
        elements.append(np.stack(nodes, axis=1))
    return SpatialMesh(coords, np.concatenate(elements))


def random_delaunay(num_points, dim, rng=None, min_quality=1e-3):
    """Delaunay mesh of random points in the unit box, with the nodes shuffled.

    Nearly flat simplices (volume below ``min_quality * h^dim``) are dropped;
    the result may have holes but is still a conforming mesh. Element node
    order is whatever Qhull produced, i.e. generally *not* consistent.
    """
    rng = np.random.default_rng(rng)
    if dim == 1:
        x = np.sort(rng.random(num_points))
        x = np.concatenate([[0.0], x, [1.0]])
        mesh = SpatialMesh(x[:, None], np.stack([np.arange(len(x) - 1), np.arange(1, len(x))], 1))
        return shuffle_nodes(mesh, rng)
    corners = np.array(np.meshgrid(*[[0.0, 1.0]] * dim, indexing="ij")).reshape(dim, -1).T
    pts = np.concatenate([corners, rng.random((num_points, dim))])
    tri = Delaunay(pts)
    elements = tri.simplices
    vol = simplex_measures(pts, elements)
    edge = np.max(
        [np.linalg.norm(pts[elements[:, i]] - pts[elements[:, j]], axis=1)
         for i in range(dim + 1) for j in range(i)],
        axis=0,
    )
    keep = vol > min_quality * edge**dim
    elements = elements[keep]
    used = np.unique(elements)
    renum = np.full(len(pts), -1)
    renum[used] = np.arange(len(used))
    mesh = SpatialMesh(pts[used], renum[elements])
    return shuffle_nodes(mesh, rng)


def shuffle_nodes(mesh, rng=None):
    """Randomly renumber nodes and permute each element's local node order."""
    rng = np.random.default_rng(rng)
    perm = rng.permutation(mesh.num_nodes)
    coords = np.empty_like(mesh.coords)
    coords[perm] = mesh.coords
    elements = perm[mesh.elements]
    elements = np.take_along_axis(elements, rng.permuted(np.tile(np.arange(elements.shape[1]), (len(elements), 1)), axis=1), axis=1)
    tags = {tuple(sorted(int(perm[i]) for i in k)): v for k, v in mesh.boundary_tags.items()}
    return SpatialMesh(coords, elements, tags)


def _disk(radii, n_sectors):
    """Triangulated disk: centre node plus one ring of nodes per radius."""
    pts = [np.zeros(2)]
    ring_start = [0]
    counts = [1]
    for r, rad in enumerate(radii, start=1):
        n = n_sectors * r
        ang = 2 * math.pi * np.arange(n) / n
        ring_start.append(len(pts))
        counts.append(n)
        pts.extend(rad * np.stack([np.cos(ang), np.sin(ang)], axis=1))
    pts = np.array(pts)
    tris = []
    for r in range(1, len(radii) + 1):
        inner_n, outer_n = counts[r - 1], counts[r]
        inner0, outer0 = ring_start[r - 1], ring_start[r]
        # walk both rings by angle and stitch them with triangles
        i = j = 0
        while i < inner_n or j < outer_n:
            ai = (i + 0.5) / inner_n if inner_n > 1 else 2.0
            aj = (j + 0.5) / outer_n
            a = inner0 + (i % inner_n)
            b = outer0 + (j % outer_n)
            if j < outer_n and (i >= inner_n or aj <= ai):
                tris.append((a, b, outer0 + ((j + 1) % outer_n)))
                j += 1
            else:
                tris.append((a, b, inner0 + ((i + 1) % inner_n)))
                i += 1
    tris = [t for t in tris if len(set(t)) == 3]
    return pts, np.array(tris)


def _extrude_z(pts2, tris, z_levels):
    """Extrude a triangle mesh in z into tetrahedra via sorted prism splitting."""
    n2 = len(pts2)
    nz = len(z_levels)
    coords = np.concatenate([np.column_stack([pts2, np.full(n2, z)]) for z in z_levels])
    tris = np.sort(tris, axis=1)
    tets = []
    for k in range(nz - 1):
        bot = tris + k * n2
        top = tris + (k + 1) * n2
        tets.append(np.stack([bot[:, 0], bot[:, 1], bot[:, 2], top[:, 0]], 1))
        tets.append(np.stack([bot[:, 1], bot[:, 2], top[:, 0], top[:, 1]], 1))
        tets.append(np.stack([bot[:, 2], top[:, 0], top[:, 1], top[:, 2]], 1))
    return coords, np.concatenate(tets)


def cylinder(radius=0.8, z0=-0.4, z1=0.4, n_rings=3, n_sectors=6, n_layers=3,
             membrane_radius=0.75, inlet_halfwidth=0.2):
    """Coarse tetrahedral cylinder resembling the diaphragm pump chamber.

    Boundary tags: top disk ``r <= membrane_radius`` is the moving membrane
    (``DirichletMoving``); lateral patches facing ``+x``/``-x`` within
    ``inlet_halfwidth`` of the mid plane are ``RobinIn``/``RobinOut``; the rest
    is ``Dirichlet``.
    """
    if membrane_radius < radius:
        # inner rings end exactly on the membrane rim, one more ring at the wall
        radii = list(membrane_radius * np.arange(1, n_rings) / (n_rings - 1)) + [radius]
    else:
        radii = list(radius * np.arange(1, n_rings + 1) / n_rings)
    pts2, tris = _disk(radii, n_sectors)
    z = np.linspace(z0, z1, n_layers + 1)
    coords, tets = _extrude_z(pts2, tris, z)
    mesh = make_consistent(SpatialMesh(coords, tets))
    zmid = 0.5 * (z0 + z1)

    def rule(c, n):
        r = math.hypot(c[0], c[1])
        if n[2] > 0.5 and r < membrane_radius:
            return BoundaryTag.DIRICHLET_MOVING
        if abs(n[2]) < 0.5 and abs(c[2] - zmid) <= inlet_halfwidth:
            if n[0] > 0.7:
                return BoundaryTag.ROBIN_IN
            if n[0] < -0.7:
                return BoundaryTag.ROBIN_OUT
        return BoundaryTag.DIRICHLET

    return tag_boundary(mesh, rule)


def pipe(radius=3.0, z0=-10.0, z1=7.0, n_rings=2, n_sectors=6, n_layers=6, strip_z=-3.0):
    """Straight tetrahedral pipe standing in for the Y-shaped pipe.

    Lateral facets above ``z = strip_z`` are ``DirichletMoving``; the bottom
    cap is ``RobinIn``, the top cap ``RobinOut``.
    """
    pts2, tris = _disk(radius * np.arange(1, n_rings + 1) / n_rings, n_sectors)
    z = np.linspace(z0, z1, n_layers + 1)
    coords, tets = _extrude_z(pts2, tris, z)
    mesh = make_consistent(SpatialMesh(coords, tets))

    def rule(c, n):
        if n[2] < -0.5:
            return BoundaryTag.ROBIN_IN
        if n[2] > 0.5:
            return BoundaryTag.ROBIN_OUT
        if c[2] >= strip_z:
            return BoundaryTag.DIRICHLET_MOVING
        return BoundaryTag.DIRICHLET

    return tag_boundary(mesh, rule)
