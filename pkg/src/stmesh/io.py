"""File formats: the native ASCII mesh format, a Gmsh 2.2 importer, VTK
legacy output, tabulated displacements, CSV reports and the run config.

Native mesh format
------------------
Plain text, ``#`` starts a comment, blank lines are ignored::

    dimension 2                 # spatial dimension; "dimension 3 spacetime" for extruded meshes
    nodes 4
    0 0.0 0.0                   # index x y ...  (indices 0..n-1, each exactly once)
    1 1.0 0.0
    2 0.0 1.0
    3 1.0 1.0
    elements 2
    0 1 2                       # d+1 node indices, order is kept
    1 3 2
    boundary 1
    0 1 RobinIn                 # facet nodes + tag (untagged facets are Dirichlet)

Space-time files add ``levels`` (the time levels) and ``origin`` (per node:
spatial node and level) blocks, and their boundary block carries boundary
classes (``Sigma0``, ``SigmaT``, ``SigmaD``, ``SigmaR``) optionally followed
by ``:Tag``. Coordinates are written with 17 significant digits, so a
write/read round trip is exact.
"""
from __future__ import annotations

import configparser
import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateElementError, InconsistentNumberingError, MeshFormatError, NonAdmissibleError
from .mesh import (
    BoundaryClass,
    BoundaryTag,
    SpaceTimeMesh,
    SpatialMesh,
    check_admissible,
    check_consistent,
)

__all__ = [
    "read_mesh",
    "write_mesh",
    "read_spacetime_mesh",
    "write_spacetime_mesh",
    "read_any_mesh",
    "verify_mesh",
    "read_gmsh",
    "write_vtk",
    "write_vtk_mesh",
    "write_vtk_slice",
    "read_displacement_table",
    "write_displacement_table",
    "write_residuals",
    "write_table",
    "RunConfig",
    "load_config",
]

_VTK_TYPES = {(1, 2): 3, (2, 3): 5, (3, 4): 10}  # (dim, nodes per cell) -> VTK id


def _fmt(x):
    return "%.17g" % x


# ---------------------------------------------------------------------------
# native format: reading


class _Lines:
    """Iterator over significant lines, remembering 1-based line numbers."""

    def __init__(self, path):
        self.path = str(path)
        with open(path, encoding="utf-8") as fh:
            raw = fh.read().splitlines()
        self.items = []
        for no, line in enumerate(raw, start=1):
            line = line.split("#", 1)[0].strip()
            if line:
                self.items.append((no, line.split()))
        self.pos = 0

    def next(self, what):
        if self.pos >= len(self.items):
            last = self.items[-1][0] if self.items else 0
            raise MeshFormatError(f"{self.path}: unexpected end of file, expected {what}", line=last)
        item = self.items[self.pos]
        self.pos += 1
        return item

    def done(self):
        return self.pos >= len(self.items)

    def error(self, line, msg):
        return MeshFormatError(f"{msg} ({self.path})", line=line)


def _block_header(lines, name):
    no, tok = lines.next(f"'{name}' block")
    if tok[0] != name or len(tok) != 2:
        raise lines.error(no, f"expected '{name} <count>', got {' '.join(tok)!r}")
    try:
        count = int(tok[1])
    except ValueError:
        raise lines.error(no, f"bad count {tok[1]!r}") from None
    if count < 0:
        raise lines.error(no, "negative count")
    return no, count


def _parse_ints(lines, no, tok, n, what):
    if len(tok) < n:
        raise lines.error(no, f"{what} needs {n} node indices")
    try:
        return [int(v) for v in tok[:n]]
    except ValueError:
        raise lines.error(no, f"non-integer node index in {what}") from None


def _parse(path):
    lines = _Lines(path)
    no, tok = lines.next("'dimension' line")
    if tok[0] != "dimension" or len(tok) not in (2, 3):
        raise lines.error(no, "file must start with 'dimension <d>'")
    try:
        dim = int(tok[1])
    except ValueError:
        raise lines.error(no, f"bad dimension {tok[1]!r}") from None
    spacetime = len(tok) == 3
    if spacetime and tok[2] != "spacetime":
        raise lines.error(no, f"unknown qualifier {tok[2]!r}")
    if not 1 <= dim <= 3:
        raise lines.error(no, "spatial dimension must be 1, 2 or 3")
    ncols = dim + 1 if spacetime else dim

    _, n_nodes = _block_header(lines, "nodes")
    coords = np.full((n_nodes, ncols), np.nan)
    node_line = np.zeros(n_nodes, dtype=np.int64)
    for _ in range(n_nodes):
        no, tok = lines.next("node line")
        if len(tok) != ncols + 1:
            raise lines.error(no, f"node line needs an index and {ncols} coordinates")
        try:
            idx = int(tok[0])
            xyz = [float(v) for v in tok[1:]]
        except ValueError:
            raise lines.error(no, "malformed node line") from None
        if not 0 <= idx < n_nodes:
            raise lines.error(no, f"node index {idx} out of range 0..{n_nodes - 1}")
        if node_line[idx]:
            raise lines.error(no, f"node {idx} defined twice (first on line {node_line[idx]})")
        if not np.all(np.isfinite(xyz)):
            raise lines.error(no, "non-finite coordinate")
        coords[idx] = xyz
        node_line[idx] = no
    # duplicate coordinates
    if n_nodes > 1:
        order = np.lexsort(coords.T[::-1])
        same = np.all(coords[order[1:]] == coords[order[:-1]], axis=1)
        if np.any(same):
            j = int(np.flatnonzero(same)[0])
            a, b = sorted((int(order[j]), int(order[j + 1])))
            raise lines.error(int(node_line[b]), f"node {b} duplicates the coordinates of node {a}")

    _, n_el = _block_header(lines, "elements")
    nv = ncols + 1
    elements = np.zeros((n_el, nv), dtype=np.int64)
    for e in range(n_el):
        no, tok = lines.next("element line")
        if len(tok) != nv:
            raise lines.error(no, f"element needs exactly {nv} node indices")
        ids = _parse_ints(lines, no, tok, nv, "element")
        bad = [i for i in ids if not 0 <= i < n_nodes]
        if bad:
            raise lines.error(no, f"element references node {bad[0]}, but there are only {n_nodes} nodes")
        if len(set(ids)) != nv:
            raise lines.error(no, "element repeats a node")
        elements[e] = ids

    out = {"dim": dim, "spacetime": spacetime, "coords": coords, "elements": elements, "boundary": []}
    while not lines.done():
        no, tok = lines.next("block")
        lines.pos -= 1
        if tok[0] == "boundary":
            _, nb = _block_header(lines, "boundary")
            nf = ncols  # nodes per facet
            for _ in range(nb):
                no, tok = lines.next("boundary line")
                if len(tok) != nf + 1:
                    raise lines.error(no, f"boundary line needs {nf} node indices and a tag")
                ids = _parse_ints(lines, no, tok, nf, "boundary facet")
                if any(not 0 <= i < n_nodes for i in ids):
                    raise lines.error(no, "boundary facet references a missing node")
                out["boundary"].append((no, tuple(sorted(ids)), tok[-1]))
        elif tok[0] == "levels" and spacetime:
            _, nl = _block_header(lines, "levels")
            vals = []
            for _ in range(nl):
                no, tok = lines.next("time level")
                try:
                    vals.append(float(tok[0]))
                except ValueError:
                    raise lines.error(no, "malformed time level") from None
            out["levels"] = np.array(vals)
        elif tok[0] == "origin" and spacetime:
            _, no_count = _block_header(lines, "origin")
            if no_count != n_nodes:
                raise lines.error(no, "origin block must list every node")
            origin = np.zeros((n_nodes, 2), dtype=np.int64)
            for i in range(n_nodes):
                no, tok = lines.next("origin line")
                vals = _parse_ints(lines, no, tok, 2, "origin")
                origin[i] = vals
            out["origin"] = origin
        else:
            raise lines.error(no, f"unknown block {tok[0]!r}")
    return out


def read_mesh(path, check=True, tol=None):
    """Read a spatial mesh in the native format.

    With ``check`` the mesh must be consistently numbered
    (:class:`InconsistentNumberingError` otherwise) and admissible
    (:class:`NonAdmissibleError`).
    """
    data = _parse(path)
    if data["spacetime"]:
        raise MeshFormatError(f"{path}: is a space-time mesh; use read_spacetime_mesh", line=1)
    tags = {}
    for no, key, name in data["boundary"]:
        try:
            tags[key] = BoundaryTag(name)
        except ValueError:
            raise MeshFormatError(f"unknown boundary tag {name!r} ({path})", line=no) from None
    mesh = SpatialMesh(data["coords"], data["elements"], tags)
    bset = set(mesh.boundary_facets)
    for no, key, _ in data["boundary"]:
        if key not in bset:
            raise MeshFormatError(f"facet {key} is not on the boundary ({path})", line=no)
    if check:
        verify_mesh(mesh, tol)
    return mesh


def verify_mesh(mesh, tol=None):
    """Raise the matching error if ``mesh`` is inconsistently numbered,
    has degenerate elements or is not admissible; returns the admissibility report."""
    rep = check_consistent(mesh)
    if rep.pairs:
        raise InconsistentNumberingError(
            f"{len(rep.pairs)} element pair(s) order shared nodes differently, e.g. {rep.pairs[0]}", rep.pairs
        )
    arep = check_admissible(mesh) if tol is None else check_admissible(mesh, tol=tol)
    if arep.degenerate:
        raise DegenerateElementError(f"{len(arep.degenerate)} degenerate element(s)", arep.degenerate)
    if arep.violations:
        raise NonAdmissibleError(f"{len(arep.violations)} non-conforming element pair(s), e.g. {arep.violations[0]}", arep)
    return arep


def read_spacetime_mesh(path):
    """Read a space-time mesh written by :func:`write_spacetime_mesh`."""
    data = _parse(path)
    if not data["spacetime"]:
        raise MeshFormatError(f"{path}: not a space-time mesh", line=1)
    origin = data.get("origin")
    st = SpaceTimeMesh(
        data["coords"],
        data["elements"],
        spatial_node=None if origin is None else origin[:, 0],
        level=None if origin is None else origin[:, 1],
        time_levels=data.get("levels"),
    )
    if data["boundary"]:
        fs = st.facets
        index = {tuple(fs.nodes[f].tolist()): i for i, f in enumerate(fs.boundary)}
        classes = np.array([None] * len(fs.boundary), dtype=object)
        tags = np.array([None] * len(fs.boundary), dtype=object)
        for no, key, label in data["boundary"]:
            if key not in index:
                raise MeshFormatError(f"facet {key} is not on the boundary ({path})", line=no)
            cls, _, tag = label.partition(":")
            try:
                classes[index[key]] = BoundaryClass(cls)
                tags[index[key]] = BoundaryTag(tag) if tag else None
            except ValueError:
                raise MeshFormatError(f"unknown boundary label {label!r} ({path})", line=no) from None
        if any(c is None for c in classes):
            raise MeshFormatError(f"{path}: boundary block does not cover every boundary facet", line=1)
        st = SpaceTimeMesh(st.coords, st.elements, st.spatial_node, st.level, st.time_levels, classes, tags)
    return st


def read_any_mesh(path, check=True, tol=None):
    """Spatial or space-time mesh, whichever the file holds (native or ``.msh``)."""
    if str(path).endswith(".msh"):
        return read_gmsh(path, check=check)
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].split()
            if line:
                break
    if len(line) == 3 and line[0] == "dimension" and line[2] == "spacetime":
        return read_spacetime_mesh(path)
    return read_mesh(path, check=check, tol=tol)


# ---------------------------------------------------------------------------
# native format: writing


def write_mesh(path, mesh: SpatialMesh):
    """Write a spatial mesh; only non-default (non-Dirichlet) tags are listed."""
    tagged = sorted((k, t) for k, t in mesh.boundary_tags.items() if t != BoundaryTag.DIRICHLET)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"dimension {mesh.dim}\n")
        _write_nodes_elements(fh, mesh.coords, mesh.elements)
        fh.write(f"boundary {len(tagged)}\n")
        for key, tag in tagged:
            fh.write(" ".join(map(str, key)) + f" {tag.value}\n")


def write_spacetime_mesh(path, st: SpaceTimeMesh):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"dimension {st.spatial_dim} spacetime\n")
        _write_nodes_elements(fh, st.coords, st.elements)
        if st.boundary_class is not None:
            fs = st.facets
            fh.write(f"boundary {len(fs.boundary)}\n")
            for f, cls, tag in zip(fs.boundary, st.boundary_class, st.boundary_tag):
                label = cls.value + (f":{tag.value}" if tag is not None else "")
                fh.write(" ".join(map(str, fs.nodes[f].tolist())) + f" {label}\n")
        if st.time_levels is not None:
            fh.write(f"levels {len(st.time_levels)}\n")
            fh.writelines(_fmt(t) + "\n" for t in st.time_levels)
        if st.spatial_node is not None and st.level is not None:
            fh.write(f"origin {st.num_nodes}\n")
            fh.writelines(f"{a} {b}\n" for a, b in zip(st.spatial_node.tolist(), st.level.tolist()))


def _write_nodes_elements(fh, coords, elements):
    fh.write(f"nodes {len(coords)}\n")
    for i, row in enumerate(coords):
        fh.write(f"{i} " + " ".join(_fmt(v) for v in row) + "\n")
    fh.write(f"elements {len(elements)}\n")
    for row in elements:
        fh.write(" ".join(map(str, row.tolist())) + "\n")


# ---------------------------------------------------------------------------
# Gmsh 2.2 ASCII


_GMSH_SIMPLEX = {15: 0, 1: 1, 2: 2, 4: 3}  # element type -> dimension
_GMSH_NODES = {15: 1, 1: 2, 2: 3, 4: 4}


def read_gmsh(path, check=True):
    """Import a Gmsh MSH 2.2 ASCII file restricted to simplices.

    The highest-dimensional elements form the mesh; codimension-one elements
    whose physical group is named after a boundary tag (``RobinIn`` etc.)
    tag the corresponding facets. Unused nodes are dropped and nodes are
    renumbered in order of appearance in ``$Nodes``.
    """
    lines = _Lines(path)
    names = {}
    nodes = {}
    node_order = []
    cells = []
    while not lines.done():
        no, tok = lines.next("section")
        sec = tok[0]
        if sec == "$MeshFormat":
            no, tok = lines.next("format line")
            if not tok[0].startswith("2") or tok[1] != "0":
                raise lines.error(no, "only ASCII MSH 2.x is supported")
            lines.next("$EndMeshFormat")
        elif sec == "$PhysicalNames":
            _, cnt = _gmsh_count(lines)
            for _ in range(cnt):
                no, tok = lines.next("physical name")
                names[int(tok[1])] = " ".join(tok[2:]).strip('"')
            lines.next("$EndPhysicalNames")
        elif sec == "$Nodes":
            _, cnt = _gmsh_count(lines)
            for _ in range(cnt):
                no, tok = lines.next("node")
                try:
                    nodes[int(tok[0])] = [float(v) for v in tok[1:4]]
                except (ValueError, IndexError):
                    raise lines.error(no, "malformed node line") from None
                node_order.append(int(tok[0]))
            lines.next("$EndNodes")
        elif sec == "$Elements":
            _, cnt = _gmsh_count(lines)
            for _ in range(cnt):
                no, tok = lines.next("element")
                try:
                    vals = [int(v) for v in tok]
                    etype, ntags = vals[1], vals[2]
                except (ValueError, IndexError):
                    raise lines.error(no, "malformed element line") from None
                if etype not in _GMSH_SIMPLEX:
                    raise lines.error(no, f"element type {etype} is not a linear simplex")
                conn = vals[3 + ntags:]
                if len(conn) != _GMSH_NODES[etype]:
                    raise lines.error(no, "wrong number of element nodes")
                missing = [c for c in conn if c not in nodes]
                if missing:
                    raise lines.error(no, f"element references undefined node {missing[0]}")
                phys = vals[3] if ntags > 0 else 0
                cells.append((no, _GMSH_SIMPLEX[etype], phys, conn))
            lines.next("$EndElements")
        else:  # skip unknown sections
            end = "$End" + sec[1:]
            while True:
                _, tok = lines.next(end)
                if tok[0] == end:
                    break
    if not cells:
        raise MeshFormatError(f"{path}: no elements", line=1)
    dim = max(c[1] for c in cells)
    if dim == 0:
        raise MeshFormatError(f"{path}: only point elements", line=1)
    top = [c for c in cells if c[1] == dim]
    used = sorted({n for c in top for n in c[3]}, key=node_order.index)
    new = {old: i for i, old in enumerate(used)}
    coords = np.array([nodes[i][:dim] for i in used], dtype=float)
    elements = np.array([[new[n] for n in c[3]] for c in top], dtype=np.int64)
    tags = {}
    for no, cdim, phys, conn in cells:
        if cdim != dim - 1 or phys not in names:
            continue
        try:
            tag = BoundaryTag(names[phys])
        except ValueError:
            continue
        if any(n not in new for n in conn):
            raise MeshFormatError(f"boundary element off the mesh ({path})", line=no)
        tags[tuple(sorted(new[n] for n in conn))] = tag
    mesh = SpatialMesh(coords, elements, tags)
    if check:
        verify_mesh(mesh)
    return mesh


def _gmsh_count(lines):
    no, tok = lines.next("count")
    try:
        return no, int(tok[0])
    except ValueError:
        raise lines.error(no, "expected a count") from None


# ---------------------------------------------------------------------------
# VTK legacy ASCII


def _vtk_float(x):
    return "{:.16e}".format(x)


def write_vtk(path, points, cells, cell_types, point_data=None, cell_data=None, title="stmesh"):
    """Unstructured grid in VTK legacy ASCII format.

    ``points`` has 1 to 3 columns (padded with zeros). Arrays in
    ``point_data``/``cell_data`` are written as SCALARS when 1-D and as
    VECTORS when 2-D (padded to three components).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    pts = np.zeros((len(points), 3))
    pts[:, : points.shape[1]] = points
    cells = [np.asarray(c, dtype=np.int64) for c in cells]
    size = sum(len(c) + 1 for c in cells)
    out = [
        "# vtk DataFile Version 3.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(pts)} double",
    ]
    out += [" ".join(_vtk_float(v) for v in p) for p in pts]
    out.append(f"CELLS {len(cells)} {size}")
    out += [" ".join(map(str, [len(c), *c.tolist()])) for c in cells]
    out.append(f"CELL_TYPES {len(cells)}")
    out += [str(int(t)) for t in cell_types]
    for section, data, count in (("POINT_DATA", point_data, len(pts)), ("CELL_DATA", cell_data, len(cells))):
        if not data:
            continue
        out.append(f"{section} {count}")
        for name in sorted(data):
            arr = np.asarray(data[name], dtype=float)
            if len(arr) != count:
                raise ValueError(f"{section} field {name!r} has {len(arr)} values, expected {count}")
            key = name.replace(" ", "_")
            if arr.ndim == 1:
                out += [f"SCALARS {key} double 1", "LOOKUP_TABLE default"]
                out += [_vtk_float(v) for v in arr]
            else:
                vec = np.zeros((count, 3))
                vec[:, : arr.shape[1]] = arr
                out.append(f"VECTORS {key} double")
                out += [" ".join(_vtk_float(v) for v in row) for row in vec]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def write_vtk_slice(path, section, cell_data=None, title=None):
    """Write a :class:`stmesh.slicing.SliceComplex`."""
    if title is None:
        title = "slice" if section.time is None else f"slice t={section.time:.17g}"
    write_vtk(path, section.points, section.cells, section.cell_types, section.point_data, cell_data, title)


def write_vtk_mesh(path, mesh, point_data=None, cell_data=None, title="mesh"):
    """Write a spatial simplex mesh (d = 1, 2, 3)."""
    n = mesh.elements.shape[1]
    ctype = _VTK_TYPES.get((mesh.coords.shape[1], n))
    if ctype is None:
        raise ValueError("VTK output supports meshes of dimension 1 to 3 only")
    write_vtk(path, mesh.coords, list(mesh.elements), [ctype] * len(mesh.elements), point_data, cell_data, title)


# ---------------------------------------------------------------------------
# tabulated displacements


def read_displacement_table(path, num_nodes=None):
    """Per-node displacement snapshots::

        displacement <num_nodes> <d>
        time <t0>
        <d values per line, one line per node>
        time <t1>
        ...

    Returns a :class:`stmesh.motion.TabulatedDisplacement`.
    """
    from .motion import TabulatedDisplacement

    lines = _Lines(path)
    no, tok = lines.next("header")
    if tok[0] != "displacement" or len(tok) != 3:
        raise lines.error(no, "expected 'displacement <num_nodes> <d>'")
    n, d = int(tok[1]), int(tok[2])
    if num_nodes is not None and n != num_nodes:
        raise lines.error(no, f"table has {n} nodes, mesh has {num_nodes}")
    times, values = [], []
    while not lines.done():
        no, tok = lines.next("time line")
        if tok[0] != "time" or len(tok) != 2:
            raise lines.error(no, "expected 'time <t>'")
        times.append(float(tok[1]))
        if len(times) > 1 and times[-1] <= times[-2]:
            raise lines.error(no, "times must increase")
        block = np.empty((n, d))
        for i in range(n):
            no, tok = lines.next("displacement line")
            if len(tok) != d:
                raise lines.error(no, f"expected {d} values")
            try:
                block[i] = [float(v) for v in tok]
            except ValueError:
                raise lines.error(no, "malformed value") from None
        values.append(block)
    if len(times) < 2:
        raise MeshFormatError(f"{path}: need at least two snapshots", line=lines.items[-1][0])
    return TabulatedDisplacement(np.array(times), np.array(values))


def write_displacement_table(path, times, values):
    values = np.asarray(values, dtype=float)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"displacement {values.shape[1]} {values.shape[2]}\n")
        for t, block in zip(times, values):
            fh.write(f"time {_fmt(t)}\n")
            for row in block:
                fh.write(" ".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# CSV


def write_table(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def write_residuals(path, residuals):
    """GMRES history: iteration number and relative residual."""
    write_table(path, ["iteration", "relative_residual"], [(i, float(r)) for i, r in enumerate(residuals)])


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunConfig:
    """Everything a CLI run needs, read from an INI file.

    Sections and keys (all optional)::

        [mesh]     file = base.mesh | builtin = unit_square:8 (interval:n, unit_cube:n, cylinder, pipe)
        [time]     T = 1.0, K = 4, levels = 0, 0.5, 1   (levels overrides T and K)
        [motion]   kind = none|pump|ypipe|user, amplitude, z_only, smoothing, table = disp.txt
        [problem]  kind = manufactured|patch|pump|ypipe, nu, refinements = 4, 8, 16, 32
        [solver]   sigma_u, sigma_p, restart, max_iter, rel_tol, preconditioner = BlockDiag|None
        [output]   directory = out, slices = 0.25, 0.5, matrix_market = false

    Relative paths are resolved against the directory of the config file.
    """

    mesh_file: str | None = None
    builtin: str | None = None
    T: float = 1.0
    K: int = 4
    levels: list | None = None
    motion_kind: str = "none"
    motion_params: dict = field(default_factory=dict)
    motion_table: str | None = None
    problem: str = "patch"
    nu: float = 1.0
    refinements: list = field(default_factory=lambda: [4, 8, 16, 32])
    solver: dict = field(default_factory=dict)
    out_dir: str = "out"
    slices: list = field(default_factory=list)
    matrix_market: bool = False

    def __post_init__(self):
        if self.levels is not None:
            lv = np.asarray(self.levels, dtype=float)
            if len(lv) < 2 or np.any(np.diff(lv) <= 0):
                raise ValueError("time levels must be strictly increasing")
            self.T = float(lv[-1])
            self.K = len(lv) - 1
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        t0 = 0.0 if self.levels is None else float(self.levels[0])
        for t in self.slices:
            if not t0 <= t <= self.T:
                raise ValueError(f"slice time {t} outside [{t0}, {self.T}]")
        if self.problem not in ("manufactured", "patch", "pump", "ypipe"):
            raise ValueError(f"unknown problem {self.problem!r}")

    def time_levels(self):
        from .extrusion import uniform_levels

        if self.levels is not None:
            return np.asarray(self.levels, dtype=float)
        return uniform_levels(self.T, self.K)

    def motion_spec(self, num_nodes=None):
        from .motion import MotionSpec

        if self.motion_kind == "none":
            return None
        params = dict(self.motion_params)
        params.setdefault("T", self.T)
        if self.motion_kind == "user":
            if self.motion_table is None:
                raise ValueError("user motion needs [motion] table")
            params["user_field"] = read_displacement_table(self.motion_table, num_nodes)
            params.setdefault("smoothing", "direct")
        return MotionSpec(kind=self.motion_kind, **params)

    def solver_config(self, **overrides):
        from .dg import SolverConfig

        kw = dict(self.solver)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return SolverConfig(**kw)


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def load_config(path):
    """Parse an INI run configuration into a :class:`RunConfig`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not cp.read(path, encoding="utf-8"):
        raise FileNotFoundError(path)
    base = Path(path).resolve().parent

    def resolve(p):
        return None if p is None else os.path.normpath(str(base / p))

    known = {
        "mesh": {"file", "builtin"},
        "time": {"t", "k", "levels"},
        "motion": {"kind", "amplitude", "z_only", "smoothing", "table", "rest_height", "membrane_radius",
                   "anchor_z", "lift"},
        "problem": {"kind", "nu", "refinements"},
        "solver": {"sigma_u", "sigma_p", "restart", "max_iter", "rel_tol", "preconditioner", "ilu_levels"},
        "output": {"directory", "slices", "matrix_market"},
    }
    for sec in cp.sections():
        if sec not in known:
            raise ValueError(f"{path}: unknown section [{sec}]")
        extra = set(cp[sec]) - known[sec]
        if extra:
            raise ValueError(f"{path}: unknown key(s) {sorted(extra)} in [{sec}]")

    get = lambda s, k, fb=None: cp.get(s, k, fallback=fb)  # noqa: E731
    motion = {}
    if cp.has_section("motion"):
        for key in ("amplitude", "rest_height", "membrane_radius", "anchor_z", "lift"):
            if cp.has_option("motion", key):
                motion[key] = cp.getfloat("motion", key)
        if cp.has_option("motion", "z_only"):
            motion["z_only"] = cp.getboolean("motion", "z_only")
        if cp.has_option("motion", "smoothing"):
            motion["smoothing"] = cp.get("motion", "smoothing")
    solver = {}
    if cp.has_section("solver"):
        for key in ("sigma_u", "sigma_p", "rel_tol"):
            if cp.has_option("solver", key):
                solver[key] = cp.getfloat("solver", key)
        for key in ("restart", "max_iter"):
            if cp.has_option("solver", key):
                solver[key] = cp.getint("solver", key)
        if cp.has_option("solver", "preconditioner"):
            solver["preconditioner"] = cp.get("solver", "preconditioner")
        if cp.has_option("solver", "ilu_levels"):
            solver["ilu_levels"] = tuple(int(v) for v in _floats(cp.get("solver", "ilu_levels")))
    levels = get("time", "levels")
    return RunConfig(
        mesh_file=resolve(get("mesh", "file")),
        builtin=get("mesh", "builtin"),
        T=cp.getfloat("time", "T", fallback=1.0),
        K=cp.getint("time", "K", fallback=4),
        levels=None if levels is None else _floats(levels),
        motion_kind=get("motion", "kind", "none"),
        motion_params=motion,
        motion_table=resolve(get("motion", "table")),
        problem=get("problem", "kind", "patch"),
        nu=cp.getfloat("problem", "nu", fallback=1.0),
        refinements=[int(v) for v in _floats(get("problem", "refinements", "4 8 16 32"))],
        solver=solver,
        out_dir=resolve(get("output", "directory", "out")),
        slices=_floats(get("output", "slices", "")),
        matrix_market=cp.getboolean("output", "matrix_market", fallback=False),
    )
