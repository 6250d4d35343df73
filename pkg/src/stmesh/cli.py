"""Command line interface: ``stmesh info|check|extrude|slice|solve``.

Exit codes: 0 success, 2 parse/config error, 3 inconsistent numbering,
4 non-admissible mesh, 5 degenerate elements, 6 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import DegenerateElementError, MeshFormatError, NonAdmissibleError, StmeshError
from .extrusion import extrude_multi, uniform_levels
from .io import (
    RunConfig,
    load_config,
    read_any_mesh,
    write_residuals,
    write_spacetime_mesh,
    write_table,
    write_mesh,
    write_vtk_slice,
)
from .mesh import GEOM_TOL, SpaceTimeMesh, check_admissible, check_consistent, make_consistent
from . import meshes

log = logging.getLogger("stmesh")


def _floats(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}") from None


def builtin_mesh(spec):
    """``name[:n]`` -> mesh: ``interval:n``, ``unit_square:n``, ``unit_cube:n``, ``cylinder``, ``pipe``."""
    name, _, arg = spec.partition(":")
    n = int(arg) if arg else None
    if name == "interval":
        return meshes.interval(n or 8)
    if name == "unit_square":
        return meshes.unit_square(n or 4)
    if name == "unit_cube":
        return meshes.unit_cube(n or 2)
    if name == "cylinder":
        return meshes.cylinder()
    if name == "pipe":
        return meshes.pipe()
    raise ValueError(f"unknown builtin mesh {spec!r}")


def _config(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "slabs", None) is not None or getattr(args, "end_time", None) is not None:
        cfg = RunConfig(**{**cfg.__dict__, "levels": None,
                           "K": args.slabs if args.slabs is not None else cfg.K,
                           "T": args.end_time if args.end_time is not None else cfg.T})
    return cfg


def _tol(args):
    return GEOM_TOL if getattr(args, "tol", None) is None else args.tol


def _load_mesh(args, cfg, check=True):
    if args.mesh:
        return read_any_mesh(args.mesh, check=check, tol=_tol(args))
    if cfg.mesh_file:
        return read_any_mesh(cfg.mesh_file, check=check, tol=_tol(args))
    if cfg.builtin:
        return builtin_mesh(cfg.builtin)
    raise MeshFormatError("no mesh given (use --mesh or [mesh] in the config)")


def _require_admissible(mesh, tol, what="mesh"):
    rep = check_admissible(mesh, tol=tol)
    if rep.degenerate:
        raise DegenerateElementError(f"{what}: {len(rep.degenerate)} degenerate element(s)", rep.degenerate)
    if rep.violations:
        raise NonAdmissibleError(f"{what}: {len(rep.violations)} non-conforming pair(s), first {rep.violations[0]}", rep)
    return rep


def _extrude(mesh, cfg, check=True, tol=GEOM_TOL):
    st = extrude_multi(mesh, cfg.time_levels(), motion=cfg.motion_spec(mesh.num_nodes), check=check)
    if check:
        _require_admissible(st, tol, "space-time mesh")
    return st


# ---------------------------------------------------------------------------
# subcommands


def cmd_info(args):
    cfg = _config(args)
    mesh = _load_mesh(args, cfg, check=False)
    meas = mesh.measures
    kind = "space-time" if isinstance(mesh, SpaceTimeMesh) else "spatial"
    dim = mesh.spatial_dim if isinstance(mesh, SpaceTimeMesh) else mesh.dim
    print(f"{kind} mesh, spatial dimension {dim}")
    print(f"nodes          {mesh.num_nodes}")
    print(f"elements       {mesh.num_elements}")
    print(f"total measure  {meas.sum():.12g}")
    print(f"element measure min {meas.min():.6g}  max {meas.max():.6g}")
    fs = mesh.facets
    print(f"facets         {len(fs)} ({len(fs.interior)} interior, {len(fs.boundary)} boundary)")
    if isinstance(mesh, SpaceTimeMesh):
        print(f"time interval  [{mesh.t0:.12g}, {mesh.T:.12g}]")
        if mesh.time_levels is not None:
            print(f"slabs          {len(mesh.time_levels) - 1}")
        if mesh.boundary_class is not None:
            classes, counts = np.unique([c.value for c in mesh.boundary_class], return_counts=True)
            for c, n in zip(classes, counts):
                print(f"  {c:<16s} {n}")
    else:
        tags, counts = np.unique([mesh.tag(f).value for f in mesh.boundary_facets], return_counts=True)
        for t, n in zip(tags, counts):
            print(f"  {t:<16s} {n}")
    rep = check_consistent(mesh)
    print(f"consistently numbered: {'yes' if not rep.pairs else 'no'}")
    return 0


def cmd_check(args):
    """Numbering of the input as given; admissibility of its sorted version
    and of the one-slab extrusion. Exit 0 only if everything passes."""
    cfg = _config(args)
    mesh = _load_mesh(args, cfg, check=False)
    tol = _tol(args)
    code = 0
    rep = check_consistent(mesh)
    if rep.pairs:
        print(f"numbering: INCONSISTENT ({len(rep.pairs)} element pairs, first {rep.pairs[0]})")
        code = 3
    else:
        print("numbering: consistent")
    fixed = make_consistent(mesh)
    if check_consistent(fixed).pairs:  # cannot happen after sorting
        raise StmeshError("sorting did not produce a consistent numbering")
    arep = check_admissible(fixed, tol=tol)
    if arep.degenerate:
        print(f"degenerate elements: {len(arep.degenerate)} (first {arep.degenerate[:5]})")
        return 5
    if arep.violations:
        print(f"admissibility: FAILED ({len(arep.violations)} pairs, first {arep.violations[0]})")
        return 4
    print("admissibility: ok")
    if not isinstance(mesh, SpaceTimeMesh):
        st = extrude_multi(fixed, uniform_levels(1.0, 1))
        srep = check_admissible(st, tol=tol)
        if not srep.ok:
            print(f"extrusion admissibility: FAILED ({len(srep.violations)} pairs)")
            return 5 if srep.degenerate else 4
        print("extrusion admissibility: ok")
    if args.out:
        if isinstance(mesh, SpaceTimeMesh):
            write_spacetime_mesh(args.out, fixed)
        else:
            write_mesh(args.out, fixed)
        print(f"consistently numbered mesh written to {args.out}")
    return code


def cmd_extrude(args):
    cfg = _config(args)
    mesh = _load_mesh(args, cfg, check=not args.no_check)
    if isinstance(mesh, SpaceTimeMesh):
        raise MeshFormatError("extrude needs a spatial mesh")
    st = _extrude(mesh, cfg, check=not args.no_check, tol=_tol(args))
    out = args.out or "spacetime.mesh"
    write_spacetime_mesh(out, st)
    print(f"{st.num_elements} elements, {st.num_nodes} nodes, {len(cfg.time_levels()) - 1} slabs -> {out}")
    return 0


def _slice_times(args, cfg):
    times = args.slices if args.slices is not None else cfg.slices
    if not times:
        raise MeshFormatError("no slice times given (use --slices or [output] slices)")
    return times


def cmd_slice(args):
    from .slicing import slice_mesh

    cfg = _config(args)
    mesh = _load_mesh(args, cfg, check=not args.no_check)
    st = mesh if isinstance(mesh, SpaceTimeMesh) else _extrude(mesh, cfg, not args.no_check, _tol(args))
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    fields = {"time": st.coords[:, -1]}
    for i, t in enumerate(_slice_times(args, cfg)):
        sec = slice_mesh(st, t, fields=fields)
        path = os.path.join(out, f"slice_{i:03d}.vtk")
        write_vtk_slice(path, sec)
        counts = ", ".join(f"{k}:{v}" for k, v in sorted(sec.type_counts().items()))
        print(f"t={t:.6g}: {sec.num_cells} cells ({counts}), measure {sec.measure():.12g} -> {path}")
    return 0


def _solve_one(st, data, config, out, slices, tag="", matrix_market=False):
    from .dg import build_block_system, gmres_solve, pressure_space, velocity_space
    from .slicing import slice_mesh

    V = velocity_space(st)
    Q = pressure_space(st)
    t0 = time.perf_counter()
    system = build_block_system(V, Q, data, config)
    t1 = time.perf_counter()
    if matrix_market:
        system.write_matrix_market(os.path.join(out, f"system{tag}"))
    try:
        U, P, its, hist = gmres_solve(system, config)
    except StmeshError as exc:
        if getattr(exc, "residuals", None):
            write_residuals(os.path.join(out, f"residuals{tag}.csv"), exc.residuals)
        raise
    t2 = time.perf_counter()
    write_residuals(os.path.join(out, f"residuals{tag}.csv"), hist)
    u = system.expand(U)
    print(
        f"{V.ndofs} velocity + {Q.ndofs} pressure dofs: assembly {t1 - t0:.2f} s, "
        f"GMRES {its} iterations {t2 - t1:.2f} s, residual {hist[-1]:.2e}"
    )
    uk = V.split(u)
    pk = np.repeat(P[:, None], st.elements.shape[1], axis=1)
    for i, t in enumerate(slices):
        sec = slice_mesh(st, t, element_fields={"velocity": uk, "pressure": pk})
        write_vtk_slice(os.path.join(out, f"solution{tag}_{i:03d}.vtk"), sec)
    return u, P, its, hist


def cmd_solve(args):
    from .dg import l2_error, l2_error_pressure, pressure_space, velocity_space
    from .dg.problems import constant_flow, manufactured_1d, manufactured_mesh_1d, pump_problem, ypipe_problem

    cfg = _config(args)
    config = cfg.solver_config(sigma_u=args.sigma_u, sigma_p=args.sigma_p)
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    slices = args.slices if args.slices is not None else cfg.slices

    if cfg.problem == "manufactured":
        data, u_ex, p_ex = manufactured_1d(nu=cfg.nu)
        rows = []
        prev = None
        for n in cfg.refinements:
            st = extrude_multi(manufactured_mesh_1d(n), uniform_levels(cfg.T, n))
            u, p, its, _ = _solve_one(st, data, config, out, slices, tag=f"_n{n}", matrix_market=cfg.matrix_market)
            V = velocity_space(st)
            eu = l2_error(V, u, u_ex)
            ep = l2_error_pressure(pressure_space(st), p, p_ex)
            order = "" if prev is None else math.log(prev[0] / eu) / math.log(n / prev[1])
            rows.append((n, 1.0 / n, V.ndofs + st.num_elements, its, eu, ep, order))
            prev = (eu, n)
            print(f"n={n}: velocity L2 error {eu:.4e}, pressure L2 error {ep:.4e}")
        write_table(
            os.path.join(out, "errors.csv"),
            ["n", "h", "dofs", "iterations", "velocity_l2", "pressure_l2", "velocity_order"],
            rows,
        )
        return 0

    mesh = _load_mesh(args, cfg, check=not args.no_check) if (args.mesh or cfg.mesh_file or cfg.builtin) else None
    if mesh is None:
        mesh = builtin_mesh({"pump": "cylinder", "ypipe": "pipe"}.get(cfg.problem, "unit_square:4"))
    st = mesh if isinstance(mesh, SpaceTimeMesh) else _extrude(mesh, cfg, not args.no_check, _tol(args))
    d = st.spatial_dim
    spec = cfg.motion_spec(st.num_nodes)
    if cfg.problem == "patch":
        c = np.arange(1.0, d + 1.0)
        data = constant_flow(c, nu=cfg.nu)
    elif cfg.problem == "pump":
        if spec is None or spec.kind != "pump":
            raise MeshFormatError("problem 'pump' needs [motion] kind = pump")
        data = pump_problem(spec, nu=cfg.nu)
    else:
        if spec is None or spec.kind != "ypipe":
            raise MeshFormatError("problem 'ypipe' needs [motion] kind = ypipe")
        data = ypipe_problem(spec, nu=cfg.nu)
    u, p, its, hist = _solve_one(st, data, config, out, slices, matrix_market=cfg.matrix_market)
    if cfg.problem == "patch":
        err = float(np.abs(velocity_space(st).split(u) - c).max())
        print(f"patch test: max velocity error {err:.3e}")
        write_table(os.path.join(out, "errors.csv"), ["velocity_max_error", "iterations"], [(err, its)])
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="stmesh", description="Space-time simplex meshes and DG Stokes solver.")
    p.add_argument("--version", action="version", version=f"stmesh {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output path"):
        sp.add_argument("--mesh", help="mesh file (native format or Gmsh .msh)")
        sp.add_argument("--config", help="INI run configuration")
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--tol", type=float, help=f"relative geometric tolerance (default {GEOM_TOL:g})")
        sp.add_argument("--no-check", action="store_true", help="skip consistency/admissibility checks on load")

    def timing(sp):
        sp.add_argument("--slabs", type=int, help="number of time slabs K (overrides the config)")
        sp.add_argument("--end-time", type=float, help="final time T (overrides the config)")

    sp = sub.add_parser("info", help="print mesh counts and measures")
    common(sp)
    sp.set_defaults(func=cmd_info)

    sp = sub.add_parser("check", help="check numbering and admissibility")
    common(sp, "write the consistently numbered mesh here")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("extrude", help="extrude a spatial mesh into a space-time mesh")
    common(sp, "space-time mesh file")
    timing(sp)
    sp.set_defaults(func=cmd_extrude)

    sp = sub.add_parser("slice", help="write VTK sections at given times")
    common(sp, "output directory")
    timing(sp)
    sp.add_argument("--slices", type=_floats, help="comma separated times t1,t2,...")
    sp.set_defaults(func=cmd_slice)

    sp = sub.add_parser("solve", help="run the space-time DG Stokes solver")
    common(sp, "output directory")
    timing(sp)
    sp.add_argument("--slices", type=_floats, help="comma separated output times")
    sp.add_argument("--sigma-u", type=float, help="velocity penalty")
    sp.add_argument("--sigma-p", type=float, help="pressure penalty")
    sp.set_defaults(func=cmd_solve)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except StmeshError as exc:
        print(f"stmesh {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"stmesh {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
