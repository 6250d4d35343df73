"""Assembly of the space-time DG forms for transient Stokes, P1 velocity and
P0 pressure on affine simplices.

All velocity forms act component by component, so they are assembled once
as a scalar matrix over the ``N (n+1)`` element-local P1 functions and
expanded with ``kron(I_d, .)``. Products of P1 functions are integrated in
closed form; data terms use quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from ..errors import MeshError
from ..mesh import BoundaryClass, BoundaryTag
from .quadrature import simplex_rule
from .spaces import PRESSURE, UPWIND_TOL, VELOCITY, DgSpace

__all__ = [
    "ProblemData",
    "SolverConfig",
    "assemble_a_h",
    "assemble_b_T",
    "assemble_b_p",
    "assemble_d_p",
    "l2_project_dirichlet",
    "dirichlet_dofs",
    "load_vector",
    "divergence_source",
    "robin_valve",
    "valve_coefficients",
]

QUAD_DEGREE = 3


def robin_valve(t, kind):
    """Robin coefficient of a valve: ``1e6`` while closed, ``0`` while open.

    The outflow valve is closed on ``[0, 1/2)`` and open on ``[1/2, 1]``;
    the inflow valve the other way round. ``t`` may be an array.
    """
    t = np.asarray(t, dtype=float)
    first_half = t < 0.5
    if kind in ("outflow", "out", BoundaryTag.ROBIN_OUT):
        out = np.where(first_half, 1e6, 0.0)
    elif kind in ("inflow", "in", BoundaryTag.ROBIN_IN):
        out = np.where(first_half, 0.0, 1e6)
    else:
        raise ValueError(f"valve kind must be inflow or outflow, got {kind!r}")
    return out if out.ndim else float(out)


def valve_coefficients():
    """``alpha_R`` mapping for :class:`ProblemData` with valve behaviour."""
    return {
        BoundaryTag.ROBIN_IN: lambda x, t: robin_valve(t, "inflow"),
        BoundaryTag.ROBIN_OUT: lambda x, t: robin_valve(t, "outflow"),
    }


@dataclass
class ProblemData:
    """Data of the transient Stokes problem.

    Vector fields are callables ``(x, t) -> array`` with ``x`` of shape
    ``(..., d)`` (spatial points) and ``t`` of shape ``(...)``, returning
    ``(..., d)``; ``None`` means zero. ``alpha_R`` and ``g_R`` may also be
    constants or dicts keyed by :class:`BoundaryTag` (per Robin patch).

    ``div_source`` is an optional scalar right-hand side ``h`` of the
    continuity equation ``div u = h`` (zero in the physical problem, useful
    for manufactured solutions).
    """

    nu: float = 1.0
    f: Callable | None = None
    g_D: Callable | None = None
    g_R: object = None
    alpha_R: object = 0.0
    u0: Callable | None = None
    div_source: Callable | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("viscosity must be positive")


@dataclass
class SolverConfig:
    """Penalties and iterative solver settings.

    ``sigma_u`` defaults to ``10 (p+1)^2`` with ``p = 1``.
    """

    sigma_u: float = 40.0
    sigma_p: float = 0.1
    restart: int = 100
    max_iter: int = 500
    rel_tol: float = 1e-5
    preconditioner: str = "BlockDiag"
    ilu_levels: tuple = (0, 2)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.sigma_u > 0 or not self.sigma_p > 0:
            raise ValueError("penalty parameters must be positive")
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.preconditioner not in ("None", "BlockDiag", None):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


# ---------------------------------------------------------------------------
# helpers


def _facet_mass(n):
    """P1 mass matrix on a reference facet with ``n`` vertices, divided by its measure."""
    return (np.ones((n, n)) + np.eye(n)) / (n * (n + 1))


def _require_classes(space):
    if space.mesh.boundary_class is None:
        raise MeshError("boundary facets are not classified; run classify_boundary first")


def _eval_field(field_, x, t, tag=None):
    """Evaluate a data field that may be None, a constant, a callable or a
    per-tag dict."""
    if isinstance(field_, dict):
        field_ = field_.get(tag, field_.get(getattr(tag, "value", tag)))
    if field_ is None:
        return None
    if callable(field_):
        return np.asarray(field_(x, t), dtype=float)
    return np.broadcast_to(np.asarray(field_, dtype=float), t.shape + np.shape(field_))


def _kron(A, d):
    return sp.kron(sp.identity(d, format="csr"), A, format="csr")


def _coo(rows, cols, vals, shape):
    rows = np.concatenate([np.ravel(r) for r in rows]) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate([np.ravel(c) for c in cols]) if cols else np.zeros(0, dtype=np.int64)
    vals = np.concatenate([np.ravel(v) for v in vals]) if vals else np.zeros(0)
    A = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    A.sum_duplicates()
    return A


def _facet_block(dof_test, dof_trial, local):
    """Triplets of a dense block ``local[f, i, j]`` between two dof lists."""
    F, a = dof_test.shape
    b = dof_trial.shape[1]
    rows = np.broadcast_to(dof_test[:, :, None], (F, a, b))
    cols = np.broadcast_to(dof_trial[:, None, :], (F, a, b))
    return rows, cols, local


def _boundary_quadrature(space, facets, degree=QUAD_DEGREE):
    """Quadrature on boundary facets: barycentric weights ``(q, n)``, points
    ``(F, q, n)`` and scaled weights ``(F, q)``."""
    geo = space.geometry
    n = geo.n
    m = n - 1
    pts, w = simplex_rule(m, degree)
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    verts = space.mesh.coords[geo.b_nodes[facets]]  # (F, n, n)
    x = np.einsum("qi,fid->fqd", bary, verts)
    wf = geo.b_area[facets, None] * math.factorial(m) * w[None, :]
    return bary, x, wf


def _element_quadrature(space, degree=QUAD_DEGREE):
    mesh = space.mesh
    n = mesh.dim
    pts, w = simplex_rule(n, degree)
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    x = np.einsum("qi,kid->kqd", bary, mesh.coords[mesh.elements])
    wk = mesh.measures[:, None] * math.factorial(n) * w[None, :]
    return bary, x, wk


def _check_velocity(space):
    if not isinstance(space, DgSpace) or space.kind != VELOCITY:
        raise TypeError("expected a P1 velocity DgSpace")


# ---------------------------------------------------------------------------
# forms


def assemble_a_h(space: DgSpace, data: ProblemData, config: SolverConfig, scalar=False):
    """Diffusion form: volume term, symmetric interior-penalty terms in space
    and the Robin mass term.

    Returns ``(A, F)``: the matrix over all velocity dofs (the scalar block
    if ``scalar``) and the Robin load ``<g_R, v>`` on Sigma_R.
    """
    _check_velocity(space)
    geo = space.geometry
    n = geo.n
    n1 = n + 1
    d = space.components
    N = space.num_elements
    shape = (N * n1, N * n1)
    nu = data.nu
    rows, cols, vals = [], [], []

    # volume: nu |tau| grad_x(l_i) . grad_x(l_j)
    Gx = geo.grads[:, :, :-1]
    local = nu * geo.measures[:, None, None] * np.einsum("kid,kjd->kij", Gx, Gx)
    dofs = np.arange(N * n1).reshape(N, n1)
    rows.append(np.broadcast_to(dofs[:, :, None], local.shape))
    cols.append(np.broadcast_to(dofs[:, None, :], local.shape))
    vals.append(local)

    if len(geo.k):
        nx = geo.normal[:, :-1]
        nx2 = np.einsum("fd,fd->f", nx, nx)
        dk = geo.k[:, None] * n1 + geo.pos_k
        dl = geo.l[:, None] * n1 + geo.pos_l
        Mf = _facet_mass(n)[None] * geo.area[:, None, None]
        coef = config.sigma_u / geo.hbar * nx2
        for dt, st in ((dk, 1.0), (dl, -1.0)):
            for dr, sr in ((dk, 1.0), (dl, -1.0)):
                r, c, v = _facet_block(dt, dr, st * sr * coef[:, None, None] * Mf)
                rows.append(r), cols.append(c), vals.append(v)
        # consistency: -nu {grad_x u . n_x} (v_k - v_l), plus its transpose
        full_k = geo.k[:, None] * n1 + np.arange(n1)[None]
        full_l = geo.l[:, None] * n1 + np.arange(n1)[None]
        gk = np.einsum("fjd,fd->fj", Gx[geo.k], nx)
        gl = np.einsum("fjd,fd->fj", Gx[geo.l], nx)
        mean_test = geo.area / n  # integral of a facet P1 function
        for dt, st in ((dk, 1.0), (dl, -1.0)):
            for full, g in ((full_k, gk), (full_l, gl)):
                local = -0.5 * nu * st * mean_test[:, None, None] * np.broadcast_to(g[:, None, :], (len(g), n, n1))
                r, c, v = _facet_block(dt, full, local)
                rows += [r, c]
                cols += [c, r]
                vals += [v, v]

    F = np.zeros(space.ndofs)
    robin = _robin_facets(space)
    if robin.size:
        bary, x, wf = _boundary_quadrature(space, robin)
        owner = geo.b_owner[robin]
        pos = geo.b_pos[robin]
        dofs_r = owner[:, None] * n1 + pos
        tags = geo.b_tag[robin]
        for tag in _unique_tags(tags):
            sel = np.flatnonzero(np.array([t == tag for t in tags]))
            xs, ts = x[sel, :, :-1], x[sel, :, -1]
            alpha = _eval_field(data.alpha_R, xs, ts, tag)
            if alpha is not None:
                if np.any(alpha < 0):
                    raise ValueError("Robin coefficient must be nonnegative")
                local = np.einsum("fq,qi,qj->fij", alpha * wf[sel], bary, bary)
                r, c, v = _facet_block(dofs_r[sel], dofs_r[sel], local)
                rows.append(r), cols.append(c), vals.append(v)
            gR = _eval_field(data.g_R, xs, ts, tag)
            if gR is not None:
                gR = np.broadcast_to(gR, ts.shape + (d,))
                load = np.einsum("fq,qi,fqc->fic", wf[sel], bary, gR)
                for comp in range(d):
                    np.add.at(F, comp * N * n1 + dofs_r[sel], load[:, :, comp])
    A = _coo(rows, cols, vals, shape)
    return (A if scalar else _kron(A, d)), F


def _robin_facets(space):
    geo = space.geometry
    if space.mesh.boundary_class is None:
        return np.zeros(0, dtype=np.int64)
    return geo.boundary_of_class(BoundaryClass.SIGMAR)


def _unique_tags(tags):
    seen = []
    for t in tags:
        if t not in seen:
            seen.append(t)
    return seen


def assemble_b_T(space: DgSpace, data: ProblemData | None = None, scalar=False):
    """Time-derivative form with upwinding in time.

    ``-int u . d_t v`` on elements, ``int u . v`` on Sigma_T and
    ``int up(u) [v]_t`` on interior facets. Returns ``(BT, F)`` where ``F``
    is the initial-value load ``<u0, v>`` on Sigma_0.
    """
    _check_velocity(space)
    _require_classes(space)
    geo = space.geometry
    n = geo.n
    n1 = n + 1
    d = space.components
    N = space.num_elements
    shape = (N * n1, N * n1)
    dofs = np.arange(N * n1).reshape(N, n1)
    rows, cols, vals = [], [], []

    # -int l_j d_t l_i  (test i, trial j)
    local = -(geo.measures[:, None] * geo.grads[:, :, -1] / n1)[:, :, None] * np.ones((1, 1, n1))
    rows.append(np.broadcast_to(dofs[:, :, None], local.shape))
    cols.append(np.broadcast_to(dofs[:, None, :], local.shape))
    vals.append(local)

    Mref = _facet_mass(n)
    top = geo.boundary_of_class(BoundaryClass.SIGMAT)
    if top.size:
        dt = geo.b_owner[top, None] * n1 + geo.b_pos[top]
        r, c, v = _facet_block(dt, dt, geo.b_area[top, None, None] * Mref[None])
        rows.append(r), cols.append(c), vals.append(v)

    if len(geo.k):
        nt = geo.normal[:, -1]
        dk = geo.k[:, None] * n1 + geo.pos_k
        dl = geo.l[:, None] * n1 + geo.pos_l
        up = np.where(nt[:, None] > UPWIND_TOL, dk, dl)
        active = np.abs(nt) > UPWIND_TOL
        Mf = (nt * geo.area)[:, None, None] * Mref[None]
        for dt_, s in ((dk, 1.0), (dl, -1.0)):
            r, c, v = _facet_block(dt_[active], up[active], s * Mf[active])
            rows.append(r), cols.append(c), vals.append(v)

    F = np.zeros(space.ndofs)
    if data is not None and data.u0 is not None:
        bottom = geo.boundary_of_class(BoundaryClass.SIGMA0)
        if bottom.size:
            bary, x, wf = _boundary_quadrature(space, bottom)
            u0 = np.broadcast_to(_eval_field(data.u0, x[..., :-1], x[..., -1]), x.shape[:2] + (d,))
            load = np.einsum("fq,qi,fqc->fic", wf, bary, u0)
            dofs_b = geo.b_owner[bottom, None] * n1 + geo.b_pos[bottom]
            for comp in range(d):
                np.add.at(F, comp * N * n1 + dofs_b, load[:, :, comp])
    A = _coo(rows, cols, vals, shape)
    return (A if scalar else _kron(A, d)), F


def assemble_b_p(space_v: DgSpace, space_p: DgSpace):
    """Pressure-velocity coupling ``b_p(v, q)`` as a (pressure x velocity)
    matrix: ``int q div v - sum int {q} [v]_x``."""
    _check_velocity(space_v)
    if space_p.kind != PRESSURE:
        raise TypeError("expected a P0 pressure space")
    if space_v.mesh is not space_p.mesh:
        raise ValueError("velocity and pressure spaces live on different meshes")
    geo = space_v.geometry
    n = geo.n
    n1 = n + 1
    d = space_v.components
    N = space_v.num_elements
    Ns = N * n1
    rows, cols, vals = [], [], []
    elem = np.arange(N)
    for c in range(d):
        # int_tau d l_i / d x_c
        local = geo.measures[:, None] * geo.grads[:, :, c]
        rows.append(np.repeat(elem, n1))
        cols.append(c * Ns + (elem[:, None] * n1 + np.arange(n1)).ravel())
        vals.append(local.ravel())
    if len(geo.k):
        dk = geo.k[:, None] * n1 + geo.pos_k
        dl = geo.l[:, None] * n1 + geo.pos_l
        for c in range(d):
            w = -0.5 * geo.normal[:, c] * geo.area / n  # -{q} (v_k - v_l) n_x,c
            for q_el in (geo.k, geo.l):
                for dv, s in ((dk, 1.0), (dl, -1.0)):
                    rows.append(np.repeat(q_el, n))
                    cols.append((c * Ns + dv).ravel())
                    vals.append(np.repeat(s * w, n))
    return _coo(rows, cols, vals, (N, space_v.ndofs))


def assemble_d_p(space_p: DgSpace, config: SolverConfig):
    """Pressure stabilization ``sigma_p hbar int [p]_x . [q]_x``."""
    if space_p.kind != PRESSURE:
        raise TypeError("expected a P0 pressure space")
    geo = space_p.geometry
    N = space_p.num_elements
    if not len(geo.k):
        return sp.csr_matrix((N, N))
    nx2 = np.einsum("fd,fd->f", geo.normal[:, :-1], geo.normal[:, :-1])
    w = config.sigma_p * geo.hbar * geo.area * nx2
    rows = np.concatenate([geo.k, geo.k, geo.l, geo.l])
    cols = np.concatenate([geo.k, geo.l, geo.k, geo.l])
    vals = np.concatenate([w, -w, -w, w])
    return _coo([rows], [cols], [vals], (N, N))


# ---------------------------------------------------------------------------
# data


def dirichlet_dofs(space: DgSpace):
    """Velocity dofs fixed by the Dirichlet condition: every component at the
    vertices of an element's facets on Sigma_D."""
    _check_velocity(space)
    _require_classes(space)
    geo = space.geometry
    n1 = geo.n + 1
    sd = geo.boundary_of_class(BoundaryClass.SIGMAD)
    scalar = np.unique((geo.b_owner[sd, None] * n1 + geo.b_pos[sd]).ravel())
    Ns = space.scalar_size
    return np.concatenate([c * Ns + scalar for c in range(space.components)])


def l2_project_dirichlet(g_D, space: DgSpace, degree=QUAD_DEGREE):
    """Elementwise L2 projection of the Dirichlet extension ``g_D``.

    ``g_D(x, t)`` must be defined on every element touching Sigma_D (it is
    evaluated inside those elements); the projection is zero on all other
    elements. Returns a full velocity vector.
    """
    _check_velocity(space)
    _require_classes(space)
    out = np.zeros(space.ndofs)
    if g_D is None:
        return out
    geo = space.geometry
    mesh = space.mesh
    n = geo.n
    n1 = n + 1
    d = space.components
    sd = geo.boundary_of_class(BoundaryClass.SIGMAD)
    touched = np.unique(geo.b_owner[sd])
    if touched.size == 0:
        return out
    pts, w = simplex_rule(n, degree)
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    x = np.einsum("qi,kid->kqd", bary, mesh.coords[mesh.elements[touched]])
    g = np.broadcast_to(_eval_field(g_D, x[..., :-1], x[..., -1]), x.shape[:2] + (d,))
    # reference mass relative to |tau|; weights relative to the reference volume
    Mref = (np.ones((n1, n1)) + np.eye(n1)) / (n1 * (n1 + 1))
    rhs = math.factorial(n) * np.einsum("q,qi,kqc->kic", w, bary, g)
    coef = np.linalg.solve(Mref, rhs.transpose(1, 0, 2).reshape(n1, -1)).reshape(n1, len(touched), d)
    Ns = space.scalar_size
    for c in range(d):
        out[c * Ns + (touched[:, None] * n1 + np.arange(n1)).ravel()] = coef[:, :, c].T.ravel()
    return out


def load_vector(space: DgSpace, f, degree=QUAD_DEGREE):
    """``<f, v>_Q`` for a vector field ``f(x, t)``."""
    _check_velocity(space)
    out = np.zeros(space.ndofs)
    if f is None:
        return out
    bary, x, wk = _element_quadrature(space, degree)
    d = space.components
    val = np.broadcast_to(_eval_field(f, x[..., :-1], x[..., -1]), x.shape[:2] + (d,))
    load = np.einsum("kq,qi,kqc->kic", wk, bary, val)
    return space.join(load)


def divergence_source(space_p: DgSpace, h, degree=QUAD_DEGREE):
    """``<h, q>_Q`` for a scalar field ``h(x, t)`` and P0 test functions."""
    out = np.zeros(space_p.ndofs)
    if h is None:
        return out
    _, x, wk = _element_quadrature(space_p, degree)
    val = np.broadcast_to(_eval_field(h, x[..., :-1], x[..., -1]), x.shape[:2])
    return np.einsum("kq,kq->k", wk, val)
