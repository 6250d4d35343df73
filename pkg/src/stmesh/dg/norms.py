"""Errors of discrete solutions against exact fields."""
from __future__ import annotations

import math

import numpy as np

from .quadrature import simplex_rule


def _points(mesh, degree):
    n = mesh.dim
    pts, w = simplex_rule(n, degree)
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    x = np.einsum("qi,kid->kqd", bary, mesh.coords[mesh.elements])
    wk = mesh.measures[:, None] * math.factorial(n) * w[None, :]
    return bary, x, wk


def l2_error(space_v, u, exact, degree=6):
    """``||u_h - u||_{L2(Q)}`` for a velocity vector and ``exact(x, t) -> (..., d)``."""
    bary, x, wk = _points(space_v.mesh, degree)
    uh = np.einsum("qi,kic->kqc", bary, space_v.split(u))
    ue = np.broadcast_to(np.asarray(exact(x[..., :-1], x[..., -1]), dtype=float), uh.shape)
    return math.sqrt(float(np.einsum("kq,kqc->", wk, (uh - ue) ** 2)))


def l2_error_pressure(space_p, p, exact, degree=6, zero_mean=False):
    """``||p_h - p||_{L2(Q)}``; with ``zero_mean`` both are first shifted to mean zero."""
    _, x, wk = _points(space_p.mesh, degree)
    pe = np.broadcast_to(np.asarray(exact(x[..., :-1], x[..., -1]), dtype=float), x.shape[:2])
    ph = np.broadcast_to(np.asarray(p, dtype=float)[:, None], pe.shape)
    if zero_mean:
        vol = wk.sum()
        ph = ph - np.sum(wk * ph) / vol
        pe = pe - np.sum(wk * pe) / vol
    return math.sqrt(float(np.sum(wk * (ph - pe) ** 2)))
