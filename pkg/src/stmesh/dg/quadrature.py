"""Quadrature on the reference simplex ``{x >= 0, sum(x) <= 1}`` in 1 to 4 dimensions.

Conical product rules: the simplex is the image of the unit cube under the
collapsing map ``x_1 = s_1``, ``x_2 = (1 - s_1) s_2``, ..., whose Jacobian
``(1 - s_1)^(n-1) (1 - s_2)^(n-2) ...`` is absorbed into Gauss-Jacobi weights
in each direction. All weights are positive.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = ["simplex_rule", "map_to_simplex", "MAX_DEGREE"]

MAX_DEGREE = 12


@lru_cache(maxsize=None)
def _gauss_jacobi01(m, alpha):
    """``m``-point Gauss rule on [0, 1] for the weight ``(1 - s)^alpha``."""
    x, w = roots_jacobi(m, alpha, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def _rule(n, degree):
    m = max(1, math.ceil((degree + 1) / 2))
    grids = [_gauss_jacobi01(m, float(n - 1 - i)) for i in range(n)]
    s = np.array(np.meshgrid(*[g[0] for g in grids], indexing="ij")).reshape(n, -1).T
    w = np.prod(np.array(np.meshgrid(*[g[1] for g in grids], indexing="ij")).reshape(n, -1), axis=0)
    x = np.empty_like(s)
    rest = np.ones(len(s))
    for i in range(n):
        x[:, i] = rest * s[:, i]
        rest = rest * (1.0 - s[:, i])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def simplex_rule(n, degree):
    """Points and weights on the reference ``n``-simplex.

    Parameters
    ----------
    n : int
        Simplex dimension, 1 to 4.
    degree : int
        Polynomials of total degree ``<= degree`` are integrated exactly.

    Returns
    -------
    points : ndarray, shape (q, n)
    weights : ndarray, shape (q,)
        Positive; they sum to ``1/n!``.
    """
    if n not in (1, 2, 3, 4):
        raise ValueError(f"simplex dimension must be 1..4, got {n}")
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree} (max {MAX_DEGREE})")
    return _rule(n, degree)


def map_to_simplex(vertices, points):
    """Barycentric coordinates and physical points of reference ``points``.

    ``vertices`` has shape ``(..., m+1, D)``; returns ``(bary, x)`` with
    ``bary`` of shape ``(q, m+1)`` and ``x`` of shape ``(..., q, D)``.
    """
    points = np.asarray(points, dtype=float)
    bary = np.column_stack([1.0 - points.sum(axis=1), points])
    x = np.einsum("qi,...id->...qd", bary, np.asarray(vertices, dtype=float))
    return bary, x
