"""Prescribed boundary motion and its extension to the interior.

A point ``X`` of the initial boundary moves to ``X + g(X, t)``. Interior
nodes either stay put or follow a discrete vector Laplacian whose Dirichlet
data are the boundary displacements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .errors import SolverError
from .mesh import BoundaryTag, SpatialMesh, barycentric_gradients

__all__ = [
    "MotionSpec",
    "TabulatedDisplacement",
    "eval_motion",
    "smooth_displacement",
    "displacement_field",
    "laplace_matrix",
]

KINDS = ("none", "pump", "ypipe", "user")
SMOOTHING = ("laplace", "boundary", "direct")


@dataclass(frozen=True)
class MotionSpec:
    """Boundary displacement ``g(X, t)`` plus the interior policy.

    kind
        ``"none"``, ``"pump"`` (diaphragm membrane), ``"ypipe"`` (wall strips
        lifted proportionally to the height above ``anchor_z``) or ``"user"``.
    amplitude
        Factor on the ``sin^2(pi t)`` term of the builtin formulas.
    z_only
        Pump only. The default membrane formula subtracts the whole point
        ``X``, which also drags the membrane nodes to the axis; with
        ``z_only`` only the z component ``X_z`` is subtracted.
    smoothing
        ``"laplace"``: solve a vector Laplacian for the interior;
        ``"boundary"``: move only the moving boundary nodes;
        ``"direct"``: use a user field at every node as given.
    """

    kind: str = "none"
    amplitude: float = 1.0
    z_only: bool = False
    moving_tags: frozenset = frozenset({BoundaryTag.DIRICHLET_MOVING})
    smoothing: str = "laplace"
    T: float = 1.0
    rest_height: float = 0.4
    membrane_radius: float = 0.75
    anchor_z: float = -3.0
    lift: float = 4.0 / 7.0
    user_field: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown motion kind {self.kind!r}")
        if self.smoothing not in SMOOTHING:
            raise ValueError(f"unknown smoothing policy {self.smoothing!r}")
        if self.kind == "user" and self.user_field is None:
            raise ValueError("user motion needs user_field")
        object.__setattr__(self, "moving_tags", frozenset(BoundaryTag(t) for t in self.moving_tags))


@dataclass(frozen=True)
class TabulatedDisplacement:
    """Per-node displacements at a list of times, linear in between."""

    times: np.ndarray
    values: np.ndarray  # (num_times, num_nodes, d)

    def at_nodes(self, t):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise ValueError(f"t={t} outside the tabulated range [{times[0]}, {times[-1]}]")
        j = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
        w = (t - times[j]) / (times[j + 1] - times[j])
        return (1 - w) * values[j] + w * values[j + 1]


def eval_motion(spec: MotionSpec, X, t):
    """Displacement of boundary point(s) ``X`` (shape ``(d,)`` or ``(n, d)``)."""
    if t < -1e-14 or t > spec.T + 1e-14:
        raise ValueError(f"t={t} outside [0, {spec.T}]")
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    g = np.zeros_like(X)
    s2 = math.sin(math.pi * t) ** 2
    if spec.kind == "pump":
        r2 = X[:, 0] ** 2 + X[:, 1] ** 2
        height = spec.rest_height + spec.amplitude * s2 * (1.0 - r2 / spec.membrane_radius**2)
        if spec.z_only:
            g[:, 2] = height - X[:, 2]
        else:
            g[:, 2] = height
            g -= X
    elif spec.kind == "ypipe":
        g[:, 2] = spec.amplitude * spec.lift * np.abs(X[:, 2] - spec.anchor_z) * s2
    elif spec.kind == "user":
        if hasattr(spec.user_field, "at_nodes"):
            raise TypeError("tabulated motions are per node; use displacement_field")
        g = np.asarray(spec.user_field(X, t), dtype=float).reshape(X.shape)
    return g[0] if single else g


def laplace_matrix(mesh: SpatialMesh):
    """P1 stiffness matrix of the scalar Laplacian on ``mesh``."""
    grads = barycentric_gradients(mesh.coords, mesh.elements)
    local = np.einsum("kid,kjd->kij", grads, grads) * mesh.measures[:, None, None]
    n1 = mesh.elements.shape[1]
    rows = np.repeat(mesh.elements, n1, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, n1)).ravel()
    n = mesh.num_nodes
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def smooth_displacement(mesh: SpatialMesh, boundary_data, boundary_nodes=None, rtol=1e-10):
    """Extend boundary displacements harmonically into the interior.

    ``boundary_data`` has one row per mesh node; only the rows of
    ``boundary_nodes`` (default: all boundary nodes) are read. Each
    component is an independent P1 Laplace problem solved by conjugate
    gradients to relative residual ``rtol``.
    """
    data = np.asarray(boundary_data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if boundary_nodes is None:
        boundary_nodes = mesh.boundary_nodes
    boundary_nodes = np.asarray(boundary_nodes, dtype=np.int64)
    if boundary_nodes.size == 0:
        raise SolverError("no Dirichlet nodes: the smoothing problem is singular")
    n = mesh.num_nodes
    is_bnd = np.zeros(n, dtype=bool)
    is_bnd[boundary_nodes] = True
    inner = np.flatnonzero(~is_bnd)
    out = np.zeros_like(data)
    out[boundary_nodes] = data[boundary_nodes]
    if inner.size == 0:
        return out
    A = laplace_matrix(mesh)
    A_ii = A[inner][:, inner]
    A_ib = A[inner][:, boundary_nodes]
    for c in range(data.shape[1]):
        rhs = -(A_ib @ data[boundary_nodes, c])
        norm = np.linalg.norm(rhs)
        if norm == 0.0:
            continue
        x, info = cg(A_ii, rhs, rtol=rtol, atol=0.0, maxiter=10 * inner.size + 100)
        res = np.linalg.norm(A_ii @ x - rhs) / norm
        if info != 0 or res > rtol * 1.0001:
            raise SolverError(f"smoothing solve did not converge (relative residual {res:.3e})", [res])
        out[inner, c] = x
    return out


def displacement_field(mesh: SpatialMesh, spec: MotionSpec, t):
    """Nodal displacement of the whole mesh at time ``t``."""
    n, d = mesh.coords.shape
    if spec.kind == "none":
        return np.zeros((n, d))
    moving = mesh.nodes_with_tags(spec.moving_tags)
    if spec.kind == "user" and hasattr(spec.user_field, "at_nodes"):
        full = np.asarray(spec.user_field.at_nodes(t), dtype=float)
        if spec.smoothing == "direct":
            return full
        values = full[moving]
    else:
        if spec.smoothing == "direct" and spec.kind == "user":
            return eval_motion(spec, mesh.coords, t)
        values = eval_motion(spec, mesh.coords[moving], t) if moving.size else np.zeros((0, d))
    data = np.zeros((n, d))
    data[moving] = values
    if spec.smoothing == "laplace":
        return smooth_displacement(mesh, data)
    return data
