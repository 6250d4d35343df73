"""Discontinuous finite element spaces on a space-time mesh and the facet
operators (jump, average, upwind) used by the DG forms."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from ..mesh import BoundaryClass, barycentric_gradients

__all__ = [
    "DgSpace",
    "FacetGeometry",
    "FacetValues",
    "count_dofs",
    "facet_jump_average_upwind",
    "velocity_space",
    "pressure_space",
]

VELOCITY = "VelocityP1Vector"
PRESSURE = "PressureP0"

UPWIND_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DgSpace:
    """Fully discontinuous space on ``mesh``.

    Velocity (P1, vector valued, ``d`` spatial components): dof
    ``c * N * (n+1) + k * (n+1) + i`` is component ``c`` of the coefficient
    of the ``i``-th barycentric function of element ``k``; components are
    blocked so that component-wise operators are block diagonal.
    Pressure (P0): one dof per element.
    """

    mesh: object
    kind: str

    def __post_init__(self):
        if self.kind not in (VELOCITY, PRESSURE):
            raise ValueError(f"unknown space kind {self.kind!r}")

    @property
    def num_elements(self):
        return self.mesh.num_elements

    @property
    def local_size(self):
        """Scalar basis functions per element."""
        return self.mesh.dim + 1 if self.kind == VELOCITY else 1

    @property
    def components(self):
        return self.mesh.spatial_dim if self.kind == VELOCITY else 1

    @property
    def scalar_size(self):
        return self.num_elements * self.local_size

    @property
    def ndofs(self):
        return self.scalar_size * self.components

    def dof(self, k, i=0, c=0):
        return c * self.scalar_size + k * self.local_size + i

    def dof_map(self):
        """Array ``(N, local_size, components)`` of global dofs."""
        k = np.arange(self.num_elements)[:, None, None]
        i = np.arange(self.local_size)[None, :, None]
        c = np.arange(self.components)[None, None, :]
        return c * self.scalar_size + k * self.local_size + i

    def split(self, x):
        """View a velocity vector as ``(N, n+1, d)`` nodal coefficients."""
        x = np.asarray(x)
        if self.kind == PRESSURE:
            return x
        return x.reshape(self.components, self.num_elements, self.local_size).transpose(1, 2, 0)

    def join(self, values):
        values = np.asarray(values, dtype=float)
        if self.kind == PRESSURE:
            return values.ravel()
        return values.transpose(2, 0, 1).ravel()

    @cached_property
    def geometry(self):
        return FacetGeometry.build(self.mesh)


def velocity_space(mesh):
    return DgSpace(mesh, VELOCITY)


def pressure_space(mesh):
    return DgSpace(mesh, PRESSURE)


def count_dofs(space=None, *, num_elements=None, d=None, kind=VELOCITY):
    """Number of degrees of freedom.

    Either pass a :class:`DgSpace`, or the element count and spatial
    dimension: P1 velocity has ``N (d+2) d`` dofs, P0 pressure ``N``.
    """
    if space is not None:
        return space.ndofs
    if num_elements is None or d is None:
        raise ValueError("need a space or num_elements and d")
    if kind == VELOCITY:
        return num_elements * (d + 2) * d
    if kind == PRESSURE:
        return num_elements
    raise ValueError(f"unknown space kind {kind!r}")


class FacetValues(NamedTuple):
    jump: np.ndarray
    space_jump: np.ndarray
    time_jump: np.ndarray
    average: np.ndarray
    upwind: np.ndarray


def facet_jump_average_upwind(value_k, value_l, normal):
    """Facet operators for traces ``value_k`` (element k) and ``value_l``.

    ``normal = (n_x, n_t)`` is the unit normal outward from element ``k``.
    Values may be scalars or vectors (the normal is appended as the last
    axis of the jumps, i.e. jumps are ``phi (x) n``).

    Returns
    -------
    FacetValues
        ``jump = phi_k n_k + phi_l n_l``, its spatial and time parts, the
        average, and the upwind value in time (``phi_k`` if ``n_t > 0``,
        ``phi_l`` if ``n_t < 0``, zero if ``n_t == 0`` up to 1e-12).
    """
    vk = np.asarray(value_k, dtype=float)
    vl = np.asarray(value_l, dtype=float)
    n = np.asarray(normal, dtype=float)
    diff = vk - vl  # n_l = -n_k
    jump = np.multiply.outer(diff, n)
    nt = n[-1]
    if nt > UPWIND_TOL:
        up = vk
    elif nt < -UPWIND_TOL:
        up = vl
    else:
        up = np.zeros_like(vk)
    return FacetValues(jump, jump[..., :-1], diff * nt, 0.5 * (vk + vl), up)


@dataclass(frozen=True, eq=False)
class FacetGeometry:
    """Precomputed element and facet data for affine P1/P0 assembly.

    Interior facets ``f`` carry owners ``k[f] < l[f]``, the unit normal
    outward from ``k``, the measure, and ``pos_k[f, j]``/``pos_l[f, j]``: the
    local index in ``k``/``l`` of the ``j``-th (sorted) facet node.
    """

    n: int
    measures: np.ndarray
    grads: np.ndarray
    h: np.ndarray
    k: np.ndarray
    l: np.ndarray
    normal: np.ndarray
    area: np.ndarray
    pos_k: np.ndarray
    pos_l: np.ndarray
    b_facets: np.ndarray
    b_owner: np.ndarray
    b_pos: np.ndarray
    b_normal: np.ndarray
    b_area: np.ndarray
    b_nodes: np.ndarray
    b_class: np.ndarray
    b_tag: np.ndarray

    @classmethod
    def build(cls, mesh):
        fs = mesh.facets
        elements = mesh.elements
        interior = fs.interior
        bnd = fs.boundary

        def positions(owner, nodes):
            match = elements[owner][:, :, None] == nodes[:, None, :]
            return np.argmax(match, axis=1)

        k = fs.owners[interior, 0]
        l = fs.owners[interior, 1]
        nodes_i = fs.nodes[interior]
        b_owner = fs.owners[bnd, 0]
        if mesh.boundary_class is not None:
            b_class = np.asarray(mesh.boundary_class, dtype=object)
            b_tag = np.asarray(mesh.boundary_tag, dtype=object)
        else:
            b_class = np.full(len(bnd), None, dtype=object)
            b_tag = np.full(len(bnd), None, dtype=object)
        return cls(
            n=mesh.dim,
            measures=mesh.measures,
            grads=barycentric_gradients(mesh.coords, elements),
            h=mesh.h,
            k=k,
            l=l,
            normal=fs.normals[interior],
            area=fs.measures[interior],
            pos_k=positions(k, nodes_i),
            pos_l=positions(l, nodes_i),
            b_facets=bnd,
            b_owner=b_owner,
            b_pos=positions(b_owner, fs.nodes[bnd]),
            b_normal=fs.normals[bnd],
            b_area=fs.measures[bnd],
            b_nodes=fs.nodes[bnd],
            b_class=b_class,
            b_tag=b_tag,
        )

    def boundary_of_class(self, cls):
        """Indices (into the ``b_*`` arrays) of boundary facets of class ``cls``."""
        cls = BoundaryClass(cls)
        return np.array([i for i, c in enumerate(self.b_class) if c == cls], dtype=np.int64)

    @property
    def hbar(self):
        return 0.5 * (self.h[self.k] + self.h[self.l])
