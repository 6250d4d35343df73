"""Ready-made problem data: a constant-flow patch test, a 1D manufactured
solution, and the two moving-boundary flows (membrane pump, lifted pipe)."""
from __future__ import annotations

import math

import numpy as np

from ..mesh import BoundaryTag
from ..meshes import interval, tag_boundary
from .forms import ProblemData, valve_coefficients

__all__ = ["constant_flow", "manufactured_1d", "manufactured_mesh_1d", "pump_problem", "ypipe_problem"]


def constant_flow(c, nu=1.0):
    """Exact solution ``u = c``, ``p = 0`` with matching Dirichlet and initial data."""
    c = np.asarray(c, dtype=float)

    def const(x, t):
        return np.broadcast_to(c, np.shape(x)[:-1] + c.shape)

    return ProblemData(nu=nu, g_D=const, u0=const)


def manufactured_1d(nu=1.0, alpha=1.0):
    """``u = sin(pi x) e^-t``, ``p = cos(pi x) e^-t`` on ``(0,1) x (0,T)``.

    In one space dimension a divergence-free field is constant in ``x``, so
    the continuity equation gets the source ``h = div u``. The left end is
    Dirichlet, the right end Robin with coefficient ``alpha`` and matching
    ``g_R``. Returns ``(data, u_exact, p_exact)``.
    """
    pi = math.pi

    def u(x, t):
        return (np.sin(pi * x[..., 0]) * np.exp(-t))[..., None]

    def p(x, t):
        return np.cos(pi * x[..., 0]) * np.exp(-t)

    def f(x, t):
        s = np.sin(pi * x[..., 0]) * np.exp(-t)
        # du/dt - nu u'' + p'
        return (-s + nu * pi**2 * s - pi * s)[..., None]

    def h(x, t):
        return pi * np.cos(pi * x[..., 0]) * np.exp(-t)

    def g_R(x, t):
        # nu u' n + alpha u - p n at x = 1, n = +1
        xx = x[..., 0]
        e = np.exp(-t)
        val = nu * pi * np.cos(pi * xx) * e + alpha * np.sin(pi * xx) * e - np.cos(pi * xx) * e
        return val[..., None]

    data = ProblemData(nu=nu, f=f, g_D=u, u0=u, g_R=g_R, alpha_R=alpha, div_source=h)
    return data, u, p


def manufactured_mesh_1d(n):
    """Interval mesh for :func:`manufactured_1d`: Dirichlet at 0, Robin at 1."""
    return tag_boundary(
        interval(n), lambda c, nrm: BoundaryTag.ROBIN_OUT if c[0] > 0.5 else BoundaryTag.DIRICHLET
    )


def pump_problem(motion, nu=1.0):
    """Flow driven by the membrane of the pump chamber.

    The membrane moves with the velocity ``d/dt g(X, t)`` (only the z
    component depends on time); inside the chamber the Dirichlet data are
    extended linearly in z from the fixed bottom ``z = -rest_height`` to the
    membrane, and by zero outside the membrane radius. Valves are Robin
    patches and the fluid starts at rest.
    """
    a = motion.amplitude
    R = motion.membrane_radius
    z_rest = motion.rest_height

    def g_D(x, t):
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        bump = np.maximum(1.0 - r2 / R**2, 0.0)
        z_mem = z_rest + a * np.sin(math.pi * t) ** 2 * bump
        phi = np.clip((x[..., 2] + z_rest) / (z_mem + z_rest), 0.0, 1.0)
        w = np.zeros(np.shape(x))
        w[..., 2] = a * math.pi * np.sin(2 * math.pi * t) * bump * phi
        return w

    return ProblemData(nu=nu, g_D=g_D, u0=None, alpha_R=valve_coefficients())


def ypipe_problem(motion, nu=1.0):
    """Flow in the pipe whose wall above ``anchor_z`` is lifted in time.

    Dirichlet data are the wall velocity ``d/dt g``, extended by the same
    expression into the interior and by zero below the anchor.
    """
    a = motion.amplitude

    def g_D(x, t):
        w = np.zeros(np.shape(x))
        w[..., 2] = (
            a * motion.lift * np.maximum(x[..., 2] - motion.anchor_z, 0.0) * math.pi * np.sin(2 * math.pi * t)
        )
        return w

    return ProblemData(nu=nu, g_D=g_D, u0=None, alpha_R=valve_coefficients())
