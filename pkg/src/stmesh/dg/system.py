"""The discrete saddle-point system and its solution.

With ``u_h = u_0 + u_g`` (``u_g`` a discrete extension of the Dirichlet
data, ``u_0`` vanishing on Sigma_D) the unknowns ``(U, P)`` solve

    [ K  -B^T ] [U]   [F1]        F1 = <f, v> + <u0, v>_Sigma0 + <g_R, v>_SigmaR - A(u_g, v)
    [ B   D   ] [P] = [F2],       F2 = -b_p(u_g, q) (+ <h, q>)

where ``K`` is the matrix of ``A = b_T + a_h`` restricted to the free
velocity dofs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.io import mmwrite

from ..errors import SolverError
from .forms import (
    ProblemData,
    SolverConfig,
    assemble_a_h,
    assemble_b_p,
    assemble_b_T,
    assemble_d_p,
    dirichlet_dofs,
    divergence_source,
    l2_project_dirichlet,
    load_vector,
)
from .solvers import BlockDiagPreconditioner, gmres
from .spaces import DgSpace, pressure_space, velocity_space

__all__ = ["BlockSystem", "Solution", "build_block_system", "gmres_solve", "solve_stokes"]


@dataclass(eq=False)
class BlockSystem:
    """Assembled system on the free velocity dofs.

    ``K_full``/``B_full`` act on all velocity dofs; ``free`` lists the free
    ones and ``u_g`` is the Dirichlet extension (full vector). ``K_scalar``
    is the single-component block of ``K`` (``K = kron(I_d, K_scalar)``).
    """

    K: sp.csr_matrix
    B: sp.csr_matrix
    D: sp.csr_matrix
    F1: np.ndarray
    F2: np.ndarray
    free: np.ndarray
    u_g: np.ndarray
    space_v: DgSpace
    space_p: DgSpace
    K_full: sp.csr_matrix
    B_full: sp.csr_matrix
    K_scalar: sp.csr_matrix | None = None

    @property
    def nu(self):
        return self.K.shape[0]

    @property
    def np(self):
        return self.D.shape[0]

    def matrix(self):
        return sp.bmat([[self.K, -self.B.T], [self.B, self.D]], format="csr")

    def rhs(self):
        return np.concatenate([self.F1, self.F2])

    def expand(self, U):
        """Full velocity vector ``u_0 + u_g`` from the free-dof solution."""
        u = self.u_g.copy()
        u[self.free] += U
        return u

    def write_matrix_market(self, prefix):
        """Write ``<prefix>_{K,B,D}.mtx`` and ``<prefix>_rhs.mtx``; returns the paths."""
        paths = []
        for name, M in (("K", self.K), ("B", self.B), ("D", self.D)):
            path = f"{prefix}_{name}.mtx"
            mmwrite(path, M, precision=17)
            paths.append(path)
        path = f"{prefix}_rhs.mtx"
        mmwrite(path, self.rhs()[:, None], precision=17)
        paths.append(path)
        return paths


@dataclass
class Solution:
    u: np.ndarray  # full velocity vector
    p: np.ndarray
    iterations: int
    residuals: list
    system: BlockSystem

    def velocity_nodal(self):
        """Element-local nodal velocities ``(N, n+1, d)``."""
        return self.system.space_v.split(self.u)


def build_block_system(space_v: DgSpace, space_p: DgSpace, data: ProblemData, config: SolverConfig):
    """Assemble ``K = b_T + a_h``, ``B``, ``D`` and the right-hand sides."""
    if space_v.mesh is not space_p.mesh:
        raise ValueError("velocity and pressure spaces live on different meshes")
    d = space_v.components
    A_s, F_robin = assemble_a_h(space_v, data, config, scalar=True)
    T_s, F_u0 = assemble_b_T(space_v, data, scalar=True)
    K_s = (A_s + T_s).tocsr()
    K_full = sp.kron(sp.identity(d, format="csr"), K_s, format="csr")
    B_full = assemble_b_p(space_v, space_p)
    D = assemble_d_p(space_p, config)
    u_g = l2_project_dirichlet(data.g_D, space_v)

    fixed = dirichlet_dofs(space_v)
    mask = np.ones(space_v.ndofs, dtype=bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    Ns = space_v.scalar_size
    free_s = free[free < Ns]

    F1_full = load_vector(space_v, data.f) + F_u0 + F_robin - K_full @ u_g
    F2 = -(B_full @ u_g) + divergence_source(space_p, data.div_source)
    return BlockSystem(
        K=K_full[free][:, free].tocsr(),
        B=B_full[:, free].tocsr(),
        D=D,
        F1=F1_full[free],
        F2=F2,
        free=free,
        u_g=u_g,
        space_v=space_v,
        space_p=space_p,
        K_full=K_full,
        B_full=B_full,
        K_scalar=K_s[free_s][:, free_s].tocsr(),
    )


def gmres_solve(system: BlockSystem, config: SolverConfig, x0=None):
    """Solve the block system with preconditioned GMRES.

    Returns ``(U, P, iterations, residual_history)``; raises
    :class:`SolverError` on failure.
    """
    A = system.matrix()
    b = system.rhs()
    M = None
    if config.preconditioner == "BlockDiag":
        d = system.space_v.components
        Ks = system.K_scalar if system.K_scalar is not None and system.K_scalar.shape[0] * d == system.nu else None
        M = BlockDiagPreconditioner(system.K, system.B, system.D, config.ilu_levels, K_scalar=Ks, components=d)
    res = gmres(A, b, M=M, x0=x0, rel_tol=config.rel_tol, restart=config.restart, max_iter=config.max_iter)
    if not np.all(np.isfinite(res.x)):
        raise SolverError("solution contains non-finite values", res.residuals)
    return res.x[: system.nu], res.x[system.nu:], res.iterations, res.residuals


def solve_stokes(mesh, data: ProblemData, config: SolverConfig | None = None):
    """Assemble and solve on a classified space-time mesh; returns a :class:`Solution`."""
    config = SolverConfig() if config is None else config
    V = velocity_space(mesh)
    Q = pressure_space(mesh)
    system = build_block_system(V, Q, data, config)
    U, P, its, hist = gmres_solve(system, config)
    return Solution(system.expand(U), P, its, hist, system)
