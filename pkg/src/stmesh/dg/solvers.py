"""Krylov solver and incomplete factorizations for the saddle-point system.

* :func:`gmres` -- restarted GMRES with right preconditioning, so the
  monitored residual is the true (unpreconditioned) one.
* :class:`ILU` -- level-of-fill incomplete LU, ``ILU(k)``.
* :class:`BlockDiagPreconditioner` -- ``diag(K_bar, S_bar)`` with ``K_bar`` an
  ILU(0) of the velocity block and ``S_bar`` an ILU(2) of
  ``D + B diag(K)^-1 B^T``.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular

from ..errors import SolverError

__all__ = ["ILU", "gmres", "GmresResult", "BlockDiagPreconditioner", "schur_approximation"]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# ILU(k)


@numba.njit(cache=True)
def _iluk_symbolic(n, indptr, indices, levels):
    """Sparsity pattern of ILU(levels): returns (indptr, indices, diag)."""
    cap = max(2 * len(indices), n + 1)
    out_ptr = np.zeros(n + 1, dtype=np.int64)
    out_idx = np.empty(cap, dtype=np.int64)
    out_lev = np.empty(cap, dtype=np.int64)
    diag = np.empty(n, dtype=np.int64)
    lev = np.full(n, -1, dtype=np.int64)  # level of column j in the current row, -1 = absent
    cols = np.empty(n, dtype=np.int64)
    nnz = 0
    for i in range(n):
        m = 0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if lev[j] < 0:
                lev[j] = 0
                cols[m] = j
                m += 1
        if lev[i] < 0:  # structurally missing diagonal
            lev[i] = 0
            cols[m] = i
            m += 1
        # eliminate with rows k < i in increasing order; fill may add columns
        done = 0
        while True:
            kmin = -1
            kpos = -1
            for q in range(done, m):
                c = cols[q]
                if c < i and (kmin < 0 or c < kmin):
                    kmin = c
                    kpos = q
            if kmin < 0:
                break
            cols[kpos] = cols[done]
            cols[done] = kmin
            done += 1
            lk = lev[kmin]
            for p in range(diag[kmin] + 1, out_ptr[kmin + 1]):
                j = out_idx[p]
                new = lk + out_lev[p] + 1
                if new <= levels:
                    if lev[j] < 0:
                        lev[j] = new
                        cols[m] = j
                        m += 1
                    elif new < lev[j]:
                        lev[j] = new
        row = np.sort(cols[:m])
        if nnz + m > cap:
            while nnz + m > cap:
                cap *= 2
            tmp_i = np.empty(cap, dtype=np.int64)
            tmp_l = np.empty(cap, dtype=np.int64)
            tmp_i[:nnz] = out_idx[:nnz]
            tmp_l[:nnz] = out_lev[:nnz]
            out_idx = tmp_i
            out_lev = tmp_l
        for q in range(m):
            j = row[q]
            out_idx[nnz] = j
            out_lev[nnz] = lev[j]
            if j == i:
                diag[i] = nnz
            lev[j] = -1
            nnz += 1
        out_ptr[i + 1] = nnz
    return out_ptr, out_idx[:nnz].copy(), diag


@numba.njit(cache=True)
def _ilu_numeric(n, a_ptr, a_idx, a_val, ptr, idx, diag, pivot_floor):
    val = np.zeros(len(idx))
    pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for p in range(ptr[i], ptr[i + 1]):
            pos[idx[p]] = p
        scale = 0.0
        for p in range(a_ptr[i], a_ptr[i + 1]):
            val[pos[a_idx[p]]] += a_val[p]
            scale = max(scale, abs(a_val[p]))
        for p in range(ptr[i], diag[i]):
            k = idx[p]
            lik = val[p] / val[diag[k]]
            val[p] = lik
            for r in range(diag[k] + 1, ptr[k + 1]):
                q = pos[idx[r]]
                if q >= 0:
                    val[q] -= lik * val[r]
        d = val[diag[i]]
        floor = pivot_floor * (scale if scale > 0 else 1.0)
        if abs(d) < floor:
            val[diag[i]] = floor if d >= 0 else -floor
        for p in range(ptr[i], ptr[i + 1]):
            pos[idx[p]] = -1
    return val


@numba.njit(cache=True)
def _ilu_solve(n, ptr, idx, val, diag, b):
    x = b.copy()
    for i in range(n):
        s = x[i]
        for p in range(ptr[i], diag[i]):
            s -= val[p] * x[idx[p]]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for p in range(diag[i] + 1, ptr[i + 1]):
            s -= val[p] * x[idx[p]]
        x[i] = s / val[diag[i]]
    return x


class ILU:
    """Incomplete LU factorization with level-of-fill ``levels``.

    ``L`` (unit lower) and ``U`` share one CSR pattern. Pivots smaller than
    ``pivot_floor`` times the row's largest entry are replaced by that floor,
    which keeps the factorization usable on singular matrices such as a
    pressure Schur complement with a constant null space.
    """

    def __init__(self, A, levels=0, pivot_floor=1e-12):
        A = sp.csr_matrix(A, dtype=float)
        A.sum_duplicates()
        A.sort_indices()
        if A.shape[0] != A.shape[1]:
            raise ValueError("ILU needs a square matrix")
        self.n = A.shape[0]
        self.levels = int(levels)
        ptr, idx, diag = _iluk_symbolic(
            self.n, A.indptr.astype(np.int64), A.indices.astype(np.int64), self.levels
        )
        self.indptr, self.indices, self.diag = ptr, idx, diag
        self.data = _ilu_numeric(
            self.n, A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data, ptr, idx, diag, pivot_floor
        )

    @property
    def nnz(self):
        return len(self.indices)

    def solve(self, b):
        b = np.ascontiguousarray(b, dtype=float)
        return _ilu_solve(self.n, self.indptr, self.indices, self.data, self.diag, b)

    __call__ = solve

    def factors(self):
        """``(L, U)`` as scipy CSR matrices (for inspection and tests)."""
        M = sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))
        L = sp.tril(M, -1, format="csr") + sp.identity(self.n, format="csr")
        U = sp.triu(M, 0, format="csr")
        return L, U


# ---------------------------------------------------------------------------
# GMRES


@dataclass
class GmresResult:
    x: np.ndarray
    iterations: int
    residuals: list = field(default_factory=list)  # relative residual norms, one per iteration
    converged: bool = False
    seconds: float = 0.0


def gmres(A, b, M=None, x0=None, rel_tol=1e-5, restart=100, max_iter=500, raise_on_failure=True):
    """Restarted GMRES with right preconditioning.

    Solves ``A M^-1 y = b``, ``x = M^-1 y``; ``M`` is a callable applying the
    preconditioner inverse (or ``None``). Convergence is declared when the
    true residual satisfies ``|b - A x| <= rel_tol |b|``.

    Raises
    ------
    SolverError
        When ``max_iter`` iterations pass without convergence (carries the
        residual history), unless ``raise_on_failure`` is false.
    """
    start = time.perf_counter()
    matvec = A.matvec if hasattr(A, "matvec") else (lambda v: A @ v)
    prec = (lambda v: v) if M is None else (M.solve if hasattr(M, "solve") else M)
    b = np.asarray(b, dtype=float)
    n = len(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    history = []
    if bnorm == 0.0:
        return GmresResult(np.zeros(n), 0, [0.0], True, time.perf_counter() - start)
    r = b - matvec(x)
    beta = np.linalg.norm(r)
    history.append(beta / bnorm)
    it = 0
    while True:
        if beta <= rel_tol * bnorm:
            return GmresResult(x, it, history, True, time.perf_counter() - start)
        if it >= max_iter:
            break
        m = min(restart, max_iter - it)
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        j_used = 0
        for j in range(m):
            Z[j] = prec(V[j])
            w = matvec(Z[j])
            for i in range(j + 1):  # modified Gram-Schmidt
                H[i, j] = np.dot(w, V[i])
                w = w - H[i, j] * V[i]
            hnext = np.linalg.norm(w)
            H[j + 1, j] = hnext
            for i in range(j):
                tmp = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = tmp
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            it += 1
            j_used = j + 1
            history.append(abs(g[j + 1]) / bnorm)
            H[j + 1, j] = 0.0
            if abs(g[j + 1]) <= rel_tol * bnorm or hnext <= 1e-14 * beta:
                break
            V[j + 1] = w / hnext
        R = H[:j_used, :j_used]
        if np.all(np.diag(R) != 0):
            y = solve_triangular(R, g[:j_used])
        else:
            y = np.linalg.lstsq(R, g[:j_used], rcond=None)[0]
        x = x + Z[:j_used].T @ y
        r = b - matvec(x)
        beta = np.linalg.norm(r)
        history[-1] = beta / bnorm  # replace the estimate by the true residual
        log.debug("gmres restart after %d iterations, residual %.3e", it, beta / bnorm)
    result = GmresResult(x, it, history, False, time.perf_counter() - start)
    if raise_on_failure:
        raise SolverError(
            f"GMRES did not reach relative residual {rel_tol:g} in {max_iter} iterations "
            f"(last {history[-1]:.3e})",
            history,
        )
    return result


# ---------------------------------------------------------------------------
# block preconditioner


def schur_approximation(K, B, D):
    """``D + B diag(K)^-1 B^T``."""
    dk = K.diagonal()
    if np.any(dk == 0):
        raise SolverError("velocity block has a zero diagonal entry")
    return (D + B @ sp.diags(1.0 / dk) @ B.T).tocsr()


class BlockDiagPreconditioner:
    """``diag(K_bar, S_bar)`` for the system ``[[K, -B^T], [B, D]]``.

    If the velocity block is ``kron(I_d, K_s)`` (the DG forms act component
    by component) pass ``components=d`` and ``K_scalar=K_s``: one ILU of the
    scalar block is then applied to every component.
    """

    def __init__(self, K, B, D, levels=(0, 2), K_scalar=None, components=1):
        self.nu = K.shape[0]
        self.components = components if K_scalar is not None else 1
        self.K_ilu = ILU(K_scalar if K_scalar is not None else K, levels[0])
        self.S_ilu = ILU(schur_approximation(K, B, D), levels[1])

    def solve(self, r):
        out = np.empty_like(r)
        nu = self.nu
        m = nu // self.components
        for c in range(self.components):
            out[c * m:(c + 1) * m] = self.K_ilu.solve(r[c * m:(c + 1) * m])
        out[nu:] = self.S_ilu.solve(r[nu:])
        return out

    __call__ = solve
