"""Independent reference implementations used by the tests.

Nothing here imports the package's geometry or assembly code: facets are
found by brute force, normals by SVD, integrals with Grundmann-Moller
rules, and basis functions by solving for barycentric coordinates.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np


def det_volume(points):
    """|det(x_i - x_0)| / n! for n+1 points in R^n."""
    p = np.asarray(points, dtype=float)
    return abs(np.linalg.det(p[1:] - p[0])) / math.factorial(len(p) - 1)


def gram_volume(points):
    """Measure of a k-simplex embedded in R^m via the Gram determinant."""
    p = np.asarray(points, dtype=float)
    E = p[1:] - p[0]
    return math.sqrt(max(np.linalg.det(E @ E.T), 0.0)) / math.factorial(len(p) - 1)


def _compositions(total, parts):
    """All nonnegative integer tuples of length ``parts`` summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def grundmann_moller(n, s):
    """Grundmann-Moller rule of degree 2s+1 on the reference n-simplex.

    Returns barycentric points ``(q, n+1)`` and weights summing to ``1/n!``.
    Some weights are negative; that is fine for an oracle.
    """
    d = 2 * s + 1
    pts, wts = [], []
    for i in range(s + 1):
        w = (-1) ** i * 2.0 ** (-2 * s) * (d + n - 2 * i) ** d
        w /= math.factorial(i) * math.factorial(d + n - i)
        for beta in _compositions(s - i, n + 1):
            pts.append([(2 * b + 1) / (d + n - 2 * i) for b in beta])
            wts.append(w)
    return np.array(pts), np.array(wts)


def integrate_simplex(f, vertices, s=3):
    """Integral of ``f(x)`` (vectorized over rows) over a simplex in R^n, n = len-1."""
    v = np.asarray(vertices, dtype=float)
    n = len(v) - 1
    lam, w = grundmann_moller(n, s)
    x = lam @ v
    vol = det_volume(v) if v.shape[1] == n else gram_volume(v)
    return math.factorial(n) * vol * np.dot(w, f(x))


def barycentric(vertices, x):
    """Barycentric coordinates of points ``x`` (q, n) w.r.t. an n-simplex."""
    v = np.asarray(vertices, dtype=float)
    n = v.shape[1]
    M = np.vstack([np.ones(n + 1), v.T])
    rhs = np.vstack([np.ones(len(x)), np.asarray(x, dtype=float).T])
    return np.linalg.solve(M, rhs).T


def basis_gradients(vertices):
    """Gradients of the barycentric functions, (n+1, n)."""
    v = np.asarray(vertices, dtype=float)
    n = v.shape[1]
    M = np.vstack([np.ones(n + 1), v.T])
    return np.linalg.inv(M)[:, 1:]


def brute_facets(elements):
    """Sorted facet tuple -> list of (element, opposite local vertex)."""
    table = defaultdict(list)
    for k, el in enumerate(np.asarray(elements)):
        for i in range(len(el)):
            face = tuple(sorted(int(v) for j, v in enumerate(el) if j != i))
            table[face].append((k, i))
    return table


def facet_normal(coords, face, opposite):
    """Unit normal of ``face`` pointing away from the vertex ``opposite``."""
    p = coords[list(face)]
    E = p[1:] - p[0]
    _, _, vt = np.linalg.svd(E)
    nrm = vt[-1]
    if np.dot(nrm, coords[opposite] - p[0]) > 0:
        nrm = -nrm
    return nrm / np.linalg.norm(nrm)


def dense_forms(coords, elements, nu=1.0, sigma_u=40.0, sigma_p=0.1, s=2):
    """Scalar blocks of a_h (no Robin), b_T, and the matrices of b_p and d_p.

    Uses the same local-dof layout as the package (element-major, scalar
    velocity block; component-major for b_p). Time-top facets are the
    boundary facets whose nodes all sit at the maximal time.
    """
    coords = np.asarray(coords, dtype=float)
    elements = np.asarray(elements)
    N, n1 = elements.shape
    n = n1 - 1
    d = n - 1
    Ns = N * n1
    A = np.zeros((Ns, Ns))
    BT = np.zeros((Ns, Ns))
    Bp = np.zeros((N, d * Ns))
    D = np.zeros((N, N))
    T = coords[:, -1].max()
    verts = coords[elements]
    grads = [basis_gradients(v) for v in verts]
    vols = [det_volume(v) for v in verts]
    h = [max(np.linalg.norm(a - b) for a, b in itertools.combinations(v, 2)) for v in verts]

    lam_el, w_el = grundmann_moller(n, s)
    for k in range(N):
        G = grads[k]
        A[k * n1:(k + 1) * n1, k * n1:(k + 1) * n1] += nu * vols[k] * G[:, :-1] @ G[:, :-1].T
        # -int l_j d_t l_i
        xq = lam_el @ verts[k]
        phi = barycentric(verts[k], xq)
        wq = math.factorial(n) * vols[k] * w_el
        for i in range(n1):
            for j in range(n1):
                BT[k * n1 + i, k * n1 + j] -= G[i, -1] * np.dot(wq, phi[:, j])
        for c in range(d):
            Bp[k, c * Ns + k * n1:c * Ns + (k + 1) * n1] += vols[k] * G[:, c]

    lam_f, w_f = grundmann_moller(n - 1, s)
    for face, owners in brute_facets(elements).items():
        fpts = coords[list(face)]
        area = gram_volume(fpts)
        xq = lam_f @ fpts
        wq = math.factorial(n - 1) * area * w_f
        if len(owners) == 1:
            k, _ = owners[0]
            if np.all(np.abs(fpts[:, -1] - T) < 1e-12):
                phi = barycentric(verts[k], xq)
                BT[k * n1:(k + 1) * n1, k * n1:(k + 1) * n1] += phi.T @ (wq[:, None] * phi)
            continue
        (k, ik), (l, il) = sorted(owners)
        nrm = facet_normal(coords, face, elements[k][ik])
        nx, nt = nrm[:-1], nrm[-1]
        pk = barycentric(verts[k], xq)
        pl = barycentric(verts[l], xq)
        hbar = 0.5 * (h[k] + h[l])
        sk = slice(k * n1, (k + 1) * n1)
        sl = slice(l * n1, (l + 1) * n1)
        # jumps of scalar test functions: (phi_k, -phi_l) times n
        blocks = ((sk, pk, 1.0), (sl, pl, -1.0))
        for (si, pi, ssi) in blocks:
            for (sj, pj, ssj) in blocks:
                A[si, sj] += sigma_u / hbar * (nx @ nx) * ssi * ssj * (pi.T @ (wq[:, None] * pj))
        # -{nu grad_x u . n_x} [v] and symmetric counterpart
        avg = ((sk, 0.5 * nu * grads[k][:, :-1] @ nx), (sl, 0.5 * nu * grads[l][:, :-1] @ nx))
        for (si, pi, ssi) in blocks:
            mean = pi.T @ wq  # int of each test function
            for sj, g in avg:
                block = -ssi * np.outer(mean, g)
                A[si, sj] += block
                A[sj, si] += block.T
        # upwind time jump: int up(u) (v_k - v_l) n_t
        if abs(nt) > 1e-12:
            su, pu = (sk, pk) if nt > 0 else (sl, pl)
            for (si, pi, ssi) in blocks:
                BT[si, su] += ssi * nt * (pi.T @ (wq[:, None] * pu))
        # -int {q} [v]_x
        for c in range(d):
            for (si, pi, ssi) in blocks:
                mean = pi.T @ wq
                for q_el in (k, l):
                    cols = slice(c * Ns + si.start, c * Ns + si.stop)
                    Bp[q_el, cols] -= 0.5 * ssi * nx[c] * mean
        w = sigma_p * hbar * area * (nx @ nx)
        D[k, k] += w
        D[l, l] += w
        D[k, l] -= w
        D[l, k] -= w
    return A, BT, Bp, D
