import numpy as np
import pytest
import scipy.sparse as sp

from stmesh.dg.solvers import ILU, BlockDiagPreconditioner, gmres, schur_approximation
from stmesh.errors import SolverError


def random_sparse(n, density, rng, shift=4.0):
    A = sp.random(n, n, density=density, random_state=np.random.RandomState(rng.integers(1 << 31)))
    return (A + shift * sp.identity(n)).tocsr()


def test_ilu0_reproduces_the_matrix_on_its_pattern(rng):
    A = random_sparse(60, 0.08, rng)
    L, U = ILU(A, 0).factors()
    LU = (L @ U).toarray()
    Ad = A.toarray()
    pattern = (Ad != 0) | np.eye(60, dtype=bool)
    assert np.abs((LU - Ad)[pattern]).max() < 1e-12


def test_ilu_with_full_fill_is_exact(rng):
    A = random_sparse(40, 0.1, rng)
    ilu = ILU(A, levels=40)
    L, U = ilu.factors()
    assert np.abs((L @ U).toarray() - A.toarray()).max() < 1e-11
    b = rng.normal(size=40)
    assert np.allclose(ilu.solve(b), np.linalg.solve(A.toarray(), b), atol=1e-10)


def test_ilu0_on_tridiagonal_is_exact():
    n = 30
    A = sp.diags([-np.ones(n - 1), 2.5 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")
    b = np.arange(n, dtype=float)
    assert np.allclose(ILU(A).solve(b), np.linalg.solve(A.toarray(), b), atol=1e-12)


def test_fill_levels_grow_the_pattern(rng):
    A = random_sparse(80, 0.04, rng)
    nnz = [ILU(A, k).nnz for k in range(4)]
    assert nnz == sorted(nnz)
    assert nnz[0] == (A + sp.identity(80)).nnz or nnz[0] >= A.nnz


def test_gmres_identity_converges_immediately():
    b = np.arange(1.0, 6.0)
    res = gmres(sp.identity(5, format="csr"), b)
    assert res.iterations == 1
    assert np.allclose(res.x, b)


def test_gmres_matches_dense_solve(rng):
    A = random_sparse(120, 0.05, rng, shift=2.0)
    b = rng.normal(size=120)
    res = gmres(A, b, M=ILU(A, 1), rel_tol=1e-12, restart=30, max_iter=1000)
    assert res.converged
    x = np.linalg.solve(A.toarray(), b)
    assert np.abs(res.x - x).max() < 1e-8 * np.abs(x).max()
    assert np.linalg.norm(b - A @ res.x) <= 1e-12 * np.linalg.norm(b) * 1.0001


def test_gmres_reports_the_true_residual(rng):
    A = random_sparse(50, 0.1, rng)
    b = rng.normal(size=50)
    res = gmres(A, b, rel_tol=1e-6, restart=5, max_iter=500)
    assert res.residuals[-1] == pytest.approx(np.linalg.norm(b - A @ res.x) / np.linalg.norm(b), rel=1e-6)


def test_gmres_failure_carries_history(rng):
    A = random_sparse(80, 0.3, rng, shift=0.0)
    b = rng.normal(size=80)
    with pytest.raises(SolverError) as info:
        gmres(A, b, rel_tol=1e-14, restart=3, max_iter=6)
    assert len(info.value.residuals) == 7
    res = gmres(A, b, rel_tol=1e-14, restart=3, max_iter=6, raise_on_failure=False)
    assert not res.converged


def test_zero_right_hand_side():
    res = gmres(sp.identity(3, format="csr"), np.zeros(3))
    assert res.converged and np.all(res.x == 0)


def test_block_preconditioner_with_exact_factors_is_block_inverse(rng):
    n, m = 20, 6
    Ks = random_sparse(n, 0.2, rng)
    K = sp.kron(sp.identity(2), Ks, format="csr")
    B = sp.random(m, 2 * n, density=0.3, random_state=np.random.RandomState(1)).tocsr()
    D = sp.identity(m, format="csr")
    M = BlockDiagPreconditioner(K, B, D, levels=(n, m), K_scalar=Ks, components=2)
    r = rng.normal(size=2 * n + m)
    z = M.solve(r)
    assert np.allclose(K @ z[: 2 * n], r[: 2 * n], atol=1e-10)
    S = schur_approximation(K, B, D)
    assert np.allclose(S @ z[2 * n:], r[2 * n:], atol=1e-10)
