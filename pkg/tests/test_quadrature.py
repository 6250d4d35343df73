import itertools
import math

import numpy as np
import pytest

from oracles import grundmann_moller
from stmesh.dg.quadrature import MAX_DEGREE, map_to_simplex, simplex_rule


def exact_monomial(alpha):
    """int x^alpha over the reference simplex = prod(alpha_i!) / (n + |alpha|)!."""
    n = len(alpha)
    return math.prod(math.factorial(a) for a in alpha) / math.factorial(n + sum(alpha))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_volume_of_reference_simplex(n):
    _, w = simplex_rule(n, 1)
    assert w.sum() == pytest.approx(1 / math.factorial(n), rel=1e-14)


def test_first_moment_of_triangle():
    x, w = simplex_rule(2, 1)
    assert np.dot(w, x[:, 0]) == pytest.approx(1 / 6, rel=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("degree", [2, 5, 8])
def test_exact_for_all_monomials_up_to_degree(n, degree):
    x, w = simplex_rule(n, degree)
    assert np.all(w > 0)
    assert np.all(x >= 0) and np.all(x.sum(axis=1) <= 1 + 1e-15)
    for alpha in itertools.product(range(degree + 1), repeat=n):
        if sum(alpha) <= degree:
            got = np.dot(w, np.prod(x ** np.array(alpha), axis=1))
            assert got == pytest.approx(exact_monomial(alpha), rel=1e-12, abs=1e-16)


def test_random_cubic_on_pentatope_against_independent_rule(rng):
    n = 4
    coef = {a: rng.normal() for a in itertools.product(range(4), repeat=n) if sum(a) <= 3}

    def poly(x):
        return sum(c * np.prod(x ** np.array(a), axis=-1) for a, c in coef.items())

    x, w = simplex_rule(n, 3)
    lam, wg = grundmann_moller(n, 2)  # degree 5
    ref = np.vstack([np.zeros(n), np.eye(n)])
    assert np.dot(w, poly(x)) == pytest.approx(np.dot(wg, poly(lam @ ref)), abs=1e-10)


def test_mapping_to_a_physical_simplex(rng):
    v = rng.normal(size=(4, 3))
    x, w = simplex_rule(3, 2)
    _, X = map_to_simplex(v, x)
    vol = abs(np.linalg.det(v[1:] - v[0])) / 6
    centroid = v.mean(axis=0)
    integral = 6 * vol * np.einsum("q,qd->d", w, X)
    assert np.allclose(integral, vol * centroid, atol=1e-13)


def test_degree_limits():
    with pytest.raises(ValueError):
        simplex_rule(3, MAX_DEGREE + 1)
    x, w = simplex_rule(2, 3)
    with pytest.raises(ValueError):
        w[0] = 1.0  # cached rules are read-only
