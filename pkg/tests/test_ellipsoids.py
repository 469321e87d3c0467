import numpy as np
import pytest

from conftest import brute_force_max, random_spd
from roaqc.ellipsoids import Ellipsoid, max_linear_sq, max_quadform, sqrt_inv


def test_sqrt_inv_identity():
    np.testing.assert_allclose(sqrt_inv(np.eye(3)), np.eye(3), atol=1e-14)


def test_sqrt_inv_diagonal():
    np.testing.assert_allclose(
        sqrt_inv(np.diag([4.0, 9.0])), np.diag([0.5, 1.0 / 3.0]), atol=1e-14
    )


def test_sqrt_inv_random_spd():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = rng.integers(2, 7)
        E = random_spd(n, rng)
        R = sqrt_inv(E)
        np.testing.assert_allclose(R, R.T, atol=1e-12)
        np.testing.assert_allclose(R @ E @ R, np.eye(n), atol=1e-10)


def test_sqrt_inv_rejects_non_spd():
    with pytest.raises(ValueError, match="not positive definite"):
        sqrt_inv(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError, match="not positive definite"):
        sqrt_inv(np.diag([1.0, 1e-14]))


def test_ellipsoid_caches():
    E = random_spd(4, np.random.default_rng(3))
    ell = Ellipsoid(E, 2.0)
    np.testing.assert_allclose(ell.E_inv @ E, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(ell.E_inv_sqrt @ E @ ell.E_inv_sqrt, np.eye(4), atol=1e-10)
    with pytest.raises(ValueError, match="alpha"):
        Ellipsoid(E, 0.0)


def test_contains():
    ell = Ellipsoid(np.eye(2), 1.0)
    assert ell.contains(np.array([1.0, 0.0]))  # boundary point
    assert not ell.contains(np.array([1.1, 0.0]))
    flags = ell.contains(np.array([[0.5, 0.0], [0.0, 2.0]]))
    assert list(flags) == [True, False]


def test_sample_inside_and_deterministic():
    rng = np.random.default_rng(4)
    E = random_spd(3, rng)
    ell = Ellipsoid(E, 1.7)
    X = ell.sample(1000, seed=9)
    assert X.shape == (1000, 3)
    assert ell.contains(X, rtol=1e-9).all()
    np.testing.assert_array_equal(X, ell.sample(1000, seed=9))
    # about half the points on the boundary
    q = np.einsum("ij,jk,ik->i", X, E, X)
    assert (np.abs(q - ell.alpha**2) < 1e-9).sum() == 500


def test_max_linear_sq_examples():
    assert max_linear_sq(np.array([1.0, 0.0]), Ellipsoid(np.eye(2), 1.0)) == pytest.approx(1.0)
    assert max_linear_sq(np.array([1.0, 1.0]), Ellipsoid(np.eye(2), 2.0)) == pytest.approx(8.0)
    assert max_linear_sq(
        np.array([1.0, 0.0]), Ellipsoid(np.diag([4.0, 1.0]), 1.0)
    ) == pytest.approx(0.25)


def test_max_quadform_examples():
    ell = Ellipsoid(np.eye(2), 1.0)
    assert max_quadform(np.diag([1.0, 0.0]), ell) == pytest.approx(1.0)
    # rank-1 Q = c c^T agrees with the linear bound
    c = np.array([1.0, 1.0])
    assert max_quadform(np.outer(c, c), ell) == pytest.approx(max_linear_sq(c, ell))


def test_max_quadform_needs_positive_part():
    ell = Ellipsoid(np.eye(2), 1.0)
    with pytest.raises(ValueError, match="lambda_max"):
        max_quadform(-np.eye(2), ell)


def test_alpha_squared_scaling():
    rng = np.random.default_rng(5)
    E = random_spd(3, rng)
    Q = rng.standard_normal((3, 3))
    Q = 0.5 * (Q + Q.T) + 0.5 * np.eye(3)
    c = rng.standard_normal(3)
    for bound, arg in ((max_linear_sq, c), (max_quadform, Q)):
        v1 = bound(arg, Ellipsoid(E, 1.0))
        v3 = bound(arg, Ellipsoid(E, 3.0))
        assert v3 == pytest.approx(9.0 * v1, rel=1e-12)


def test_bounds_dominate_sampling():
    """Analytic maxima sit just above brute-force sampled maxima."""
    rng = np.random.default_rng(6)
    for trial in range(25):
        n = int(rng.integers(2, 6))
        E = random_spd(n, rng)
        alpha = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        ell = Ellipsoid(E, alpha)

        c = rng.standard_normal(n)
        exact = max_linear_sq(c, ell)
        sampled = brute_force_max(
            lambda X: (X @ c) ** 2, E, alpha, n, budget=30_000, seed=100 + trial
        )
        assert sampled <= exact * (1.0 + 1e-9)
        assert exact <= sampled * 1.01

        Q = rng.standard_normal((n, n))
        Q = 0.5 * (Q + Q.T)
        if np.linalg.eigvalsh(Q)[-1] <= 1e-6:
            Q = Q + np.eye(n)
        exact = max_quadform(Q, ell)
        sampled = brute_force_max(
            lambda X: np.einsum("ij,jk,ik->i", X, Q, X),
            E, alpha, n, budget=30_000, seed=200 + trial,
        )
        assert sampled <= exact * (1.0 + 1e-9)
        assert exact <= sampled * 1.01
