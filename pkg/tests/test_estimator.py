import math

import numpy as np
import pytest

from selfnorm.confidence import ellipsoid_radius
from selfnorm.design_matrix import log_det_ratio
from selfnorm.estimator import (
    ConfidenceEllipsoid,
    contains,
    ellipsoid,
    new_regressor,
    observe,
    predict_with_interval,
)


def test_scalar_ridge():
    reg = observe(new_regressor(1, 1.0, 1.0), [1.0], 2.0)
    assert reg.theta_hat[0] == pytest.approx(1.0)


def test_fresh_estimate_is_zero():
    np.testing.assert_array_equal(new_regressor(3, 1.0, 1.0).theta_hat, np.zeros(3))


def test_zero_covariate_leaves_estimate():
    reg = observe(new_regressor(2, 1.0, 1.0), [0.6, 0.8], 1.5)
    reg2 = observe(reg, [0.0, 0.0], 5.0)
    np.testing.assert_array_equal(reg2.theta_hat, reg.theta_hat)


def test_matches_dense_normal_equations(rng):
    X = rng.normal(size=(100, 3))
    X /= np.maximum(1.0, np.linalg.norm(X, axis=1, keepdims=True))
    y = X @ np.array([0.3, -0.2, 0.5]) + rng.normal(size=100)
    reg = new_regressor(3, 0.7, 1.0)
    for x, yy in zip(X, y):
        reg.observe(x, yy)
        # theta_hat is V_inv b after every observation
        np.testing.assert_allclose(reg.theta_hat, reg.design.V_inv @ reg.b, rtol=1e-12, atol=1e-14)
    dense = np.linalg.solve(X.T @ X + 0.7 * np.eye(3), X.T @ y)
    np.testing.assert_allclose(reg.theta_hat, dense, rtol=1e-8, atol=1e-10)


def test_observe_dimension_mismatch():
    with pytest.raises(ValueError):
        observe(new_regressor(2, 1.0, 1.0), [1.0], 0.0)


def test_prediction_examples():
    reg = new_regressor(2, 1.0, 1.0)
    assert predict_with_interval(reg, [0.0, 0.0], 1.0, 0.1, 1.0) == (0.0, 0.0)
    mean, hw = predict_with_interval(new_regressor(1, 1.0, 1.0), [1.0], 1.0, math.exp(-1), 1.0)
    assert mean == 0.0
    assert hw == pytest.approx(math.sqrt(2) + 1)
    with pytest.raises(ValueError):
        predict_with_interval(reg, [1.0, 0.0], 1.0, 0.0, 1.0)


def test_prediction_interval_coverage():
    # 2000 runs of a fixed linear model; the interval at a fixed query point
    # must hold for every t <= 200 in at least 1 - delta (+ slack) of them
    delta, reps, T = 0.1, 2000, 200
    theta = np.array([0.6, -0.3])
    q = np.array([0.8, 0.6])
    failures = 0
    for r in range(reps):
        rng = np.random.default_rng([7, r])
        X = rng.normal(size=(T, 2))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        y = X @ theta + rng.normal(size=T)
        reg = new_regressor(2, 1.0, 1.0)
        bad = False
        for t in range(T):
            mean, hw = predict_with_interval(reg, q, 1.0, delta, np.linalg.norm(theta))
            if abs(mean - q @ theta) > hw:
                bad = True
                break
            reg.observe(X[t], y[t])
        failures += bad
    assert failures / reps <= delta + 3 * math.sqrt(delta * (1 - delta) / reps)


def test_ellipsoid_examples():
    ell = ellipsoid(new_regressor(2, 1.0, 1.0), 1.0, math.exp(-1), 1.0)
    assert ell.beta == pytest.approx((math.sqrt(2) + 1) ** 2)
    ell0 = ellipsoid(new_regressor(2, 3.0, 1.0), 0.0, 0.1, 2.0)
    assert ell0.beta == pytest.approx(3.0 * 4.0)


def test_beta_nondecreasing_and_bounded_below(rng):
    reg = new_regressor(3, 2.0, 1.0)
    prev = 0.0
    for _ in range(300):
        x = rng.normal(size=3)
        reg.observe(x / max(1.0, np.linalg.norm(x)), rng.normal())
        ell = ellipsoid(reg, 0.5, 0.05, 1.5)
        assert ell.beta >= prev
        assert ell.beta >= 2.0 * 1.5 ** 2
        assert ell.beta == pytest.approx(ellipsoid_radius(0.5, log_det_ratio(reg.design), 0.05, 2.0, 1.5) ** 2)
        prev = ell.beta


def test_contains_examples(rng):
    reg = new_regressor(2, 1.0, 1.0)
    for _ in range(20):
        x = rng.normal(size=2)
        reg.observe(x / max(1.0, np.linalg.norm(x)), rng.normal())
    ell = ellipsoid(reg, 1.0, 0.1, 1.0)
    assert contains(ell, ell.center)
    assert ell.center in ell
    flat = ConfidenceEllipsoid(ell.center, ell.shape, 0.0)
    assert not contains(flat, ell.center + np.array([1e-6, 0.0]))
    with pytest.raises(ValueError):
        contains(ell, [1.0, 2.0, 3.0])


def test_boundary_point_along_eigenvector(rng):
    reg = new_regressor(3, 1.0, 2.0)
    for _ in range(50):
        x = rng.normal(size=3)
        reg.observe(x / max(1.0, np.linalg.norm(x)), rng.normal())
    ell = ellipsoid(reg, 1.0, 0.1, 1.0)
    vals, vecs = np.linalg.eigh(ell.shape)
    for k in range(3):
        p = ell.center + math.sqrt(ell.beta / vals[k]) * vecs[:, k]
        assert ell.distance_sq(p) == pytest.approx(ell.beta, abs=1e-10)
        # membership is symmetric in the sign of the displacement
        q = 2 * ell.center - p
        assert ell.distance_sq(q) == pytest.approx(ell.distance_sq(p), abs=1e-10)


def test_prediction_ratio_duality(rng):
    # sup_x |x^T (theta_hat - theta)| / ||x||_{V^-1} = ||theta_hat - theta||_V, attained at V (theta_hat - theta)
    for _ in range(50):
        reg = new_regressor(4, rng.uniform(0.5, 2), 1.0)
        for _ in range(30):
            x = rng.normal(size=4)
            reg.observe(x / np.linalg.norm(x), rng.normal())
        theta = rng.normal(size=4)
        diff = reg.theta_hat - theta
        x_star = reg.design.V @ diff
        ratio = abs(x_star @ diff) / math.sqrt(x_star @ reg.design.V_inv @ x_star)
        assert ratio == pytest.approx(math.sqrt(diff @ reg.design.V @ diff), rel=1e-8)


def test_norm_shrinks_as_regularisation_grows(rng):
    X = rng.normal(size=(40, 3))
    X /= np.maximum(1.0, np.linalg.norm(X, axis=1, keepdims=True))
    y = rng.normal(size=40)
    norms = []
    for lam in np.logspace(-2, 4, 25):
        reg = new_regressor(3, lam, 3.0)
        for x, yy in zip(X, y):
            reg.observe(x, yy)
        norms.append(np.linalg.norm(reg.theta_hat))
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-2
