"""Online ridge regression with self-normalized prediction intervals and ellipsoids."""
import math
from dataclasses import dataclass

import numpy as np

from .confidence import ellipsoid_radius
from .design_matrix import DesignMatrixState, _as_vector, log_det_ratio, new_design, weighted_norm_sq


@dataclass
class RidgeRegressor:
    design: DesignMatrixState
    b: np.ndarray
    theta_hat: np.ndarray

    @property
    def d(self):
        return self.design.d

    @property
    def lam(self):
        return self.design.lam

    def copy(self):
        return RidgeRegressor(self.design.copy(), self.b.copy(), self.theta_hat.copy())

    def observe(self, x, y):
        """Add one (x, y) pair in place."""
        x = _as_vector(x, self.d)
        self.design.update(x)
        self.b += float(y) * x
        self.theta_hat = self.design.V_inv @ self.b
        return self


@dataclass
class ConfidenceEllipsoid:
    """``{theta : (theta - center)^T shape (theta - center) <= beta}``."""

    center: np.ndarray
    shape: np.ndarray
    beta: float

    def distance_sq(self, theta):
        diff = _as_vector(theta, self.center.shape[0]) - self.center
        return float(diff @ self.shape @ diff)

    def __contains__(self, theta):
        return contains(self, theta)


def new_regressor(d, lam, L, on_excess_norm="error"):
    design = new_design(d, lam, L, on_excess_norm=on_excess_norm)
    return RidgeRegressor(design, np.zeros(design.d), np.zeros(design.d))


def observe(reg, x, y):
    """Return a new regressor with (x, y) absorbed; ``reg`` is untouched."""
    return reg.copy().observe(x, y)


def predict_with_interval(reg, x, noise, delta, S):
    """Mean ``x^T theta_hat`` and the uniform-in-time half-width at ``x``."""
    x = _as_vector(x, reg.d)
    radius = ellipsoid_radius(noise, log_det_ratio(reg.design), delta, reg.lam, S)
    width = math.sqrt(weighted_norm_sq(reg.design, x, "inverse"))
    return float(x @ reg.theta_hat), width * radius


def ellipsoid(reg, noise, delta, S):
    radius = ellipsoid_radius(noise, log_det_ratio(reg.design), delta, reg.lam, S)
    return ConfidenceEllipsoid(reg.theta_hat.copy(), reg.design.V.copy(), radius * radius)


def contains(ell, theta):
    return ell.distance_sq(theta) <= ell.beta
