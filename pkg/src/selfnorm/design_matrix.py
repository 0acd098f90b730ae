"""Regularized design matrix with incrementally maintained inverse and log-det.

The state holds ``V = lambda*I + sum x x^T`` together with ``V^{-1}`` and
``log det V``. Each update costs O(d^2); the inverse is refreshed from a dense
factorisation every ``REFRESH_EVERY`` updates or when a rotating residual
probe on ``V V^{-1} - I`` exceeds ``DRIFT_TOL``.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels


class CovariateNormError(ValueError):
    """A covariate exceeded the declared norm cap L."""


@dataclass
class DesignMatrixState:
    d: int
    lam: float
    L: float
    V: np.ndarray
    V_inv: np.ndarray
    log_det: float
    t: int = 0
    on_excess_norm: str = "error"
    _history: list = field(default_factory=list, repr=False)

    def copy(self):
        return DesignMatrixState(
            self.d, self.lam, self.L, self.V.copy(), self.V_inv.copy(),
            self.log_det, self.t, self.on_excess_norm, list(self._history),
        )

    def update(self, x):
        """Rank-one update in place. Returns ``w = x^T V^{-1} x`` before the update."""
        x = _as_vector(x, self.d)
        nrm = float(np.linalg.norm(x))
        if nrm > self.L * (1.0 + 1e-12):
            if self.on_excess_norm == "clamp":
                warnings.warn(
                    f"covariate norm {nrm:.6g} exceeds L={self.L:.6g}; clamping",
                    stacklevel=2,
                )
                x = x * (self.L / nrm)
            else:
                raise CovariateNormError(f"covariate norm {nrm:.6g} exceeds L={self.L:.6g}")
        self.t += 1
        w = float(kernels.rank_one_inplace(self.V, self.V_inv, x, self.t))
        self.log_det += math.log1p(w)
        self._history.append(w)
        return w

    @property
    def potentials(self):
        """Inverse-weighted norms w_k of every covariate at the time it was added."""
        return np.asarray(self._history)

    def drift(self):
        return float(kernels.inverse_drift(self.V, self.V_inv))


def _as_vector(x, d):
    x = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != d:
        raise ValueError(f"expected a vector of dimension {d}, got {x.shape[0]}")
    return x


def new_design(d, lam, L, on_excess_norm="error"):
    """Fresh design ``V = lam * I``.

    ``on_excess_norm`` is ``"error"`` (default) or ``"clamp"``; the latter
    rescales over-long covariates onto the L-sphere with a warning.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if not lam > 0:
        raise ValueError(f"regularization must be positive, got {lam!r}")
    if not L > 0:
        raise ValueError(f"norm cap L must be positive, got {L!r}")
    if on_excess_norm not in ("error", "clamp"):
        raise ValueError(f"on_excess_norm must be 'error' or 'clamp', got {on_excess_norm!r}")
    d = int(d)
    return DesignMatrixState(
        d=d,
        lam=float(lam),
        L=float(L),
        V=float(lam) * np.eye(d),
        V_inv=np.eye(d) / float(lam),
        log_det=d * math.log(lam),
        on_excess_norm=on_excess_norm,
    )


def rank_one_update(state, x):
    """Return a new state with ``x x^T`` added; ``state`` is left untouched."""
    new = state.copy()
    new.update(x)
    return new


def weighted_norm_sq(state, x, which="inverse"):
    """``x^T V^{-1} x`` (``which="inverse"``) or ``x^T V x`` (``"direct"``)."""
    x = _as_vector(x, state.d)
    if which == "inverse":
        A = state.V_inv
    elif which == "direct":
        A = state.V
    else:
        raise ValueError(f"which must be 'inverse' or 'direct', got {which!r}")
    return max(float(x @ A @ x), 0.0)


def log_det_ratio(state):
    """``log det V_t - log det(lam I)``, always >= 0."""
    return max(state.log_det - state.d * math.log(state.lam), 0.0)


def potential_bounds(state):
    """Evaluate the determinant-potential inequality chain for ``state``.

    Returns a dict with the clipped potential sum, the plain sum, twice the
    log-det ratio, and the trace-based cap
    ``2 (d log((trace(lam I) + t L^2)/d) - log det(lam I))``.
    """
    w = state.potentials
    ldr = log_det_ratio(state)
    d, lam = state.d, state.lam
    cap = 2.0 * (d * math.log((d * lam + state.t * state.L ** 2) / d) - d * math.log(lam))
    return {
        "clipped_sum": float(np.minimum(w, 1.0).sum()),
        "sum": float(w.sum()),
        "two_ldr": 2.0 * ldr,
        "ldr": ldr,
        "trace_cap": cap,
        "strong_regime": lam >= max(1.0, state.L ** 2),
    }
