"""UCB(delta), the optimistic linear bandit and its rarely-switching variant.

Policy states are mutable: ``*_select`` and ``*_update`` modify the state in
place (the update functions also return it). Each simulated run owns its
state. Closed-form regret bounds live at the bottom of the module.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .confidence import _R, check_delta, ellipsoid_radius
from .design_matrix import log_det_ratio
from .estimator import RidgeRegressor, new_regressor

LOG2 = math.log(2.0)


# -- UCB(delta) ---------------------------------------------------------------


@dataclass
class UcbDeltaState:
    K: int
    delta: float
    R: float = 1.0
    counts: np.ndarray = None
    means: np.ndarray = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K!r}")
        check_delta(self.delta)
        if self.counts is None:
            self.counts = np.zeros(self.K, dtype=np.int64)
        if self.means is None:
            self.means = np.zeros(self.K)

    def scores(self):
        w = np.array([kernels.ucb_width(int(n), float(self.K), self.delta) for n in self.counts])
        return self.means + self.R * w


def ucb_select(state):
    """Arm maximising mean + half-width; unplayed arms first, ties to the lowest index."""
    return int(np.argmax(state.scores()))


def ucb_update(state, arm, reward):
    if not (0 <= arm < state.K):
        raise IndexError(f"arm {arm!r} out of range for K={state.K}")
    state.counts[arm] += 1
    state.means[arm] += (reward - state.means[arm]) / state.counts[arm]
    return state


def ucb_regret_bound(gaps, K, delta):
    """High-probability, horizon-free regret bound of UCB(delta).

    ``gaps`` lists the positive gaps of the suboptimal arms.
    """
    check_delta(delta)
    total = 0.0
    for g in gaps:
        if not g > 0:
            raise ValueError(f"gaps must be positive, got {g!r}")
        total += 3.0 * g + 16.0 / g * math.log(2.0 * K / (g * delta))
    return total


# -- optimistic linear bandit ------------------------------------------------


@dataclass
class OfulState:
    regressor: RidgeRegressor
    actions: np.ndarray
    delta: float
    R: float
    S: float

    def __post_init__(self):
        self.actions = np.atleast_2d(np.asarray(self.actions, dtype=np.float64))
        if self.actions.shape[0] == 0:
            raise ValueError("empty action set")
        if self.actions.shape[1] != self.regressor.d:
            raise ValueError("action dimension does not match the regressor")
        norms = np.linalg.norm(self.actions, axis=1)
        if np.any(norms > self.regressor.design.L * (1 + 1e-12)):
            raise ValueError(f"action norm {norms.max():.6g} exceeds L={self.regressor.design.L}")
        check_delta(self.delta)

    @property
    def lam(self):
        return self.regressor.lam

    def sqrt_beta(self):
        return ellipsoid_radius(
            self.R, log_det_ratio(self.regressor.design), self.delta, self.lam, self.S
        )

    def ucb_values(self):
        A = self.actions
        widths = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", A, self.regressor.design.V_inv, A), 0.0))
        return A @ self.regressor.theta_hat + self.sqrt_beta() * widths


def new_oful(actions, d, lam, L, delta, R, S):
    return OfulState(new_regressor(d, lam, L), actions, delta, float(_R(R)), float(S))


def oful_select(state):
    """Solve the joint argmax over ellipsoid x actions.

    For a fixed action the inner maximum over the ellipsoid is
    ``<theta_hat, x> + sqrt(beta) ||x||_{V^{-1}}``; the outer one is a scan.
    """
    vals = state.ucb_values()
    i = int(np.argmax(vals))
    return i, float(vals[i])


def oful_update(state, action, reward):
    if not (0 <= action < state.actions.shape[0]):
        raise IndexError(f"action index {action!r} out of range")
    state.regressor.observe(state.actions[action], reward)
    return state


@dataclass
class RarelySwitchingState:
    inner: OfulState
    tau_log_det: float = None
    cached_action: int = None
    recompute_count: int = 0
    tau_V_inv: np.ndarray = field(default=None, repr=False)


def rs_oful_select(state):
    """Recompute the optimistic action only after det V has more than doubled."""
    design = state.inner.regressor.design
    if state.cached_action is None or (
        design.log_det - state.tau_log_det > LOG2 + kernels.SWITCH_SLACK
    ):
        state.cached_action, _ = oful_select(state.inner)
        state.tau_log_det = design.log_det
        state.tau_V_inv = design.V_inv.copy()
        state.recompute_count += 1
        return state.cached_action, True
    return state.cached_action, False


def rs_oful_update(state, action, reward):
    oful_update(state.inner, action, reward)
    return state


def oful_regret_bound(T, d, L, lam, S, noise, delta):
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T!r}")
    R = _R(noise)
    li = -math.log(check_delta(delta))
    conf = math.sqrt(lam) * S + R * math.sqrt(2.0 * li + d * math.log1p(T * L / (lam * d)))
    return 4.0 * math.sqrt(T * d * math.log(lam + T * L / d)) * conf


def rs_oful_regret_bound(T, d, L, lam, S, noise, delta):
    """sqrt(2) times :func:`oful_regret_bound` plus ``4 sqrt(d log(T/d))``.

    The additive term is taken as 0 when T < d (its log goes negative).
    """
    base = oful_regret_bound(T, d, L, lam, S, noise, delta)
    return math.sqrt(2.0) * base + 4.0 * math.sqrt(d * max(math.log(T / d), 0.0))


def problem_dependent_bound(T, d, L, lam, S, R, delta, gap):
    """Gap-dependent regret bound of the optimistic linear bandit (needs lam, S >= 1)."""
    if lam < 1 or S < 1:
        raise ValueError("the gap-dependent bound assumes lam >= 1 and S >= 1")
    if not gap > 0:
        raise ValueError(f"gap must be positive, got {gap!r}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T!r}")
    R = _R(R)
    li = -math.log(check_delta(delta))
    c = R * R * lam * S * S
    inner = (
        math.log(L * T)
        + (d - 1) * math.log(64.0 * c * L / (gap * gap))
        + 2.0 * (d - 1) * math.log(d * math.log((d * lam + T * L * L) / d) + 2.0 * li)
        + 2.0 * li
    )
    return 16.0 * c / gap * inner * inner


# -- det-ratio domination ----------------------------------------------------


def pencil_sup_ratio(A, B):
    """``(sup_x x^T A x / x^T B x, det A / det B)`` for symmetric A and PD B."""
    top = scipy.linalg.eigh(A, B, eigvals_only=True)[-1]
    sa, la = np.linalg.slogdet(A)
    _, lb = np.linalg.slogdet(B)
    return float(top), float(sa * math.exp(la - lb))


def det_ratio_norm_bound_check(A, B, samples=256, rng=None):
    """True iff ``x^T A x / x^T B x <= det A / det B`` on every probe direction.

    Probes are ``samples`` random directions plus the generalized
    eigenvectors of the pencil (A, B), which attain the supremum.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        raise ValueError("B must be positive definite") from None
    gap = np.linalg.eigvalsh(0.5 * ((A - B) + (A - B).T))
    if gap[0] < -1e-10 * max(1.0, np.abs(A).max()):
        raise ValueError("A - B must be positive semi-definite")
    rng = np.random.default_rng() if rng is None else rng
    d = A.shape[0]
    X = rng.normal(size=(samples, d))
    _, vecs = scipy.linalg.eigh(A, B)
    X = np.vstack([X, vecs.T])
    ratios = np.einsum("ij,jk,ik->i", X, A, X) / np.einsum("ij,jk,ik->i", X, B, X)
    _, det_ratio = pencil_sup_ratio(A, B)
    return bool(ratios.max() <= det_ratio * (1 + 1e-8))
