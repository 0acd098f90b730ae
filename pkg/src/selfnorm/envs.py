"""Synthetic sub-Gaussian bandit environments and replication-indexed RNG streams."""
from dataclasses import dataclass, field

import numpy as np


def replication_rng(master_seed, rep):
    """Independent generator for replication ``rep``; independent of run order."""
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(rep),)))


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean noise with its sub-Gaussian parameter ``R``.

    ``gaussian`` uses ``R = sigma``. ``bounded_uniform`` draws uniformly on
    ``[a, b]`` and recentres to mean zero, so Hoeffding's lemma gives
    ``R = (b - a) / 2``.
    """

    kind: str
    sigma: float = 1.0
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.sigma > 0:
                raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        elif self.kind == "bounded_uniform":
            if not self.b > self.a:
                raise ValueError(f"need a < b, got a={self.a!r}, b={self.b!r}")
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def gaussian(cls, sigma):
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def bounded_uniform(cls, a, b):
        return cls("bounded_uniform", a=float(a), b=float(b))

    @property
    def R(self):
        if self.kind == "gaussian":
            return self.sigma
        return (self.b - self.a) / 2.0

    def sample(self, rng, size=None):
        if self.kind == "gaussian":
            return rng.normal(0.0, self.sigma, size)
        return rng.uniform(self.a, self.b, size) - (self.a + self.b) / 2.0


@dataclass
class ArmedBandit:
    means: np.ndarray
    noise: NoiseModel
    gaps: np.ndarray = field(init=False)

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64).reshape(-1)
        if self.means.size == 0:
            raise ValueError("need at least one arm")
        self.gaps = self.means.max() - self.means

    @property
    def K(self):
        return self.means.shape[0]

    def _check(self, arm):
        if not (0 <= arm < self.K) or int(arm) != arm:
            raise IndexError(f"arm {arm!r} out of range for K={self.K}")
        return int(arm)


@dataclass
class LinearBandit:
    """Finite-action linear bandit. ``L`` caps the *squared* action norm."""

    theta_star: np.ndarray
    actions: np.ndarray
    noise: NoiseModel
    L: float = 1.0
    gap: float = field(init=False)

    def __post_init__(self):
        self.theta_star = np.asarray(self.theta_star, dtype=np.float64).reshape(-1)
        self.actions = np.atleast_2d(np.asarray(self.actions, dtype=np.float64))
        if self.actions.shape[1] != self.theta_star.shape[0]:
            raise ValueError("actions and theta_star disagree on dimension")
        if self.actions.shape[0] == 0:
            raise ValueError("need at least one action")
        sq = np.einsum("ij,ij->i", self.actions, self.actions)
        if np.any(sq > self.L * (1 + 1e-12)):
            raise ValueError(f"an action has squared norm {sq.max():.6g} > L={self.L}")
        means = self.action_means
        if np.any(np.abs(means) > 1.0 + 1e-12):
            raise ValueError("theta_star^T x must lie in [-1, 1] for every action")
        best = means.max()
        sub = means[means < best - 1e-12]
        self.gap = float(best - sub.max()) if sub.size else float("inf")

    @property
    def d(self):
        return self.theta_star.shape[0]

    @property
    def action_means(self):
        return self.actions @ self.theta_star

    def index_of(self, x):
        if np.ndim(x) == 0:
            i = int(x)
            if not 0 <= i < self.actions.shape[0]:
                raise IndexError(f"action index {x!r} out of range")
            return i
        hits = np.flatnonzero(np.all(self.actions == np.asarray(x, dtype=np.float64), axis=1))
        if hits.size == 0:
            raise ValueError("action is not in the declared action set")
        return int(hits[0])


def random_linear_bandit(d, n_actions, rng, noise, theta_norm=1.0):
    """Unit-sphere actions and a theta* of norm ``theta_norm`` (<= 1)."""
    A = rng.normal(size=(n_actions, d))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    theta = rng.normal(size=d)
    theta *= theta_norm / np.linalg.norm(theta)
    return LinearBandit(theta, A, noise, L=1.0)


def pull(env, arm, rng):
    """Reward ``mu_arm + eta`` from an :class:`ArmedBandit`."""
    return float(env.means[env._check(arm)] + env.noise.sample(rng))


def play(env, x, rng):
    """Reward ``theta*^T x + eta``; ``x`` is an action vector or its index."""
    i = env.index_of(x)
    return float(env.action_means[i] + env.noise.sample(rng))


def instantaneous_regret(env, chosen):
    if isinstance(env, ArmedBandit):
        return float(env.gaps[env._check(chosen)])
    means = env.action_means
    return float(means.max() - means[env.index_of(chosen)])
