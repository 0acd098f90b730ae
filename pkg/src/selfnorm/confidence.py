"""Confidence radii for self-normalized sums and their competitors.

All functions are pure. ``noise`` arguments accept a :class:`NoiseSpec` or a
bare float R. Logs are natural. ``delta = 1`` is accepted everywhere as the
analytic edge where the ``log(1/delta)`` terms vanish.
"""
import math
from dataclasses import dataclass

from . import kernels

SKIPPING_KINDS = ("self_normalized", "hoeffding_union", "peeling")
ONE_SIDED_KINDS = frozenset({"peeling"})


@dataclass(frozen=True)
class NoiseSpec:
    """Conditionally R-sub-Gaussian noise."""

    R: float

    def __post_init__(self):
        # R = 0 is the noiseless limit; the radii stay well defined there
        if not self.R >= 0 or math.isinf(self.R):
            raise ValueError(f"sub-Gaussian parameter must be finite and >= 0, got {self.R!r}")


def _R(noise):
    if isinstance(noise, NoiseSpec):
        return noise.R
    return NoiseSpec(float(noise)).R


def check_delta(delta):
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")
    return float(delta)


def _log_inv(delta):
    return -math.log(check_delta(delta))


def self_normalized_bound_sq(noise, ldr, delta):
    """Squared uniform bound on ``||S_t||_{Vbar_t^{-1}}``: ``R^2 (ldr + 2 log(1/delta))``."""
    if ldr < 0:
        raise ValueError(f"log-det ratio must be >= 0, got {ldr!r}")
    R = _R(noise)
    return R * R * (ldr + 2.0 * _log_inv(delta))


def worst_case_bound_sq(noise, d, t, L, lam, delta):
    """Data-free form ``d R^2 log((d lam + t L^2) / (d delta))`` with trace(V) = d lam."""
    R = _R(noise)
    return d * R * R * math.log((d * lam + t * L * L) / (d * check_delta(delta)))


def kappa_bound(noise, d, t, L, lam, delta):
    """Fixed-time norm bound ``2 kappa^2 R sqrt(log t) sqrt(d log t + log(1/delta))``.

    ``kappa^2 = 3 + 2 log((L^2 + trace(V)) / lam)`` with V = lam I. Only
    defined for t >= 2.
    """
    if t < 2:
        raise ValueError(f"kappa bound needs t >= 2, got {t!r}")
    R = _R(noise)
    kappa_sq = 3.0 + 2.0 * math.log((L * L + d * lam) / lam)
    lt = math.log(t)
    return 2.0 * kappa_sq * R * math.sqrt(lt) * math.sqrt(d * lt + _log_inv(delta))


def ellipsoid_radius(noise, ldr, delta, lam, S):
    """``sqrt(beta_t(delta))``: ``R sqrt(ldr + 2 log(1/delta)) + sqrt(lam) S``."""
    if S < 0:
        raise ValueError(f"S must be >= 0, got {S!r}")
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam!r}")
    return math.sqrt(self_normalized_bound_sq(noise, ldr, delta)) + math.sqrt(lam) * S


def dani_radius(noise, d, t, delta):
    """Competing ellipsoid radius ``R max(sqrt(128 d log t log(t^2/delta)), 8/3 log(t^2/delta))``."""
    if t < 2:
        raise ValueError(f"Dani radius needs t >= 2, got {t!r}")
    R = _R(noise)
    lt2 = 2.0 * math.log(t) + _log_inv(delta)
    return R * max(math.sqrt(128.0 * d * math.log(t) * lt2), 8.0 / 3.0 * lt2)


def dani_valid(t, delta):
    """Validity condition ``0 < delta < t^2 exp(-1/16)`` of :func:`dani_radius`."""
    return 0.0 < delta < t * t * math.exp(-1.0 / 16.0)


def skipping_radius(kind, N, t, delta):
    """Width for the optional-skipping sum after N of t steps were kept.

    ``self_normalized`` does not depend on t. ``hoeffding_union`` and
    ``peeling`` need t >= 2; ``peeling`` is one-sided (see ``ONE_SIDED_KINDS``).
    """
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N!r}")
    li = _log_inv(delta)
    if kind == "self_normalized":
        return math.sqrt((1.0 + N) * (1.0 + math.log1p(N) + 2.0 * li))
    if kind not in SKIPPING_KINDS:
        raise ValueError(f"unknown skipping kind {kind!r}")
    if t < 2:
        raise ValueError(f"{kind} radius needs t >= 2, got {t!r}")
    if kind == "hoeffding_union":
        return math.sqrt(2.0 * N * (math.log(2.0 * t) + li))
    return math.sqrt(4.0 * N / 1.99 * (math.log(6.0 * math.log(t)) + li))


def ucb_halfwidth(N, K, delta):
    """UCB(delta) interval half-width; ``+inf`` for an unplayed arm (N = 0)."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K!r}")
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N!r}")
    return float(kernels.ucb_width(int(N), float(K), check_delta(delta)))
