"""Hot loops: rank-one design updates and whole-replication simulations.

Every function here is written so that it compiles under ``numba.njit`` and
also runs unchanged as plain numpy when the JIT is switched off (see
``selfnorm._accel``). Inputs are float64 / int64 arrays; all randomness is
drawn by the caller and passed in, so both paths see identical streams.
"""
import math

import numpy as np

from ._accel import njit

REFRESH_EVERY = 256
DRIFT_TOL = 1e-8
# slack on the det-doubling test so exact doublings (det 6 vs 2*3) do not
# trigger on accumulated rounding
SWITCH_SLACK = 1e-12

COVARIATE_FIXED = 0
COVARIATE_ROUND_ROBIN = 1
COVARIATE_RANDOM = 2
COVARIATE_ADAPTIVE = 3


@njit
def refresh_inverse(V, V_inv):
    inv = np.linalg.inv(V)
    V_inv[:, :] = 0.5 * (inv + inv.T)


@njit
def inverse_drift(V, V_inv):
    """max |V V_inv - I| over all entries."""
    R = V @ V_inv
    d = V.shape[0]
    worst = 0.0
    for i in range(d):
        for j in range(d):
            target = 1.0 if i == j else 0.0
            err = abs(R[i, j] - target)
            if err > worst:
                worst = err
    return worst


@njit
def column_drift(V, V_inv, k):
    # one column of V V_inv - I; O(d^2). V_inv is symmetric so row k == column k
    r = V @ V_inv[k]
    r[k] -= 1.0
    return np.max(np.abs(r))


@njit
def rank_one_inplace(V, V_inv, x, t):
    """Add x x^T to V and update V_inv by Sherman-Morrison.

    ``t`` is the update count *after* this update; it drives the refresh
    cadence. Returns w = x^T V_inv x evaluated before the update.
    """
    u = V_inv @ x
    w = x @ u
    V += np.outer(x, x)
    V_inv -= np.outer(u, u) / (1.0 + w)
    d = V.shape[0]
    if t % REFRESH_EVERY == 0 or column_drift(V, V_inv, t % d) > DRIFT_TOL:
        refresh_inverse(V, V_inv)
    return w


@njit
def potential_sums(X, lam):
    """Run a covariate sequence through a fresh lam*I design.

    Returns (w, ldr) where w[k] = ||x_k||^2 under the inverse design *before*
    x_k is added and ldr[k] is the log-det ratio after it.
    """
    T, d = X.shape
    V = lam * np.eye(d)
    V_inv = np.eye(d) / lam
    w = np.empty(T)
    ldr = np.empty(T)
    acc = 0.0
    for k in range(T):
        w[k] = rank_one_inplace(V, V_inv, X[k].copy(), k + 1)
        acc += math.log1p(w[k])
        ldr[k] = acc
    return w, ldr


@njit
def ucb_width(N, K, delta):
    if N == 0:
        return np.inf
    n = float(N)
    inner = 1.0 + 2.0 * (math.log(K / delta) + 0.5 * math.log1p(n))
    return math.sqrt((1.0 + n) / (n * n) * inner)


@njit
def sqrt_beta(R, ldr, delta, lam, S):
    return R * math.sqrt(ldr + 2.0 * math.log(1.0 / delta)) + math.sqrt(lam) * S


@njit
def coverage_replication(kind, X_pre, noise, theta_star, lam, L, R, S):
    """One replication of the martingale / ellipsoid coverage experiment.

    Returns two statistics, each maximised over t = 0..T:
      ||S_t||^2_{Vbar^-1} / R^2 - ldr_t
      (||theta_hat_t - theta*||_{V_t} - sqrt(lam) S)_+^2 / R^2 - ldr_t
    The bound at level delta is violated at some t iff the statistic exceeds
    2 log(1/delta).
    """
    T = noise.shape[0]
    d = theta_star.shape[0]
    V = lam * np.eye(d)
    V_inv = np.eye(d) / lam
    Ssum = np.zeros(d)
    b = np.zeros(d)
    ldr = 0.0
    bias = math.sqrt(lam) * S
    mart_max = 0.0
    ell_max = -np.inf
    for k in range(T):
        if kind == COVARIATE_FIXED:
            m = X_pre[0].copy()
        elif kind == COVARIATE_ROUND_ROBIN:
            m = np.zeros(d)
            m[k % d] = L
        elif kind == COVARIATE_RANDOM:
            m = X_pre[k].copy()
        else:
            u = V_inv @ Ssum
            nrm = math.sqrt(u @ u)
            if nrm > 0.0:
                m = (L / nrm) * u
            else:
                m = np.zeros(d)
                m[0] = L
        eta = noise[k]
        y = m @ theta_star + eta
        Ssum += eta * m
        b += y * m
        ldr += math.log1p(rank_one_inplace(V, V_inv, m, k + 1))

        q = Ssum @ (V_inv @ Ssum)
        stat = q / (R * R) - ldr
        if stat > mart_max:
            mart_max = stat

        diff = V_inv @ b - theta_star
        e = math.sqrt(max(diff @ (V @ diff), 0.0))
        if e > bias:
            stat = (e - bias) ** 2 / (R * R) - ldr
            if stat > ell_max:
                ell_max = stat
    return mart_max, ell_max


@njit
def ucb_replication(means, noise, delta, R):
    """UCB(delta) on a K-armed bandit with pre-drawn noise.

    Returns per-step arrays (arm, reward, cumulative regret, chosen width,
    log-det of the diagonal count design) and the final per-arm counts.
    """
    K = means.shape[0]
    T = noise.shape[0]
    counts = np.zeros(K, dtype=np.int64)
    avg = np.zeros(K)
    best = np.max(means)
    arms = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    cumreg = np.empty(T)
    width = np.empty(T)
    logdet = np.empty(T)
    regret = 0.0
    ld = 0.0
    for t in range(T):
        choice = 0
        top = -np.inf
        top_w = 0.0
        for i in range(K):
            w = R * ucb_width(counts[i], K, delta)
            score = avg[i] + w
            if score > top:
                top = score
                choice = i
                top_w = w
        r = means[choice] + noise[t]
        n = counts[choice]
        counts[choice] = n + 1
        avg[choice] += (r - avg[choice]) / (n + 1)
        ld += math.log((n + 2.0) / (n + 1.0))
        regret += best - means[choice]
        arms[t] = choice
        rewards[t] = r
        cumreg[t] = regret
        width[t] = top_w
        logdet[t] = ld
    return arms, rewards, cumreg, width, logdet, counts


@njit
def linear_replication(actions, theta_star, noise, lam, R, S, delta, rarely_switching):
    """Optimistic linear bandit over a finite action set with pre-drawn noise.

    With ``rarely_switching`` the optimistic action is recomputed only when
    det V_t exceeds twice det V_tau, tau being the last recomputation.

    Per-step outputs (index t = step - 1):
      arm, reward, cumreg, sqrt_beta (at selection), ldr (at selection),
      recomputed, ucb (fresh optimistic value of the played action when
      recomputed, else its stale value), width (||x_t||_{V_t^-1}),
      width_tau (||x_t||_{V_tau^-1}), in_ellipsoid (theta* in C_t).
    """
    n, d = actions.shape
    T = noise.shape[0]
    V = lam * np.eye(d)
    V_inv = np.eye(d) / lam
    V_tau_inv = V_inv.copy()
    b = np.zeros(d)
    theta_hat = np.zeros(d)
    means = actions @ theta_star
    best = np.max(means)

    arms = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    cumreg = np.empty(T)
    sb = np.empty(T)
    ldrs = np.empty(T)
    recomputed = np.zeros(T, dtype=np.bool_)
    ucb = np.empty(T)
    width = np.empty(T)
    width_tau = np.empty(T)
    in_ell = np.zeros(T, dtype=np.bool_)

    ldr = 0.0
    tau_ldr = 0.0
    cached = -1
    cached_ucb = 0.0
    regret = 0.0
    thresh = math.log(2.0) + SWITCH_SLACK
    for t in range(T):
        root_beta = sqrt_beta(R, ldr, delta, lam, S)
        fresh = (not rarely_switching) or cached < 0 or (ldr - tau_ldr > thresh)
        if fresh:
            choice = 0
            top = -np.inf
            for i in range(n):
                x = actions[i]
                val = x @ theta_hat + root_beta * math.sqrt(max(x @ (V_inv @ x), 0.0))
                if val > top:
                    top = val
                    choice = i
            cached = choice
            cached_ucb = top
            tau_ldr = ldr
            V_tau_inv[:, :] = V_inv
            recomputed[t] = True
        x = actions[cached].copy()
        diff = theta_hat - theta_star
        in_ell[t] = diff @ (V @ diff) <= root_beta * root_beta
        width[t] = math.sqrt(max(x @ (V_inv @ x), 0.0))
        width_tau[t] = math.sqrt(max(x @ (V_tau_inv @ x), 0.0))
        sb[t] = root_beta
        ldrs[t] = ldr
        ucb[t] = cached_ucb

        r = means[cached] + noise[t]
        regret += best - means[cached]
        arms[t] = cached
        rewards[t] = r
        cumreg[t] = regret

        b += r * x
        ldr += math.log1p(rank_one_inplace(V, V_inv, x, t + 1))
        theta_hat = V_inv @ b
    return arms, rewards, cumreg, sb, ldrs, recomputed, ucb, width, width_tau, in_ell
