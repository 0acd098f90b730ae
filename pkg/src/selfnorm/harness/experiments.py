"""Monte Carlo experiments checking coverage and regret against the closed-form bounds.

Every runner takes an :class:`ExperimentConfig` and returns a :class:`Report`.
Replication ``r`` draws all of its randomness from ``replication_rng(seed, r)``
and results are reduced in replication order, so the output depends only on
the config, never on ``jobs``.
"""
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import binom

from .. import confidence, kernels
from ..envs import LinearBandit, random_linear_bandit, replication_rng
from ..policies import oful_regret_bound, rs_oful_regret_bound, ucb_regret_bound
from .config import ConfigError
from .traces import RegretTrace, write_table, write_trace

LOG2 = math.log(2.0)
_COVARIATE_CODES = {
    "fixed": kernels.COVARIATE_FIXED,
    "round_robin": kernels.COVARIATE_ROUND_ROBIN,
    "random": kernels.COVARIATE_RANDOM,
    "adaptive": kernels.COVARIATE_ADAPTIVE,
}


@dataclass
class Report:
    experiment: str
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def summary_json(self):
        body = {"experiment": self.experiment, "ok": self.ok, "failures": self.failures, **self.summary}
        return json.dumps(body, indent=2, sort_keys=True)

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, (header, rows) in self.tables.items():
            write_table(out / f"{name}.csv", header, rows)
        for name, trace in self.traces.items():
            write_trace(trace, out / f"{name}.csv")
        (out / "summary.json").write_text(self.summary_json() + "\n")


def binomial_slack(delta, reps):
    """Three-sigma envelope on an empirical failure fraction."""
    return 3.0 * math.sqrt(delta * (1.0 - delta) / reps)


def environment_rng(seed):
    # no spawn key: disjoint from every replication stream
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def _map_reps(fn, reps, jobs):
    if jobs <= 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(reps)))


def _unit_rows(rng, n, d):
    X = rng.normal(size=(n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _vector(env, key, d):
    v = np.asarray(env[key], dtype=np.float64).reshape(-1)
    if v.shape[0] != d:
        raise ConfigError(f"env.{key} must have length {d}")
    return v


# -- coverage ------------------------------------------------------------------


def run_coverage(cfg):
    env = cfg.env
    d = int(env.get("d", 2))
    lam = float(env.get("lambda", 1.0))
    L = float(env.get("L", 1.0))
    if d < 1 or lam <= 0 or L <= 0:
        raise ConfigError("coverage needs env.d >= 1, env.lambda > 0, env.L > 0")
    erng = environment_rng(cfg.seed)
    theta = _vector(env, "theta_star", d) if "theta_star" in env else _unit_rows(erng, 1, d)[0]
    S = float(env.get("S", np.linalg.norm(theta)))
    if S < np.linalg.norm(theta) * (1 - 1e-12):
        raise ConfigError("env.S must bound the norm of env.theta_star")
    kind_name = env.get("covariates", "adaptive")
    kind = _COVARIATE_CODES[kind_name]
    x_fixed = _vector(env, "x", d) if "x" in env else L * np.eye(d)[0]
    if np.linalg.norm(x_fixed) > L * (1 + 1e-12):
        raise ConfigError("env.x exceeds the norm cap env.L")
    R = cfg.noise.R
    T = cfg.T

    def one(r):
        rng = replication_rng(cfg.seed, r)
        noise = cfg.noise.sample(rng, T)
        X = L * _unit_rows(rng, T, d) if kind == kernels.COVARIATE_RANDOM else x_fixed[None, :].copy()
        return kernels.coverage_replication(kind, X, noise, theta, lam, L, R, S)

    stats = np.array(_map_reps(one, cfg.reps, cfg.jobs), dtype=np.float64).reshape(cfg.reps, 2)

    report = Report("coverage")
    per_delta = []
    rows = []
    for delta in cfg.deltas:
        thr = 2.0 * math.log(1.0 / delta)
        m_viol = int(np.count_nonzero(stats[:, 0] > thr))
        e_viol = int(np.count_nonzero(stats[:, 1] > thr))
        envelope = delta + binomial_slack(delta, cfg.reps)
        b99 = float(binom.ppf(0.99, cfg.reps, delta)) / cfg.reps
        m_frac = m_viol / cfg.reps
        e_frac = e_viol / cfg.reps
        ok = m_frac <= envelope and e_frac <= envelope
        if not ok:
            report.failures.append(
                f"coverage at delta={delta}: martingale {m_frac:.4f}, ellipsoid {e_frac:.4f} > {envelope:.4f}"
            )
        per_delta.append({
            "delta": delta,
            "martingale_violations": m_viol,
            "martingale_fraction": m_frac,
            "ellipsoid_violations": e_viol,
            "ellipsoid_fraction": e_frac,
            "envelope": envelope,
            "binomial_99": b99,
            "ok": ok,
        })
        rows.append((delta, cfg.reps, m_viol, m_frac, e_viol, e_frac, envelope, b99, ok))
    report.summary = {
        "T": T, "reps": cfg.reps, "d": d, "lambda": lam, "L": L, "S": S, "R": R,
        "covariates": kind_name, "seed": cfg.seed, "theta_star": theta.tolist(),
        "per_delta": per_delta,
    }
    report.tables["coverage"] = (
        ("delta", "reps", "martingale_violations", "martingale_fraction",
         "ellipsoid_violations", "ellipsoid_fraction", "envelope", "binomial_99", "ok"),
        rows,
    )
    report.tables["coverage_reps"] = (
        ("rep", "martingale_stat", "ellipsoid_stat"),
        [(r, stats[r, 0], stats[r, 1]) for r in range(cfg.reps)],
    )
    return report


# -- regret ----------------------------------------------------------------------


def run_regret(cfg):
    if cfg.experiment == "ucb_regret":
        return _run_ucb(cfg)
    return _run_linear(cfg, rarely_switching=cfg.experiment == "rs_oful_regret")


def _run_ucb(cfg):
    if "means" not in cfg.env:
        raise ConfigError("ucb_regret needs env.means")
    means = np.asarray(cfg.env["means"], dtype=np.float64).reshape(-1)
    if means.size < 1:
        raise ConfigError("env.means must list at least one arm")
    K = means.shape[0]
    delta, T, R = cfg.delta, cfg.T, cfg.noise.R
    gaps = means.max() - means
    bound = ucb_regret_bound(gaps[gaps > 0], K, delta)
    half = T // 2

    def one(r):
        rng = replication_rng(cfg.seed, r)
        return kernels.ucb_replication(means, cfg.noise.sample(rng, T), delta, R)

    results = _map_reps(one, cfg.reps, cfg.jobs)
    report = Report("ucb_regret")
    rows = []
    finals = np.empty(cfg.reps)
    flats = np.empty(cfg.reps, dtype=bool)
    for r, (arms, rewards, cumreg, width, logdet, counts) in enumerate(results):
        finals[r] = cumreg[-1]
        flats[r] = half == 0 or cumreg[-1] == cumreg[T - half - 1]
        rows.append((r, cumreg[-1], bound, cumreg[-1] > bound, flats[r], *counts.tolist()))
        if r < cfg.trace_reps:
            report.traces[f"trace_rep{r:04d}"] = RegretTrace(
                np.arange(1, T + 1), arms, rewards, cumreg, width, logdet, np.ones(T, dtype=bool)
            ).validate()
    allowed = delta + binomial_slack(delta, cfg.reps)
    exceed = float(np.mean(finals > bound))
    flat = float(np.mean(flats))
    if exceed > allowed:
        report.failures.append(f"regret exceeded the bound in {exceed:.4f} of runs > {allowed:.4f}")
    if flat < 1.0 - allowed:
        report.failures.append(f"regret flat over the last T/2 in only {flat:.4f} of runs")
    report.summary = {
        "T": T, "reps": cfg.reps, "delta": delta, "R": R, "means": means.tolist(),
        "bound": bound, "exceed_fraction": exceed, "allowed_fraction": allowed,
        "flat_fraction": flat, "mean_final_regret": float(finals.mean()),
        "max_final_regret": float(finals.max()), "seed": cfg.seed,
    }
    report.tables["regret_reps"] = (
        ("rep", "final_regret", "bound", "exceeded", "flat", *[f"pulls_{i}" for i in range(K)]),
        rows,
    )
    return report


def build_linear_env(cfg):
    env = cfg.env
    d = int(env.get("d", 2))
    erng = environment_rng(cfg.seed if "seed" not in env else env["seed"])
    try:
        if "actions" in env:
            actions = np.atleast_2d(np.asarray(env["actions"], dtype=np.float64))
            theta = _vector(env, "theta_star", actions.shape[1]) if "theta_star" in env else (
                float(env.get("theta_norm", 1.0)) * _unit_rows(erng, 1, actions.shape[1])[0]
            )
            return LinearBandit(theta, actions, cfg.noise, L=float(env.get("L", 1.0)))
        bandit = random_linear_bandit(
            d, int(env.get("n_actions", 10)), erng, cfg.noise, float(env.get("theta_norm", 1.0))
        )
        if "theta_star" in env:
            bandit = LinearBandit(_vector(env, "theta_star", d), bandit.actions, cfg.noise, L=float(env.get("L", 1.0)))
        return bandit
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _run_linear(cfg, rarely_switching):
    bandit = build_linear_env(cfg)
    env = cfg.env
    A, theta = bandit.actions, bandit.theta_star
    d = bandit.d
    lam = float(env.get("lambda", 1.0))
    S = float(env.get("S", np.linalg.norm(theta)))
    L = float(env.get("L", 1.0))
    if lam <= 0 or S < np.linalg.norm(theta) * (1 - 1e-12):
        raise ConfigError("need env.lambda > 0 and env.S >= ||theta_star||")
    delta, T, R = cfg.delta, cfg.T, cfg.noise.R
    bound_fn = rs_oful_regret_bound if rarely_switching else oful_regret_bound
    bound = bound_fn(T, d, L, lam, S, R, delta)
    checkpoints = sorted({int(c) for c in env.get("checkpoints", [max(T // 4, 1), max(T // 2, 1), T])})
    if checkpoints[0] < 1 or checkpoints[-1] > T:
        raise ConfigError("env.checkpoints must lie in 1..T")
    means = A @ theta
    best = means.max()

    def one(r):
        rng = replication_rng(cfg.seed, r)
        return kernels.linear_replication(A, theta, cfg.noise.sample(rng, T), lam, R, S, delta, rarely_switching)

    results = _map_reps(one, cfg.reps, cfg.jobs)
    report = Report(cfg.experiment)
    rows = []
    finals = np.empty(cfg.reps)
    at_checks = np.empty((cfg.reps, len(checkpoints)))
    good = np.zeros(cfg.reps, dtype=bool)
    opt_viol = decomp_viol = decomp2_viol = 0
    rc_viol = stale_viol = 0
    rc_max = 0
    for r, (arms, rewards, cumreg, sb, ldrs, recomp, ucb, width, width_tau, in_ell) in enumerate(results):
        finals[r] = cumreg[-1]
        at_checks[r] = cumreg[np.asarray(checkpoints) - 1]
        inst = best - means[arms]
        good[r] = bool(in_ell.all())
        if good[r]:
            tol = 1e-12 * max(1.0, abs(best))
            if rarely_switching:
                opt_viol += int(np.count_nonzero(ucb[recomp] < best - tol))
            else:
                opt_viol += int(np.count_nonzero(ucb < best - tol))
                decomp_viol += int(np.count_nonzero(inst > sb * width + tol))
                decomp2_viol += int(np.count_nonzero(inst > 2.0 * sb * width + tol))
        rc = int(np.count_nonzero(recomp))
        ldr_final = ldrs[-1] + math.log1p(width[-1] ** 2)
        rc_cap = ldr_final / LOG2 + 1.0
        rc_max = max(rc_max, rc)
        if rarely_switching:
            if rc > rc_cap + 1e-9:
                rc_viol += 1
            last = np.maximum.accumulate(np.where(recomp, np.arange(T), 0))
            ratio = np.exp(ldrs - ldrs[last])
            stale_viol += int(np.count_nonzero(
                (width_tau ** 2 > ratio * width ** 2 * (1 + 1e-9) + 1e-15) | (ratio > 2.0 * (1 + 1e-9))
            ))
        rows.append((r, cumreg[-1], bound, cumreg[-1] > bound, good[r], rc, rc_cap))
        if r < cfg.trace_reps:
            report.traces[f"trace_rep{r:04d}"] = RegretTrace(
                np.arange(1, T + 1), arms, rewards, cumreg, sb, d * math.log(lam) + ldrs, recomp
            ).validate()

    allowed = delta + binomial_slack(delta, cfg.reps)
    exceed = float(np.mean(finals > bound))
    per_step = (at_checks.mean(axis=0) / np.asarray(checkpoints)).tolist()
    sublinear = all(b < a for a, b in zip(per_step, per_step[1:]))
    if exceed > allowed:
        report.failures.append(f"regret exceeded the bound in {exceed:.4f} of runs > {allowed:.4f}")
    if len(checkpoints) > 1 and not sublinear:
        report.failures.append(f"mean regret per step not decreasing across checkpoints: {per_step}")
    if opt_viol:
        report.failures.append(f"{opt_viol} optimism violations on runs where the ellipsoid held")
    if decomp2_viol:
        report.failures.append(f"{decomp2_viol} steps broke r_t <= 2 sqrt(beta_t) ||x_t||")
    if rc_viol:
        report.failures.append(f"{rc_viol} runs recomputed more often than log2(det V_T / lam^d) + 1")
    if stale_viol:
        report.failures.append(f"{stale_viol} steps broke the det-ratio width domination")
    report.summary = {
        "T": T, "reps": cfg.reps, "delta": delta, "R": R, "d": d, "lambda": lam, "S": S, "L": L,
        "n_actions": int(A.shape[0]), "gap": bandit.gap, "seed": cfg.seed,
        "bound": bound, "exceed_fraction": exceed, "allowed_fraction": allowed,
        "mean_final_regret": float(finals.mean()), "max_final_regret": float(finals.max()),
        "checkpoints": checkpoints, "mean_regret_per_step": per_step, "sublinear": sublinear,
        "ellipsoid_good_reps": int(good.sum()),
        "optimism_violations": opt_viol,
        "decomposition_violations": decomp_viol,
        "decomposition_violations_2x": decomp2_viol,
        "max_recompute_count": rc_max,
    }
    if rarely_switching:
        report.summary["recompute_bound_violations"] = rc_viol
        report.summary["stale_width_violations"] = stale_viol
    report.tables["regret_reps"] = (
        ("rep", "final_regret", "bound", "exceeded", "ellipsoid_held", "recompute_count", "recompute_cap"),
        rows,
    )
    return report


# -- tables ------------------------------------------------------------------------


def run_radius_table(cfg):
    env = cfg.env
    d_grid = [int(x) for x in env.get("d_grid", [2, 5, 10, 20])]
    t_grid = [int(x) for x in env.get("t_grid", [100, 10_000, 1_000_000])]
    lam = float(env.get("lambda", 1.0))
    S = float(env.get("S", 1.0))
    L = float(env.get("L", 1.0))
    R = cfg.noise.R
    report = Report("radius_table")
    rows = []
    for delta in cfg.deltas:
        for d in d_grid:
            prev = None
            for t in sorted(t_grid):
                ldr = d * math.log1p(t * L * L / (lam * d))
                sn = math.sqrt(confidence.self_normalized_bound_sq(R, ldr, delta))
                wc = math.sqrt(confidence.worst_case_bound_sq(R, d, t, L, lam, delta))
                kb = confidence.kappa_bound(R, d, t, L, lam, delta) if t >= 2 else math.nan
                ell = confidence.ellipsoid_radius(R, ldr, delta, lam, S)
                dani = confidence.dani_radius(R, d, t, delta) if t >= 2 else math.nan
                row = (delta, d, t, ldr, sn, wc, kb, ell, dani, confidence.dani_valid(t, delta))
                rows.append(row)
                if sn > wc:
                    report.failures.append(f"self-normalized > worst-case at d={d}, t={t}, delta={delta}")
                if t >= 2 and not ell < dani:
                    report.failures.append(f"ellipsoid >= Dani radius at d={d}, t={t}, delta={delta}")
                if prev is not None and any(b < a for a, b in zip(prev[4:9], row[4:9]) if not math.isnan(a)):
                    report.failures.append(f"radius decreased in t at d={d}, t={t}, delta={delta}")
                prev = row
    header = ("delta", "d", "t", "ldr", "self_normalized", "worst_case", "kappa", "ellipsoid", "dani", "dani_valid")
    report.tables["radius_table"] = (header, rows)
    report.summary = {"R": R, "lambda": lam, "S": S, "L": L, "rows": len(rows), "lambda0_equals_lambda": True}
    return report


def run_skipping_table(cfg):
    env = cfg.env
    n_grid = [int(x) for x in env.get("N_grid", [0, 1, 10, 100, 1000])]
    t_grid = sorted(int(x) for x in env.get("t_grid", [1000, 100_000, 10_000_000]))
    if t_grid[0] < 2:
        raise ConfigError("skipping_table needs every t >= 2")
    report = Report("skipping_table")
    rows = []
    for delta in cfg.deltas:
        for N in n_grid:
            prev = None
            for t in t_grid:
                if N > t:
                    continue
                vals = tuple(confidence.skipping_radius(k, N, t, delta) for k in confidence.SKIPPING_KINDS)
                rows.append((delta, N, t, *vals, True))
                if prev is not None:
                    if vals[0] != prev[0]:
                        report.failures.append(f"self-normalized width moved with t at N={N}")
                    if N > 0 and not (vals[1] > prev[1] and vals[2] > prev[2]):
                        report.failures.append(f"t-dependent widths not increasing at N={N}, t={t}")
                prev = vals
    header = ("delta", "N", "t", *confidence.SKIPPING_KINDS, "peeling_one_sided")
    report.tables["skipping_table"] = (header, rows)
    report.summary = {"rows": len(rows)}
    return report


# -- determinant-potential check ------------------------------------------------------


def potential_violations(w, ldr, d, lam, L, slack=1e-10):
    """Names of the potential inequalities broken at any prefix of a sequence."""
    t = np.arange(1, w.shape[0] + 1)
    csum = np.cumsum(w)
    clipped = np.cumsum(np.minimum(w, 1.0))
    cap = 2.0 * (d * np.log((d * lam + t * L * L) / d) - d * math.log(lam))

    def broken(lhs, rhs):
        return bool(np.any(lhs > rhs + slack * np.maximum(1.0, np.abs(rhs))))

    bad = []
    if broken(ldr, csum):
        bad.append("ldr<=sum_w")
    if broken(clipped, 2.0 * ldr):
        bad.append("sum_min_w_1<=2ldr")
    if broken(2.0 * ldr, cap):
        bad.append("2ldr<=trace_cap")
    if lam >= max(1.0, L * L) and broken(csum, 2.0 * ldr):
        bad.append("sum_w<=2ldr")
    return bad


def run_potential_check(cfg):
    env = cfg.env
    d_grid = [int(x) for x in env.get("d_grid", [1, 2, 3, 4, 5])]
    lams = env.get("lambda", [1.0])
    lams = [float(x) for x in (lams if isinstance(lams, list) else [lams])]
    L = float(env.get("L", 1.0))
    stream = env.get("stream", "random")
    if stream not in ("random", "ones", "zeros"):
        raise ConfigError(f"env.stream must be random, ones or zeros, got {stream!r}")
    if any(lam <= 0 for lam in lams) or L <= 0 or min(d_grid) < 1:
        raise ConfigError("potential_check needs positive env.lambda, env.L and dimensions")
    T = cfg.T

    def one(r):
        d = d_grid[r % len(d_grid)]
        lam = lams[(r // len(d_grid)) % len(lams)]
        if stream == "random":
            rng = replication_rng(cfg.seed, r)
            X = _unit_rows(rng, T, d) * (L * rng.uniform(0.0, 1.0, T))[:, None]
        elif stream == "ones":
            X = np.full((T, d), L / math.sqrt(d))
        else:
            X = np.zeros((T, d))
        w, ldr = kernels.potential_sums(X, lam)
        return d, lam, X, potential_violations(w, ldr, d, lam, L), w, ldr

    results = _map_reps(one, cfg.reps, cfg.jobs)
    report = Report("potential_check")
    rows = []
    for r, (d, lam, X, bad, w, ldr) in enumerate(results):
        rows.append((r, d, lam, float(np.minimum(w, 1).sum()), float(w.sum()), float(ldr[-1]), ";".join(bad) or "ok"))
        if bad:
            report.failures.append(f"rep {r} (d={d}, lambda={lam}) broke {', '.join(bad)}")
            report.tables[f"potential_failure_rep{r:04d}"] = (
                tuple(f"x{j}" for j in range(d)), [tuple(row) for row in X]
            )
    report.tables["potential_check"] = (
        ("rep", "d", "lambda", "sum_min_w_1", "sum_w", "ldr", "status"), rows
    )
    report.summary = {
        "T": T, "reps": cfg.reps, "d_grid": d_grid, "lambda": lams, "L": L,
        "stream": stream, "failed_reps": len(report.failures),
    }
    return report


RUNNERS = {
    "coverage": run_coverage,
    "ucb_regret": run_regret,
    "oful_regret": run_regret,
    "rs_oful_regret": run_regret,
    "radius_table": run_radius_table,
    "potential_check": run_potential_check,
    "skipping_table": run_skipping_table,
}


def run(cfg):
    return RUNNERS[cfg.experiment](cfg)
