"""Experiment configuration.

Configs are TOML files restricted to flat, dotted keys::

    experiment = "oful_regret"
    T = 5000
    reps = 200
    delta = 0.1
    seed = 7
    noise.kind = "gaussian"
    noise.sigma = 0.1
    env.d = 2
    env.n_actions = 10

Unknown keys are rejected. Per-experiment ``env.*`` keys are listed in
``ENV_KEYS``.
"""
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..envs import NoiseModel

EXPERIMENTS = (
    "coverage",
    "ucb_regret",
    "oful_regret",
    "rs_oful_regret",
    "radius_table",
    "potential_check",
    "skipping_table",
)
REGRET_EXPERIMENTS = ("ucb_regret", "oful_regret", "rs_oful_regret")

TOP_KEYS = {"experiment", "T", "reps", "delta", "seed", "out", "jobs", "trace_reps"}
NOISE_KEYS = {"kind", "sigma", "a", "b"}
_LINEAR = {"d", "n_actions", "actions", "theta_star", "theta_norm", "lambda", "S", "L", "seed", "checkpoints"}
ENV_KEYS = {
    "coverage": {"d", "lambda", "L", "S", "covariates", "theta_star", "x", "seed"},
    "ucb_regret": {"means"},
    "oful_regret": _LINEAR,
    "rs_oful_regret": _LINEAR,
    "radius_table": {"d_grid", "t_grid", "lambda", "S", "L"},
    "potential_check": {"d_grid", "lambda", "L", "stream"},
    "skipping_table": {"N_grid", "t_grid"},
}
COVARIATE_KINDS = ("fixed", "round_robin", "random", "adaptive")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    T: int = 1
    reps: int = 1
    deltas: tuple = (0.1,)
    seed: int = 0
    noise: NoiseModel = field(default_factory=lambda: NoiseModel.gaussian(1.0))
    env: dict = field(default_factory=dict)
    out: Path = None
    jobs: int = 1
    trace_reps: int = 1

    @property
    def delta(self):
        return self.deltas[0]

    def with_overrides(self, seed=None, out=None, reps=None, jobs=None):
        cfg = replace(self, env=dict(self.env))
        if seed is not None:
            cfg.seed = int(seed)
        if out is not None:
            cfg.out = Path(out)
        if reps is not None:
            cfg.reps = int(reps)
        if jobs is not None:
            cfg.jobs = int(jobs)
        cfg.validate()
        return cfg

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if not self.deltas:
            raise ConfigError("delta must not be empty")
        for dl in self.deltas:
            # delta = 1 is accepted as the analytic edge
            if not 0.0 < dl <= 1.0:
                raise ConfigError(f"delta must lie in (0, 1], got {dl}")
        if self.experiment in REGRET_EXPERIMENTS and len(self.deltas) != 1:
            raise ConfigError(f"{self.experiment} takes a single delta")
        unknown = set(self.env) - ENV_KEYS[self.experiment]
        if unknown:
            raise ConfigError(f"unknown env keys for {self.experiment}: {sorted(unknown)}")
        cov = self.env.get("covariates", "adaptive")
        if self.experiment == "coverage" and cov not in COVARIATE_KINDS:
            raise ConfigError(f"env.covariates must be one of {COVARIATE_KINDS}, got {cov!r}")
        return self


def _flatten(table, prefix=""):
    flat = {}
    for k, v in table.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def _int(flat, key, default):
    v = flat.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return int(v)


def config_from_mapping(raw):
    flat = _flatten(raw)
    groups = {"noise": {}, "env": {}}
    top = {}
    for key, value in flat.items():
        head, _, rest = key.partition(".")
        if rest and head in groups:
            if "." in rest:
                raise ConfigError(f"key {key!r} nests too deep")
            groups[head][rest] = value
        elif not rest and key in TOP_KEYS:
            top[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    unknown_noise = set(groups["noise"]) - NOISE_KEYS
    if unknown_noise:
        raise ConfigError(f"unknown noise keys: {sorted(unknown_noise)}")
    if "experiment" not in top:
        raise ConfigError("missing required key 'experiment'")

    nz = groups["noise"]
    try:
        kind = nz.get("kind", "gaussian")
        if kind == "gaussian":
            noise = NoiseModel.gaussian(nz.get("sigma", 1.0))
        elif kind == "bounded_uniform":
            noise = NoiseModel.bounded_uniform(nz.get("a", -1.0), nz.get("b", 1.0))
        else:
            raise ConfigError(f"unknown noise.kind {kind!r}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    delta = top.get("delta", 0.1)
    deltas = tuple(float(x) for x in (delta if isinstance(delta, list) else [delta]))
    if any(math.isnan(x) for x in deltas):
        raise ConfigError("delta must be a number")

    cfg = ExperimentConfig(
        experiment=str(top["experiment"]),
        T=_int(top, "T", 1),
        reps=_int(top, "reps", 1),
        deltas=deltas,
        seed=_int(top, "seed", 0),
        noise=noise,
        env=groups["env"],
        out=Path(top["out"]) if "out" in top else None,
        jobs=_int(top, "jobs", 1),
        trace_reps=_int(top, "trace_reps", 1),
    )
    return cfg.validate()


def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return config_from_mapping(raw)
