import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from selfnorm.envs import NoiseModel
from selfnorm.harness import cli
from selfnorm.harness.config import ConfigError, ExperimentConfig, config_from_mapping, load_config
from selfnorm.harness.experiments import (
    binomial_slack,
    potential_violations,
    run,
)
from selfnorm.harness.traces import RegretTrace, read_trace, write_trace
from selfnorm import kernels


def write_toml(path, text):
    path.write_text(text)
    return path


# -- config ------------------------------------------------------------------------


def test_load_config_flat_keys(tmp_path):
    p = write_toml(tmp_path / "c.toml", """
experiment = "oful_regret"
T = 50
reps = 3
delta = 0.1
seed = 7
noise.kind = "gaussian"
noise.sigma = 0.1
env.d = 2
env.n_actions = 4
""")
    cfg = load_config(p)
    assert cfg.experiment == "oful_regret" and cfg.T == 50 and cfg.reps == 3
    assert cfg.noise.R == 0.1 and cfg.env == {"d": 2, "n_actions": 4}


@pytest.mark.parametrize("raw", [
    {"experiment": "nope"},
    {"T": 5},
    {"experiment": "coverage", "T": 0},
    {"experiment": "coverage", "reps": 0},
    {"experiment": "coverage", "delta": 0.0},
    {"experiment": "coverage", "delta": 1.5},
    {"experiment": "coverage", "bogus": 1},
    {"experiment": "coverage", "env": {"bogus": 1}},
    {"experiment": "coverage", "noise": {"kind": "cauchy"}},
    {"experiment": "coverage", "noise": {"sigma": -1.0}},
    {"experiment": "coverage", "env": {"covariates": "psychic"}},
    {"experiment": "coverage", "T": 2.5},
    {"experiment": "ucb_regret", "delta": [0.05, 0.1], "env": {"means": [0, 1]}},
])
def test_config_errors(raw):
    with pytest.raises(ConfigError):
        config_from_mapping(raw)


def test_malformed_and_missing_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    with pytest.raises(ConfigError):
        load_config(write_toml(tmp_path / "bad.toml", "experiment = \n"))


def test_overrides():
    cfg = config_from_mapping({"experiment": "coverage", "seed": 1})
    cfg2 = cfg.with_overrides(seed=9, reps=4, jobs=2)
    assert (cfg2.seed, cfg2.reps, cfg2.jobs) == (9, 4, 2)
    assert cfg.seed == 1
    with pytest.raises(ConfigError):
        cfg.with_overrides(reps=0)


# -- traces ------------------------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(st.tuples(st.integers(0, 50), finite, st.floats(0, 1e6), finite, finite, st.booleans()), max_size=30))
def test_trace_round_trip(tmp_path_factory, rows):
    n = len(rows)
    cols = list(zip(*rows)) or [()] * 6
    tr = RegretTrace(np.arange(1, n + 1), cols[0], cols[1], np.cumsum(cols[2]), cols[3], cols[4], cols[5])
    path = tmp_path_factory.mktemp("tr") / "trace.csv"
    write_trace(tr, path)
    back = read_trace(path)
    assert back == tr
    path2 = path.with_name("again.csv")
    write_trace(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_trace_validation():
    with pytest.raises(ValueError):
        RegretTrace([1, 3], [0, 0], [0, 0], [0, 1], [0, 0], [0, 0], [0, 0]).validate()
    with pytest.raises(ValueError):
        RegretTrace([1, 2], [0, 0], [0, 0], [1, 0], [0, 0], [0, 0], [0, 0]).validate()
    with pytest.raises(ValueError):
        RegretTrace([1, 2], [0], [0, 0], [0, 1], [0, 0], [0, 0], [0, 0])


# -- coverage --------------------------------------------------------------------------


def test_binomial_envelope_example():
    assert 0.5 + binomial_slack(0.5, 2000) == pytest.approx(0.5335, abs=1e-4)


def test_coverage_half_delta():
    cfg = config_from_mapping({"experiment": "coverage", "T": 500, "reps": 2000, "delta": 0.5, "seed": 3})
    rep = run(cfg)
    row = rep.summary["per_delta"][0]
    assert rep.ok
    assert row["martingale_fraction"] <= 0.5335 and row["ellipsoid_fraction"] <= 0.5335


def test_coverage_delta_one_edge():
    cfg = config_from_mapping({"experiment": "coverage", "T": 50, "reps": 20, "delta": 1.0})
    rep = run(cfg)
    assert rep.summary["per_delta"][0]["delta"] == 1.0
    json.loads(rep.summary_json())


@pytest.mark.parametrize("kind", ["fixed", "round_robin", "random", "adaptive"])
def test_coverage_covariate_kinds(kind):
    cfg = config_from_mapping({
        "experiment": "coverage", "T": 200, "reps": 200, "delta": [0.05, 0.1],
        "env": {"covariates": kind, "d": 3},
    })
    assert run(cfg).ok


def test_coverage_statistic_matches_library():
    # the kernel's reduced statistic crosses 2 log(1/delta) exactly when the
    # self-normalized bound is violated at some t
    from selfnorm.confidence import self_normalized_bound_sq
    from selfnorm.design_matrix import log_det_ratio, new_design

    rng = np.random.default_rng(5)
    T, d = 100, 2
    X = rng.normal(size=(T, d))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    noise = rng.normal(size=T)
    mart, _ = kernels.coverage_replication(kernels.COVARIATE_RANDOM, X, noise, np.array([0.6, 0.8]), 1.0, 1.0, 1.0, 1.0)
    st_ = new_design(d, 1.0, 1.0)
    s = np.zeros(d)
    worst = -np.inf
    for x, e in zip(X, noise):
        st_.update(x)
        s += e * x
        worst = max(worst, s @ st_.V_inv @ s - log_det_ratio(st_))
    assert mart == pytest.approx(worst, rel=1e-9)
    for delta in (0.01, 0.1, 0.5):
        assert (mart > 2 * math.log(1 / delta)) == (worst > self_normalized_bound_sq(1.0, 0.0, delta))


# -- regret ------------------------------------------------------------------------------


def test_noiseless_two_arm_ucb():
    cfg = ExperimentConfig("ucb_regret", T=500, reps=3, noise=NoiseModel.gaussian(1e-12), env={"means": [1.0, 0.0]})
    rep = run(cfg.validate())
    assert rep.summary["max_final_regret"] == 1.0
    assert rep.summary["flat_fraction"] == 1.0
    tr = rep.traces["trace_rep0000"]
    assert tr.cumulative_regret[0] == 0.0 and np.all(tr.cumulative_regret[1:] == 1.0)


def test_oful_two_axis_example():
    cfg = config_from_mapping({
        "experiment": "oful_regret", "T": 1000, "reps": 500, "delta": 0.1,
        "noise": {"sigma": 0.1}, "env": {"actions": [[1, 0], [0, 1]], "theta_star": [0.5, 0.0]},
    })
    rep = run(cfg)
    assert rep.summary["exceed_fraction"] <= 0.1 + binomial_slack(0.1, 500)
    assert rep.summary["optimism_violations"] == 0


def test_rs_oful_recompute_bound():
    cfg = config_from_mapping({
        "experiment": "rs_oful_regret", "T": 2000, "reps": 20, "noise": {"sigma": 0.1},
        "env": {"d": 3, "n_actions": 8},
    })
    rep = run(cfg)
    assert rep.summary["recompute_bound_violations"] == 0
    assert rep.summary["stale_width_violations"] == 0
    header, rows = rep.tables["regret_reps"]
    i, j = header.index("recompute_count"), header.index("recompute_cap")
    assert all(row[i] <= row[j] for row in rows)


def test_regret_traces_are_valid():
    cfg = config_from_mapping({"experiment": "oful_regret", "T": 300, "reps": 4, "trace_reps": 2})
    rep = run(cfg)
    assert sorted(rep.traces) == ["trace_rep0000", "trace_rep0001"]
    for tr in rep.traces.values():
        tr.validate()
        assert tr.recomputed.all()


# -- tables ------------------------------------------------------------------------------


def test_radius_table_default_grid():
    rep = run(config_from_mapping({"experiment": "radius_table"}))
    assert rep.ok
    header, rows = rep.tables["radius_table"]
    assert len(rows) == 12


def test_radius_table_scales_with_R():
    one = run(config_from_mapping({"experiment": "radius_table", "noise": {"sigma": 1.0}}))
    two = run(config_from_mapping({"experiment": "radius_table", "noise": {"sigma": 2.0}}))
    header = one.tables["radius_table"][0]
    for col in ("self_normalized", "worst_case", "kappa"):
        k = header.index(col)
        for a, b in zip(one.tables["radius_table"][1], two.tables["radius_table"][1]):
            assert b[k] == pytest.approx(2 * a[k], rel=1e-12)


def test_skipping_table():
    rep = run(config_from_mapping({"experiment": "skipping_table"}))
    assert rep.ok and rep.summary["rows"] > 0


def test_potential_examples():
    w, ldr = kernels.potential_sums(np.ones((1, 1)), 1.0)
    assert w.sum() == 1.0 and 2 * ldr[-1] == pytest.approx(2 * math.log(2))
    assert potential_violations(w, ldr, 1, 1.0, 1.0) == []
    w, ldr = kernels.potential_sums(np.zeros((10, 3)), 1.0)
    assert not w.any() and not ldr.any()
    for stream in ("ones", "zeros", "random"):
        rep = run(config_from_mapping({
            "experiment": "potential_check", "T": 200, "reps": 30, "env": {"stream": stream, "lambda": [0.5, 1.0, 4.0]},
        }))
        assert rep.ok, rep.failures


def test_potential_violation_is_reported():
    w = np.array([0.5, 0.5])
    ldr = np.array([0.6, 1.2])  # ldr above sum w
    assert "ldr<=sum_w" in potential_violations(w, ldr, 1, 1.0, 1.0)


# -- CLI and determinism -------------------------------------------------------------------


COVERAGE_TOML = """
experiment = "coverage"
T = 100
reps = 40
delta = [0.05, 0.1]
seed = 11
"""


def test_cli_exit_codes(tmp_path, capsys):
    good = write_toml(tmp_path / "good.toml", COVERAGE_TOML)
    assert cli.main([str(good), "--quiet"]) == 0
    assert cli.main([str(good)]) == 0
    assert json.loads(capsys.readouterr().out)["experiment"] == "coverage"
    bad = write_toml(tmp_path / "bad.toml", 'experiment = "coverage"\nwhat = 1\n')
    assert cli.main([str(bad)]) == 1
    assert cli.main([str(tmp_path / "missing.toml")]) == 1
    assert cli.main([str(good), "--reps", "0"]) == 1
    # too short for the regret to go flat: a property failure, not a crash
    failing = write_toml(tmp_path / "ucb.toml", """
experiment = "ucb_regret"
T = 100
reps = 20
env.means = [0.5, 0.0]
""")
    assert cli.main([str(failing), "--quiet"]) == 2


def _tree(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


@pytest.mark.parametrize("body", [
    COVERAGE_TOML,
    'experiment = "rs_oful_regret"\nT = 300\nreps = 6\ntrace_reps = 2\nnoise.sigma = 0.1\n',
    'experiment = "ucb_regret"\nT = 300\nreps = 6\nenv.means = [0.5, 0.0, 0.2]\n',
    'experiment = "potential_check"\nT = 50\nreps = 10\n',
])
def test_same_seed_byte_identical(tmp_path, body):
    cfg = write_toml(tmp_path / "c.toml", body)
    outs = []
    for name, jobs in (("a", 1), ("b", 1), ("c", 3)):
        assert cli.main([str(cfg), "--quiet", "--out", str(tmp_path / name), "--jobs", str(jobs)]) in (0, 2)
        outs.append(_tree(tmp_path / name))
    assert outs[0] == outs[1] == outs[2]
    assert cli.main([str(cfg), "--quiet", "--out", str(tmp_path / "d"), "--seed", "99"]) in (0, 2)
    assert _tree(tmp_path / "d") != outs[0]


def test_written_trace_reads_back(tmp_path):
    cfg = write_toml(tmp_path / "c.toml", 'experiment = "oful_regret"\nT = 200\nreps = 2\n')
    assert cli.main([str(cfg), "--quiet", "--out", str(tmp_path / "o")]) == 0
    tr = read_trace(tmp_path / "o" / "trace_rep0000.csv")
    assert len(tr) == 200
    tr.validate()


def test_shipped_configs_parse():
    from pathlib import Path

    paths = sorted((Path(__file__).resolve().parent.parent / "configs").glob("*.toml"))
    assert len(paths) >= 7
    for p in paths:
        load_config(p)
