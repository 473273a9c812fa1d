from __future__ import annotations

import json
import math
import threading
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splice_lab.harness import experiments
from splice_lab.harness.cli import main
from splice_lab.harness.config import (ConfigError, ExperimentConfig, parse_config_text,
                                       validate)
from splice_lab.harness.experiments import Check, Outcome, run_experiment
from splice_lab.harness.fitting import fit_decay
from splice_lab.harness.report import read_results_csv
from splice_lab.harness.testmaps import TestMapSpec, generate_test_pair, map_grids, pair_seeds
from splice_lab.norms import WeightedNormParams, pair_norm
from splice_lab.parallel import ENV_VAR, thread_count, thread_map

# ---------------------------------------------------------------- config


def test_defaults_validate_and_snap():
    cfg = validate(ExperimentConfig())
    assert cfg.R_list == (36.0, 49.0, 64.0, 81.0, 100.0)
    h_s = 2 * math.pi / cfg.ns
    for th in cfg.theta_list:
        assert abs(th / h_s - round(th / h_s)) < 1e-12


def test_parse_aliases_pi_and_modes():
    cfg = parse_config_text("""
        # comment line
        experiment = decay
        grid.h_t = 0.5
        r_list = 36, 49, 64, 81
        theta_list = 0, 0.25pi   # trailing comment
        modes = 1:1.0, -2:0.25
        j = standard
    """)
    assert cfg.experiment == "decay" and cfg.h_t == 0.5 and cfg.J == "standard"
    assert cfg.R_list == (36.0, 49.0, 64.0, 81.0)
    assert cfg.theta_list[1] == pytest.approx(0.25 * math.pi)
    assert cfg.modes == ((1, 1.0), (-2, 0.25))


def test_R_is_snapped_to_lattice():
    cfg = parse_config_text("R_list = 36.1, 49\nh_t = 0.25")
    assert cfg.R_list[0] % 0.25 == 0.0
    assert cfg.snapped["36.1"] == cfg.R_list[0]


@pytest.mark.parametrize("text", [
    "nonsense_key = 1",
    "no equals sign",
    "k = three",
    "experiment = everything",
    "variant = other",
    "J = almost",
    "epsilon = 0.7",
    "ns = 15",
    "h_t = -1",
    "k = 1",
    "delta_prime = 0.4",
    "R_list = 10",
    "R_list = 100\nvariant = paper",
    "R_list = ,",
])
def test_bad_config_raises(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_cli_bad_config_exit_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("unknown_thing = 3\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_cli_bad_threads_exit_2(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_VAR, "lots")
    assert main(["run", "--experiment", "determinant", "--out", str(tmp_path)]) == 2
    monkeypatch.delenv(ENV_VAR)
    assert main(["run", "--experiment", "determinant", "--threads", "0",
                 "--out", str(tmp_path)]) == 2


def test_cli_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out


# ---------------------------------------------------------------- fitting


def test_fit_exact_exponential():
    R = [36, 49, 64, 81, 100]
    slope, _, resid = fit_decay([(r, math.exp(-r / 2)) for r in R])
    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert resid < 1e-10


def test_fit_constant_has_zero_slope():
    slope, _, _ = fit_decay([(r, 3.0) for r in (1, 2, 3, 4)])
    assert abs(slope) < 1e-12


def test_fit_with_tiny_noise():
    # Absolute noise of 1e-15 is only negligible while the series stays well above it.
    rng = np.random.default_rng(0)
    pts = [(r, 3 * math.exp(-0.25 * r) + 1e-15 * rng.random()) for r in range(1, 11)]
    assert fit_decay(pts)[0] == pytest.approx(-0.25, abs=1e-10)


@pytest.mark.parametrize("pts", [
    [(1, 1.0), (2, 0.5), (3, 0.25)],
    [(1, 1.0), (2, 0.0), (3, 0.25), (4, 0.1)],
    [(1, 1.0), (2, -1.0), (3, 0.25), (4, 0.1)],
    [(1, 1.0), (2, math.nan), (3, 0.25), (4, 0.1)],
])
def test_fit_rejects_bad_input(pts):
    with pytest.raises(ValueError):
        fit_decay(pts)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-5.0, 5.0))
def test_fit_recovers_any_line(rate, log_c):
    pts = [(r, math.exp(log_c + rate * r)) for r in (1.0, 2.5, 4.0, 7.0)]
    assert fit_decay(pts)[0] == pytest.approx(rate, abs=1e-9)


# ---------------------------------------------------------------- generator


@pytest.fixture(scope="module")
def gen_grids():
    return map_grids(36.0, 0.5, 16)


def test_generator_is_deterministic(gen_grids):
    a = generate_test_pair(TestMapSpec(), gen_grids, 4)
    b = generate_test_pair(TestMapSpec(), gen_grids, 4)
    c = generate_test_pair(TestMapSpec(), gen_grids, 5)
    assert np.array_equal(a.u_plus.values, b.u_plus.values)
    assert not np.array_equal(a.u_plus.values, c.u_plus.values)


@pytest.mark.parametrize("envelope", ["exp", "exp_poly"])
def test_generator_normalized(gen_grids, envelope):
    pair = generate_test_pair(TestMapSpec(envelope=envelope), gen_grids, 2)
    assert pair_norm(*pair, WeightedNormParams()) == pytest.approx(1.0, abs=1e-9)


def test_generator_envelope_bound(gen_grids):
    spec = TestMapSpec()
    pair = generate_test_pair(spec, gen_grids, 3)
    for u, amps in ((pair.u_minus, pair.amplitudes_minus), (pair.u_plus, pair.amplitudes_plus)):
        bound = np.exp(-spec.delta_prime * np.abs(u.grid.t)) * np.abs(amps).sum()
        size = np.sqrt((u.values ** 2).sum(axis=-1)).max(axis=1)
        assert np.all(size <= bound * (1 + 1e-12))


def test_generator_rejects_bad_specs(gen_grids):
    with pytest.raises(ValueError):
        generate_test_pair(TestMapSpec(delta_prime=0.5), gen_grids, 0)
    with pytest.raises(ValueError):
        TestMapSpec(modes=())
    with pytest.raises(ValueError):
        TestMapSpec(envelope="gauss")


def test_pair_seeds_stable():
    assert pair_seeds(1, 3) == pair_seeds(1, 3)
    assert len(set(pair_seeds(1, 50))) == 50


# ---------------------------------------------------------------- threads


def test_thread_map_preserves_order():
    def slow(x):
        time.sleep(0.01 * (5 - x))
        return x * x
    assert thread_map(slow, range(5), threads=4) == [0, 1, 4, 9, 16]


def test_thread_map_uses_workers():
    seen = set()

    def who(_):
        seen.add(threading.get_ident())
        time.sleep(0.02)
    thread_map(who, range(8), threads=4)
    assert len(seen) > 1


def test_thread_count_env(monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)
    assert thread_count() == 1
    monkeypatch.setenv(ENV_VAR, "3")
    assert thread_count() == 3
    assert thread_count(2) == 2
    for bad in ("0", "-2", "x"):
        monkeypatch.setenv(ENV_VAR, bad)
        with pytest.raises(ValueError):
            thread_count()


# ---------------------------------------------------------------- run_experiment


SMALL = "R_list = 36, 49, 64, 81\nh_t = 0.5\nns = 16\nn_pairs = 2\n"


def test_run_writes_outputs_and_is_reproducible(tmp_path):
    cfg = parse_config_text(SMALL + "experiment = commutativity\n")
    code1, summary = run_experiment(cfg, tmp_path / "a", plots=True)
    code2, _ = run_experiment(cfg, tmp_path / "b")
    assert code1 == code2 == 0
    first = (tmp_path / "a" / "results.csv").read_bytes()
    assert first == (tmp_path / "b" / "results.csv").read_bytes()
    assert read_results_csv(tmp_path / "a" / "results.csv")
    loaded = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert loaded["passed"] is True and "commutativity" in loaded["experiments"]
    assert summary["experiments"]["commutativity"]["checks"]


def test_failed_invariant_gives_exit_1(tmp_path, monkeypatch):
    def broken(cfg, threads=None):
        out = Outcome("determinant")
        out.checks.append(Check("forced", 1, False, 1.0, 0.0, "forced failure"))
        return out
    monkeypatch.setitem(experiments.RUNNERS, "determinant", broken)
    code, summary = run_experiment(validate(ExperimentConfig(experiment="determinant")),
                                   tmp_path)
    assert code == 1 and summary["passed"] is False
    assert main(["run", "--experiment", "determinant", "--out", str(tmp_path)]) == 1


def test_runner_exceptions_become_failed_checks(tmp_path, monkeypatch):
    def explode(cfg, threads=None):
        raise FloatingPointError("overflow")
    monkeypatch.setitem(experiments.RUNNERS, "determinant", explode)
    code, summary = run_experiment(validate(ExperimentConfig(experiment="determinant")),
                                   tmp_path)
    assert code == 1
    checks = summary["experiments"]["determinant"]["checks"]
    assert checks and not checks[0]["passed"]
