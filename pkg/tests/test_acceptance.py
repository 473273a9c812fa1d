"""Exit criteria, run on the default configuration at their stated tolerances.

Each test prints one PASS/FAIL line (collected into the terminal summary) and
asserts every check the harness attaches to that criterion, plus the runtime
budget where one is stated.
"""

from __future__ import annotations

import pytest

from conftest import record_acceptance
from splice_lab.harness.config import ExperimentConfig, validate
from splice_lab.harness.experiments import Outcome, run_one

pytestmark = pytest.mark.acceptance

CRITERIA = {
    1: ("determinant", "determinant bound and region pattern", 1.0),
    2: ("roundtrip", "gluing roundtrip", 30.0),
    3: ("regions", "region-formula equivalence", 300.0),
    4: ("regions", "error localization", 300.0),
    5: ("decay", "decay of the error term", 600.0),
    6: ("derivative_check", "D_W N against finite differences", 600.0),
    7: ("estimates", "window estimates and composite bounds", 600.0),
    8: ("estimates", "operator-norm bound on rho D_W E", None),
    9: ("c1_limit", "C1 at infinity", None),
    10: ("commutativity", "commutator guard", None),
    11: ("smoke", "paper-variant smoke run", 120.0),
}

_CACHE: dict[str, Outcome] = {}


@pytest.fixture(scope="module")
def config():
    return validate(ExperimentConfig())


def _outcome(name: str, cfg) -> Outcome:
    if name not in _CACHE:
        _CACHE[name] = run_one(name, cfg)
    return _CACHE[name]


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_criterion(criterion, config):
    experiment, label, budget = CRITERIA[criterion]
    out = _outcome(experiment, config)
    checks = [c for c in out.checks if c.criterion in (criterion, 0)]
    failed = [c for c in checks if not c.passed]
    # The experiment's runtime covers every criterion it feeds, so this is conservative.
    over = budget is not None and out.runtime > budget
    ok = bool(checks) and not failed and not over
    worst = "; ".join(f"{c.name}={c.measured:.4g} (limit {c.threshold:.4g})" for c in checks)
    line = (f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {label} "
            f"[{experiment}, {out.runtime:.1f} s] {worst}")
    record_acceptance(line)
    print(line)
    assert checks, f"no checks reported for criterion {criterion}"
    assert not failed, "; ".join(f"{c.name}: {c.detail}" for c in failed)
    assert not over, f"runtime {out.runtime:.1f} s exceeds {budget} s"
