import json
import math

import numpy as np
import pytest

from ppo_fdiv import checks
from ppo_fdiv.checks import CheckReport, log_linear_fit, random_instance
from ppo_fdiv.divergence import CHI2, JS


def test_report_bookkeeping():
    r = CheckReport("demo", 0)
    assert r.observe(0.5) and r.observe(-1e-13, 1e-12)
    assert not r.observe(-1.0, 0.0, "bad")
    assert r.instances_run == 3 and r.violations == 1 and not r.passed
    assert r.worst_slack == -1.0 and r.details == ["bad: slack -1.000000e+00"]
    assert json.loads(json.dumps(r.to_dict()))["passed"] is False
    assert r.summary().startswith("FAIL demo")
    info = CheckReport("info", 0, informational=True)
    info.observe(-5.0)
    assert info.passed and "(informational)" in info.summary()
    assert CheckReport("empty", 0).to_dict()["worst_slack"] is None


def test_random_instance_ranges():
    rng = np.random.default_rng(0)
    for _ in range(200):
        inst = random_instance(rng)
        s, a = inst.pi_ref.shape
        assert 1 <= s <= 5 and 2 <= a <= 4
        assert 0.8 <= inst.mdp.gamma <= 0.95
        assert inst.lam in checks.LAMBDAS
        assert inst.u.min() > 0 and inst.u.sum() == pytest.approx(1.0)


def test_log_linear_fit_exact():
    deltas = 3.0 * np.exp(-0.1 * np.arange(50))
    slope, r2, used = log_linear_fit(deltas)
    assert slope == pytest.approx(-0.1) and r2 == pytest.approx(1.0) and used == 50
    assert math.isnan(log_linear_fit(np.array([1.0, 0.0, 0.0]))[0])


@pytest.mark.parametrize("name,trials", [("score", 300), ("pdl", 10), ("grad", 5), ("oracle", 2)])
def test_small_suites_pass(name, trials):
    reports = checks.run_single_suite(name, 7, trials)
    assert reports and all(r.passed for r in reports)
    assert all(r.instances_run > 0 for r in reports)


def test_smoothness_and_lojasiewicz_small():
    for spec in (JS, CHI2):
        assert checks.check_smoothness(1, 8, spec).passed
        assert checks.check_lojasiewicz(1, 10, spec).passed


def test_suite_output_is_deterministic():
    a = checks.reports_to_json(checks.run_suite("pdl", 3, 5))
    b = checks.reports_to_json(checks.run_suite("pdl", 3, 5))
    assert a == b
    assert json.loads(a)[0]["check_name"]


def test_unknown_suite():
    with pytest.raises(ValueError):
        checks.run_single_suite("bogus", 0)


def test_forward_kl_short_run_passes():
    report = checks.check_forward_kl_run(N=40)
    assert report.passed
    assert report.metrics["max_anchor_error"] <= 1e-10


def test_step_scale_ablation_is_informational():
    report = checks.check_forward_kl_run(N=20, step_scale=50.0)
    assert report.informational and report.passed
