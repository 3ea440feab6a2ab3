"""End-to-end acceptance criteria, each at its stated tolerance and runtime limit."""
import time

import numpy as np
import pytest

from ppo_fdiv import checks
from ppo_fdiv.divergence import all_kinds

from conftest import ACCEPTANCE_LINES


def record(name, ok, elapsed, limit, detail=""):
    within = limit is None or elapsed <= limit
    status = "PASS" if ok and within else "FAIL"
    budget = "" if limit is None else f" (limit {limit:.0f}s)"
    line = f"{status} {name}: {elapsed:.1f}s{budget} {detail}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok and within


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def describe(reports):
    return "; ".join(f"{r.check_name} {r.instances_run} obs, {r.violations} violations"
                     for r in reports)


def test_gradient_correctness():
    reports, elapsed = timed(lambda: checks.run_single_suite("grad", 0))
    report = reports[0]
    ok = report.passed and report.instances_run == 100 * 5
    assert record("gradient correctness", ok, elapsed, 60,
                  f"max rel err {report.metrics['max_relative_error']:.2e}"), report.details


def test_identity_suite():
    reports, elapsed = timed(lambda: checks.run_single_suite("pdl", 0))
    report = reports[0]
    ok = report.passed and report.instances_run == 100 * 3
    assert record("identity suite", ok, elapsed, 30,
                  f"max |LHS-RHS| {report.metrics['max_identity_error']:.2e}, "
                  f"min W {report.metrics['min_w']:.2e}"), report.details


def test_inequality_suite():
    def go():
        return (checks.run_single_suite("score", 0) + checks.run_single_suite("smooth", 0)
                + checks.run_single_suite("loja", 0))
    reports, elapsed = timed(go)
    ok = all(r.passed and not r.informational for r in reports)
    score, smooth, loja = reports[0], reports[1:6], reports[6:]
    ok &= score.instances_run == 3 * 10_000
    ok &= all(r.metrics["max_ratio_pair_factor"] <= 1 for r in smooth)
    ok &= len(loja) == len(all_kinds()) and all(r.instances_run == 1000 for r in loja)
    assert record("inequality suite", ok, elapsed, 180, describe(reports)), \
        [d for r in reports for d in r.details]


@pytest.fixture(scope="module")
def forward_run():
    return timed(lambda: checks.check_forward_kl_run(seed=0, N=500))


@pytest.fixture(scope="module")
def reverse_run():
    return timed(lambda: checks.check_reverse_kl_run(seed=3))


def test_forward_kl_convergence(forward_run):
    report, elapsed = forward_run
    m = report.metrics
    ok = report.passed and not report.informational
    assert record("forward-KL convergence", ok, elapsed, 60,
                  f"S_max {m['s_max']:.2e}, C {m['linear_rate_constant']:.2e}, "
                  f"max contraction {m['realized_max_contraction']:.6f}, "
                  f"min|grad|^2 {m['min_grad_norm_sq']:.2e} <= {m['stationary_rhs']:.2e}"), report.details


def test_reverse_kl_convergence(reverse_run):
    report, elapsed = reverse_run
    m = report.metrics
    ok = report.passed and not report.informational
    assert record("reverse-KL convergence", ok, elapsed, 120,
                  f"R^2 {m['r_squared']:.5f}, final gap {m['final_gap']:.2e}, "
                  f"max err/|grad| {m['max_relative_error']:.3f}"), report.details


def test_oracle_cross_validation():
    reports, elapsed = timed(lambda: checks.run_single_suite("oracle", 0))
    report = reports[0]
    assert record("oracle cross-validation", report.passed, elapsed, 30,
                  f"soft vs general {report.metrics['soft_vs_general']:.2e}, "
                  f"lambda=1e-6 gap {report.metrics['small_lambda']:.2e}"), report.details


def test_anchor_identity(forward_run, reverse_run):
    worst = max(forward_run[0].metrics["max_anchor_error"], reverse_run[0].metrics["max_anchor_error"])
    fails = [d for r in (forward_run[0], reverse_run[0]) for d in r.details if "anchor" in d]
    ok = worst <= 1e-10 and not fails
    assert record("anchor identity", ok, forward_run[1] + reverse_run[1], None,
                  f"max |g_n1 - grad| {worst:.2e}"), fails
