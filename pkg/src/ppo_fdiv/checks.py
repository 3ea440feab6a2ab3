"""Randomized certification of the analytic identities and inequalities.

Every check is deterministic in ``(seed, trials)`` and returns a
:class:`CheckReport`.  ``worst_slack`` is the smallest ``bound - observed``
seen (negative means a violation before tolerance is applied).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bounds
from .divergence import FORWARD_KL, REVERSE_KL, DivergenceSpec, all_kinds, table1_constants
from .evaluation import (evaluate, evaluate_policy, exact_gradient, performance_difference_rhs,
                         regularized_value, suboptimality_terms)
from .mdp import Mdp, random_mdp, uniform_distribution
from .oracle import general_regularized_vi, optimal_policy, soft_value_iteration, value_iteration
from .policy import PolicyTable, policy_from_params, policy_jacobian, score
from .ppo import ClipConfig, run

LAMBDAS = (0.01, 0.1, 1.0)
IDENTITY_TOL = 1e-9
LINEAR_TOL = 1e-8
ANALYTIC_TOL = 1e-10
FD_STEP = 1e-5
FD_REL_TOL = 1e-6
MAX_DETAILS = 20


@dataclass
class CheckReport:
    check_name: str
    seed: int
    instances_run: int = 0
    worst_slack: float = math.inf
    violations: int = 0
    informational: bool = False
    details: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.informational or self.violations == 0

    def observe(self, slack: float, tol: float = 0.0, context: str = "") -> bool:
        """Record one inequality ``slack >= -tol``; returns whether it held."""
        self.instances_run += 1
        slack = float(slack)
        if not slack >= self.worst_slack:
            self.worst_slack = slack
        ok = slack >= -tol
        if not ok:
            self.violations += 1
            if len(self.details) < MAX_DETAILS:
                self.details.append(f"{context}: slack {slack:.6e}")
        return ok

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        out["worst_slack"] = None if math.isinf(self.worst_slack) else self.worst_slack
        return out

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.informational:
            status += " (informational)"
        return (f"{status} {self.check_name}: {self.instances_run} instances, "
                f"{self.violations} violations, worst slack {self.worst_slack:.3e}")


@dataclass(frozen=True)
class Instance:
    mdp: Mdp
    pi_ref: np.ndarray
    u: np.ndarray
    rho: np.ndarray
    lam: float


def random_instance(rng: np.random.Generator, max_states: int = 5, max_actions: int = 4,
                    gamma_range=(0.8, 0.95)) -> Instance:
    """Random MDP, interior reference policy, explorative ``u`` and arbitrary ``rho``."""
    n_s = int(rng.integers(1, max_states + 1))
    n_a = int(rng.integers(2, max_actions + 1))
    mdp = random_mdp(int(rng.integers(2 ** 31)), n_s, n_a, gamma=float(rng.uniform(*gamma_range)))
    pi_ref = policy_from_params(rng.normal(size=(n_s, n_a))).probs
    u = 0.5 * rng.dirichlet(np.ones(n_s)) + 0.5 / n_s
    rho = rng.dirichlet(np.ones(n_s))
    return Instance(mdp, pi_ref, u, rho, float(rng.choice(LAMBDAS)))


def random_theta(rng, shape) -> np.ndarray:
    return rng.uniform(-3.0, 3.0, size=shape)


# --------------------------------------------------------------------------- score bounds

def check_score_bounds(seed: int = 0, trials: int = 10_000) -> CheckReport:
    """Score norm, Jacobian spectral norm and 3-Lipschitz gradient of the softmax."""
    rng = np.random.default_rng(seed)
    report = CheckReport("score_bounds", seed)
    worst = {"psi": 0.0, "jacobian": 0.0, "lipschitz": 0.0}
    for t in range(trials):
        n_a = int(rng.integers(2, 7))
        theta = random_theta(rng, (1, n_a))
        if t % 10 == 0:
            theta[0, int(rng.integers(n_a))] += 50.0    # near-deterministic row
        other = theta + rng.normal(scale=float(rng.choice([1e-3, 0.1, 1.0, 5.0])), size=theta.shape)
        a = int(rng.integers(n_a))
        psi = np.linalg.norm(score(theta, 0, a))
        h = np.linalg.norm(policy_jacobian(theta, 0), 2)
        grad_pi = policy_jacobian(theta, 0)[a]
        grad_pi_other = policy_jacobian(other, 0)[a]
        lip = np.linalg.norm(grad_pi - grad_pi_other)
        dist = np.linalg.norm(theta - other)
        ctx = f"trial {t}"
        report.observe(math.sqrt(2) - psi, ANALYTIC_TOL, ctx + " ||psi|| <= sqrt2")
        report.observe(1.0 - h, ANALYTIC_TOL, ctx + " ||H|| <= 1")
        report.observe(3 * dist - lip, ANALYTIC_TOL, ctx + " 3-Lipschitz")
        worst["psi"] = max(worst["psi"], float(psi))
        worst["jacobian"] = max(worst["jacobian"], float(h))
        if dist > 0:
            worst["lipschitz"] = max(worst["lipschitz"], float(lip / dist))
    report.metrics = {"max_psi_norm": worst["psi"], "max_jacobian_norm": worst["jacobian"],
                      "max_lipschitz_ratio": worst["lipschitz"]}
    return report


# --------------------------------------------------------------------------- identities

def check_performance_difference(seed: int = 0, trials: int = 100) -> CheckReport:
    """Performance-difference identity on random pairs plus ``W(s) >= 0`` against the oracle."""
    rng = np.random.default_rng(seed)
    report = CheckReport("performance_difference", seed)
    kinds = all_kinds(0.5)
    worst_gap = 0.0
    min_w = math.inf
    for t in range(trials):
        inst = random_instance(rng)
        spec = kinds[t % len(kinds)]
        shape = inst.mdp.reward.shape
        q1 = evaluate(inst.mdp, random_theta(rng, shape), inst.pi_ref, spec, inst.lam, inst.u)
        q2 = evaluate(inst.mdp, random_theta(rng, shape), inst.pi_ref, spec, inst.lam, inst.u)
        lhs = q1.value(inst.rho) - q2.value(inst.rho)
        rhs = performance_difference_rhs(inst.mdp, q1, q2, inst.rho)
        worst_gap = max(worst_gap, abs(lhs - rhs))
        report.observe(IDENTITY_TOL - abs(lhs - rhs), 0.0, f"trial {t} {spec.label} |LHS-RHS|")

        oracle = optimal_policy(inst.mdp, inst.pi_ref, spec, inst.lam)
        star = evaluate_policy(inst.mdp, oracle.pi_star, inst.pi_ref, spec, inst.lam, inst.u)
        w = suboptimality_terms(star, q1)
        min_w = min(min_w, float(w.min()))
        report.observe(float(w.min()), ANALYTIC_TOL, f"trial {t} {spec.label} W(s) >= 0")
        lhs_star = star.value(inst.rho) - q1.value(inst.rho)
        rhs_star = float(q1.occupancy(inst.mdp, inst.rho) @ w) / (1 - inst.mdp.gamma)
        report.observe(IDENTITY_TOL - abs(lhs_star - rhs_star), 0.0,
                       f"trial {t} {spec.label} optimal-form identity")
    report.metrics = {"max_identity_error": worst_gap, "min_w": min_w}
    return report


# --------------------------------------------------------------------------- gradient

def finite_difference_gradient(mdp, theta, pi_ref, spec, lam, u, step: float = FD_STEP):
    grad = np.zeros_like(theta)
    for idx in np.ndindex(theta.shape):
        e = np.zeros_like(theta)
        e[idx] = step
        up = regularized_value(mdp, theta + e, pi_ref, spec, lam, u)
        down = regularized_value(mdp, theta - e, pi_ref, spec, lam, u)
        grad[idx] = (up - down) / (2 * step)
    return grad


def gradient_relative_error(mdp, theta, pi_ref, spec, lam, u) -> float:
    """``max|g_fd - g| / max(1, ||g||_inf)``."""
    g = exact_gradient(evaluate(mdp, theta, pi_ref, spec, lam, u))
    fd = finite_difference_gradient(mdp, theta, pi_ref, spec, lam, u)
    return float(np.max(np.abs(fd - g)) / max(1.0, float(np.max(np.abs(g)))))


def check_gradient(seed: int = 0, trials: int = 100) -> CheckReport:
    """Exact gradient against central finite differences for every divergence kind."""
    rng = np.random.default_rng(seed)
    report = CheckReport("gradient", seed)
    worst = 0.0
    for t in range(trials):
        inst = random_instance(rng)
        theta = random_theta(rng, inst.mdp.reward.shape)
        for spec in all_kinds(float(rng.uniform(0.1, 0.9))):
            err = gradient_relative_error(inst.mdp, theta, inst.pi_ref, spec, inst.lam, inst.u)
            worst = max(worst, err)
            report.observe(FD_REL_TOL - err, 0.0, f"trial {t} {spec.label} lam={inst.lam}")
    report.metrics = {"max_relative_error": worst}
    return report


# --------------------------------------------------------------------------- smoothness

def _second_difference(mdp, theta, v, pi_ref, spec, h=1e-4):
    """Central second difference of ``V_f(s)`` (all states) along ``v``."""
    def v_reg(t):
        return evaluate(mdp, theta + t * v, pi_ref, spec, 1.0, uniform_distribution(mdp.num_states)).v_reg
    return (v_reg(h) - 2 * v_reg(0.0) + v_reg(-h)) / h ** 2


def check_smoothness(seed: int = 0, trials: int = 1000, spec: DivergenceSpec | None = None) -> CheckReport:
    """Taylor remainder against the pair-dependent (and, for KL, closed-form) smoothness factors.

    Also audits the second-order framework bound on ``|D^2 V_f(s)[v, v]|``
    through finite-difference second derivatives along random unit directions.
    """
    spec = spec or REVERSE_KL
    rng = np.random.default_rng(seed)
    report = CheckReport(f"smoothness[{spec.label}]", seed)
    ratios = {"pair_factor": 0.0, "closed_form": 0.0, "unregularized": 0.0, "hessian": 0.0}
    for t in range(trials):
        inst = random_instance(rng)
        mdp, ref, lam = inst.mdp, inst.pi_ref, inst.lam
        shape = mdp.reward.shape
        theta = random_theta(rng, shape)
        delta = rng.normal(size=shape)
        delta *= 10 ** rng.uniform(-3, 0) / np.linalg.norm(delta)
        theta2 = theta + delta
        dist2 = float(np.sum(delta ** 2))
        q = evaluate(mdp, theta, ref, spec, lam, inst.rho)
        remainder = abs(regularized_value(mdp, theta2, ref, spec, lam, inst.rho) - q.value(inst.rho)
                        - float(np.sum(exact_gradient(q) * delta)))
        constants = table1_constants(spec, ref)
        l_f = bounds.smoothness_factor(theta, theta2, spec, lam, constants, mdp, ref)
        ctx = f"trial {t} lam={lam}"
        report.observe(l_f / 2 * dist2 - remainder, LINEAR_TOL, ctx + " L_f")
        ratios["pair_factor"] = max(ratios["pair_factor"], remainder / (l_f / 2 * dist2))
        closed = None
        if spec.kind == "reverse_kl":
            closed = bounds.smoothness_reverse_kl(mdp, ref, lam)
        elif spec.kind == "forward_kl":
            closed = bounds.smoothness_forward_kl(theta, theta2, mdp, lam)
        if closed is not None:
            report.observe(closed / 2 * dist2 - remainder, LINEAR_TOL, ctx + " closed-form L")
            ratios["closed_form"] = max(ratios["closed_form"], remainder / (closed / 2 * dist2))

        if t % 4 == 0:
            q0 = evaluate(mdp, theta, ref, spec, 0.0, inst.rho)
            rem0 = abs(regularized_value(mdp, theta2, ref, spec, 0.0, inst.rho) - q0.value(inst.rho)
                       - float(np.sum(exact_gradient(q0) * delta)))
            l0 = bounds.unregularized_smoothness(mdp)
            report.observe(l0 / 2 * dist2 - rem0, LINEAR_TOL, ctx + " unregularized L")
            ratios["unregularized"] = max(ratios["unregularized"], rem0 / (l0 / 2 * dist2))

            v = rng.normal(size=shape)
            v /= np.linalg.norm(v)
            theta_c = rng.uniform(-2.0, 2.0, size=shape)
            hess = np.max(np.abs(_second_difference(mdp, theta_c, v, ref, spec)))
            bound = bounds.hessian_framework_bound(theta_c, v, spec, mdp, ref)
            report.observe(bound - hess, 1e-6 * max(1.0, bound), ctx + " Hessian framework")
            if bound > 0:
                ratios["hessian"] = max(ratios["hessian"], hess / bound)
    report.metrics = {f"max_ratio_{k}": v for k, v in ratios.items()}
    return report


# --------------------------------------------------------------------------- Lojasiewicz

def check_lojasiewicz(seed: int = 0, trials: int = 1000, spec: DivergenceSpec | None = None,
                      points_per_instance: int = 25) -> CheckReport:
    """Gradient-domination inequality at random points, against oracle optimal policies."""
    spec = spec or REVERSE_KL
    rng = np.random.default_rng(seed)
    report = CheckReport(f"lojasiewicz[{spec.label}]", seed)
    done = 0
    min_ratio = math.inf
    while done < trials:
        inst = random_instance(rng)
        oracle = optimal_policy(inst.mdp, inst.pi_ref, spec, inst.lam)
        constants = table1_constants(spec, inst.pi_ref)
        for j in range(min(points_per_instance, trials - done)):
            if j == 0:
                theta = np.log(np.maximum(oracle.pi_star.probs, 1e-300))
            else:
                theta = random_theta(rng, inst.mdp.reward.shape)
            terms = bounds.lojasiewicz_bound(theta, spec, inst.lam, inst.mdp, inst.pi_ref, inst.u,
                                             oracle.pi_star, inst.rho, constants)
            report.observe(terms.slack, ANALYTIC_TOL, f"point {done} lam={inst.lam}")
            if terms.rhs > 0:
                min_ratio = min(min_ratio, terms.lhs / terms.rhs)
            done += 1
    report.metrics = {"min_lhs_over_rhs": min_ratio}
    return report


# --------------------------------------------------------------------------- oracles

def check_oracles(seed: int = 0, trials: int = 20, tol: float = 1e-10) -> CheckReport:
    """Soft VI vs general VI (reverse KL), small-lambda limit, and optimality dominance."""
    rng = np.random.default_rng(seed)
    report = CheckReport("oracles", seed)
    worst = {"soft_vs_general": 0.0, "small_lambda": 0.0}
    for t in range(trials):
        inst = random_instance(rng)
        mdp, ref = inst.mdp, inst.pi_ref
        soft = soft_value_iteration(mdp, ref, inst.lam, tol)
        general = general_regularized_vi(mdp, ref, REVERSE_KL, inst.lam, tol)
        gap = float(np.max(np.abs(soft.v_star - general.v_star)))
        worst["soft_vs_general"] = max(worst["soft_vs_general"], gap)
        report.observe(10 * tol - gap, 0.0, f"trial {t} soft vs general")
        report.observe(tol - soft.residual, 0.0, f"trial {t} soft residual")

        plain = value_iteration(mdp, tol)
        for spec in all_kinds(0.5):
            tiny = general_regularized_vi(mdp, ref, spec, 1e-6, tol, accelerate=True)
            gap = float(np.max(np.abs(tiny.v_star - plain.v_star)))
            worst["small_lambda"] = max(worst["small_lambda"], gap)
            report.observe(1e-3 - gap, 0.0, f"trial {t} {spec.label} lambda->0")

        spec = all_kinds(0.5)[t % 5]
        star = optimal_policy(mdp, ref, spec, inst.lam, tol)
        v_star = evaluate_policy(mdp, star.pi_star, ref, spec, inst.lam, inst.u).v
        for _ in range(5):
            other = evaluate(mdp, random_theta(rng, mdp.reward.shape), ref, spec, inst.lam, inst.u).v
            report.observe(float(np.min(v_star - other)), 1e-8, f"trial {t} {spec.label} dominance")
    report.metrics = worst
    return report


# --------------------------------------------------------------------------- full runs

def forward_kl_run_instance(seed: int = 0, num_states: int = 3, num_actions: int = 3,
                            gamma: float = 0.9, lam: float = 0.1):
    mdp = random_mdp(seed, num_states, num_actions, gamma=gamma)
    ref = PolicyTable.uniform(num_states, num_actions).probs
    u = uniform_distribution(num_states)
    return mdp, ref, u


def check_forward_kl_run(seed: int = 0, N: int = 500, K: int = 10, lam: float = 0.1,
                         gamma: float = 0.9, step_scale: float = 1.0, eps: float = 0.2,
                         num_states: int = 3, num_actions: int = 3) -> CheckReport:
    """Full forward-KL run audited against the descent, rate and floor guarantees."""
    mdp, ref, u = forward_kl_run_instance(seed, num_states, num_actions, gamma, lam)
    config = ClipConfig(eps_l=eps, eps_h=eps, lam=lam, regularizer="forward_kl", K=K, N=N,
                        step_scale=step_scale)
    oracle = general_regularized_vi(mdp, ref, FORWARD_KL, lam, accelerate=True)
    _, log = run(mdp, ref, u, u, config, oracle=oracle)
    report = CheckReport("descent_and_rates[forward-kl]", seed, informational=config.theory_off)
    budget = log.budget
    values = log.column("value_u", include_final=True)
    deltas = log.column("delta_n", include_final=True)
    grads = log.column("grad_norm")
    steps = log.column("s_max_n")
    c_rate = budget.lojasiewicz_c
    for i, rec in enumerate(log.records):
        n = rec.n
        report.observe(values[i + 1] - values[i], 1e-12, f"n={n} monotone value")
        report.observe((values[i + 1] - values[i]) - steps[i] / 2 * grads[i] ** 2, 1e-12,
                       f"n={n} descent inequality")
        report.observe(math.exp(-c_rate) * deltas[i] - deltas[i + 1], 1e-12, f"n={n} linear rate")
        report.observe(rec.min_inner_policy - 0.5 * budget.c_pi_floor, 0.0, f"n={n} policy floor")
        report.observe(rec.min_inner_ratio - 0.5, 0.0, f"n={n} half-anchor floor")
        report.observe(1e-10 - rec.anchor_error, 0.0, f"n={n} anchor identity")
        report.observe(1.0 - rec.max_error_ratio, 1e-9, f"n={n} inexact gradient")
        report.observe(budget.a_max - rec.max_abs_advantage, 0.0, f"n={n} advantage bound")
    stationary_rhs = 2 * deltas[0] / (N * budget.s_max)
    report.observe(stationary_rhs - float(np.min(grads ** 2)), 0.0, "stationary rate")
    ratios = deltas[1:] / deltas[:-1]
    report.metrics = {
        "s_max": budget.s_max, "c_e": budget.c_e, "a_max": budget.a_max, "c_a": budget.c_a,
        "linear_rate_constant": c_rate, "log_policy_floor": budget.log_c_pi_floor,
        "realized_max_contraction": float(np.max(ratios)),
        "stationary_rhs": stationary_rhs, "min_grad_norm_sq": float(np.min(grads ** 2)),
        "delta_first": float(deltas[0]), "delta_last": float(deltas[-1]),
        "max_anchor_error": float(np.max(log.column("anchor_error"))),
        "min_policy": float(np.min(log.column("min_inner_policy"))),
        "max_abs_advantage": float(np.max(log.column("max_abs_advantage"))),
    }
    return report


def reverse_kl_run_instance(seed: int = 0, num_states: int = 2, num_actions: int = 2,
                            gamma: float = 0.5, lam: float = 1.0, noise: float = 1e-2):
    mdp = random_mdp(seed, num_states, num_actions, gamma=gamma)
    ref = PolicyTable.uniform(num_states, num_actions).probs
    u = uniform_distribution(num_states)
    oracle = soft_value_iteration(mdp, ref, lam, tol=1e-13)
    rng = np.random.default_rng(seed)
    theta0 = oracle.pi_star.log_probs + rng.normal(scale=noise, size=mdp.reward.shape)
    return mdp, ref, u, oracle, theta0


def log_linear_fit(deltas: np.ndarray, floor: float = 1e-12):
    """Least-squares fit of ``log delta_n`` against ``n`` over entries above ``floor``.

    Returns ``(slope, r_squared, points_used)``.
    """
    n = np.arange(deltas.size, dtype=float)
    keep = deltas > floor
    y = np.log(deltas[keep])
    x = n[keep]
    if keep.sum() < 3:
        return math.nan, math.nan, int(keep.sum())
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - float(np.sum(resid ** 2) / np.sum((y - y.mean()) ** 2))
    return float(slope), r2, int(keep.sum())


def check_reverse_kl_run(seed: int = 3, N: int = 60_000, K: int = 10, lam: float = 1.0,
                         gamma: float = 0.5, eps: float = 0.2, num_states: int = 2,
                         num_actions: int = 2, noise: float = 1e-2) -> CheckReport:
    """Near-optimal reverse-KL run: inexact-gradient bound, stationarity and local linear rate."""
    mdp, ref, u, oracle, theta0 = reverse_kl_run_instance(seed, num_states, num_actions, gamma,
                                                          lam, noise)
    config = ClipConfig(eps_l=eps, eps_h=eps, lam=lam, regularizer="reverse_kl", K=K, N=N,
                        grad_tol=1e-6)
    _, log = run(mdp, ref, u, u, config, theta0=theta0, oracle=oracle)
    report = CheckReport("descent_and_rates[reverse-kl]", seed, informational=config.theory_off)
    for rec in log.records:
        report.observe(0.25 - rec.max_relative_error, 0.0, f"n={rec.n} quarter bound")
        report.observe(1e-10 - rec.anchor_error, 0.0, f"n={rec.n} anchor identity")
    grads = log.column("grad_norm", include_final=True)
    report.observe(1e-6 - float(np.min(grads)), 0.0, "grad norm reaches 1e-6")
    deltas = log.column("delta_n", include_final=True)
    slope, r2, used = log_linear_fit(deltas)
    report.observe(r2 - 0.99, 0.0, "log-linear fit R^2")
    final_gap = abs(float(oracle.v_star @ u) - log.final.value_rho)
    report.observe(1e-6 - final_gap, 0.0, "final value vs soft VI")
    rate_c = min(r.lojasiewicz_c for r in log.records) if log.records else math.nan
    report.metrics = {
        "slope": slope, "r_squared": r2, "fit_points": used, "final_gap": final_gap,
        "local_rate_constant": rate_c, "slope_within_rate": bool(slope <= -rate_c),
        "first_n_grad_below_1e-6": int(np.argmax(grads <= 1e-6)) + 1 if np.any(grads <= 1e-6) else None,
        "max_relative_error": float(np.max(log.column("max_relative_error"))),
        "max_anchor_error": float(np.max(log.column("anchor_error"))),
        "min_s_max": float(np.min(log.column("s_max_n"))),
    }
    return report


def check_descent_and_rates(seed: int = 0, step_scale: float = 1.0) -> list[CheckReport]:
    return [check_forward_kl_run(seed, step_scale=step_scale),
            check_reverse_kl_run(seed + 3)]


# --------------------------------------------------------------------------- suites

SUITES = ("score", "pdl", "smooth", "loja", "rates", "grad", "oracle")

DEFAULT_TRIALS = {"score": 10_000, "pdl": 100, "smooth": 1000, "loja": 1000, "grad": 100,
                  "oracle": 20, "rates": 1}


def run_single_suite(name: str, seed: int, trials: int | None = None) -> list[CheckReport]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES} or 'all'")
    n = DEFAULT_TRIALS[name] if trials is None else trials
    if name == "score":
        return [check_score_bounds(seed, n)]
    if name == "pdl":
        return [check_performance_difference(seed, n)]
    if name == "grad":
        return [check_gradient(seed, n)]
    if name == "oracle":
        return [check_oracles(seed, n)]
    if name == "smooth":
        return [check_smoothness(seed + i, n, spec) for i, spec in enumerate(all_kinds(0.5))]
    if name == "loja":
        return [check_lojasiewicz(seed + i, n, spec) for i, spec in enumerate(all_kinds(0.5))]
    return check_descent_and_rates(seed)


def run_suite(name: str = "all", seed: int = 0, trials: int | None = None,
              jobs: int = 1) -> list[CheckReport]:
    """Run one suite or all of them; output order is fixed regardless of ``jobs``."""
    names = SUITES if name == "all" else (name,)
    if jobs > 1 and len(names) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run_single_suite, names, [seed] * len(names),
                                  [trials] * len(names)))
    else:
        parts = [run_single_suite(n, seed, trials) for n in names]
    return [r for part in parts for r in part]


def reports_to_json(reports: list[CheckReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=2)
