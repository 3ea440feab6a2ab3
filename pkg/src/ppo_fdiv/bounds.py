"""Smoothness factors, Lojasiewicz terms and PPO-Clip step budgets."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .divergence import (FORWARD_KL, DivergenceConstants, DivergenceSpec, divergence_value, f_eval,
                         f_prime, f_value)
from .evaluation import evaluate, evaluate_policy, exact_gradient
from .mdp import Mdp, discounted_state_distribution
from .policy import PolicyTable, policy_from_params


def _ref_probs(pi_ref):
    return pi_ref.probs if isinstance(pi_ref, PolicyTable) else np.asarray(pi_ref, dtype=float)


def clip_factor(eps_l: float, eps_h: float) -> float:
    """``1/log(1+eps_h) - 1/log(1-eps_l)``: bounds the clipped indicator by ``|log r|``."""
    return 1.0 / math.log1p(eps_h) - 1.0 / math.log1p(-eps_l)


# --------------------------------------------------------------------------- smoothness

def segment_sup_f(theta, theta_prime, spec: DivergenceSpec, pi_ref, grid: int = 33) -> float:
    """Max of ``||f(pi/pi_ref)||_inf`` over a uniform grid on the segment (endpoints included)."""
    ref = _ref_probs(pi_ref)
    theta = np.asarray(theta, float)
    step = np.asarray(theta_prime, float) - theta
    best = 0.0
    for t in np.linspace(0.0, 1.0, grid):
        probs = policy_from_params(theta + t * step).probs
        best = max(best, float(np.max(np.abs(f_value(spec, probs / ref)))))
    return best


def smoothness_factor(theta, theta_prime, spec: DivergenceSpec, lam: float,
                      constants: DivergenceConstants, mdp: Mdp, pi_ref, grid: int = 33) -> float:
    """Pair-dependent smoothness coefficient ``L_f(theta, theta')``.

    ``8/(1-g)^3 (r_max + lam sup ||f(w)||_inf + lam (1-g)(c_f1 + c_f2/2))`` with the
    segment supremum approximated on ``grid`` points.
    """
    g = mdp.gamma
    sup_f = segment_sup_f(theta, theta_prime, spec, pi_ref, grid) if lam else 0.0
    inner = mdp.r_max + lam * sup_f + lam * (1 - g) * (constants.c_f1 + constants.c_f2 / 2)
    return 8.0 * inner / (1 - g) ** 3


def smoothness_forward_kl(theta, theta_prime, mdp: Mdp, lam: float) -> float:
    """``8 (r_max + lam max(||log pi||_inf, ||log pi'||_inf)) / (1-g)^3``."""
    worst = max(float(np.max(np.abs(policy_from_params(t).log_probs))) for t in (theta, theta_prime))
    return 8.0 * (mdp.r_max + lam * worst) / (1 - mdp.gamma) ** 3


def smoothness_reverse_kl(mdp: Mdp, pi_ref, lam: float) -> float:
    """Uniform constant ``8 r_max/(1-g)^3 + lam/(1-g)^2 (2 log|A| + 4 ||log pi_ref||_inf + 2)``."""
    g = mdp.gamma
    log_ref = float(np.max(np.abs(np.log(_ref_probs(pi_ref)))))
    return (8.0 * mdp.r_max / (1 - g) ** 3
            + lam / (1 - g) ** 2 * (2 * math.log(mdp.num_actions) + 4 * log_ref + 2))


def unregularized_smoothness(mdp: Mdp) -> float:
    return 8.0 * mdp.r_max / (1 - mdp.gamma) ** 3


def policy_directional_derivatives(probs, v):
    """First and second directional derivatives of the softmax table along logits ``v``.

    ``D pi_a[v] = pi_a (v_a - <pi, v>)`` and
    ``D^2 pi_a[v, v] = pi_a ((v_a - <pi, v>)^2 - Var_pi(v))`` per state.
    """
    centered = v - np.sum(probs * v, axis=1, keepdims=True)
    var = np.sum(probs * centered ** 2, axis=1, keepdims=True)
    return probs * centered, probs * (centered ** 2 - var)


def divergence_directional_derivatives(spec: DivergenceSpec, probs, ref, v):
    """``(D_f, D D_f[v], D^2 D_f[v, v])`` per state for the softmax table ``probs``."""
    d1, d2 = policy_directional_derivatives(probs, v)
    _, fp, fpp = f_eval(spec, probs / ref)
    first = np.sum(fp * d1, axis=1)
    second = np.sum(fpp / ref * d1 ** 2 + fp * d2, axis=1)
    return divergence_value(spec, probs, ref), first, second


def hessian_framework_bound(theta, v, spec: DivergenceSpec, mdp: Mdp, pi_ref) -> float:
    """Upper bound on ``|D^2 V_f(s)[v, v]|`` valid for every state ``s``."""
    g = mdp.gamma
    ref = _ref_probs(pi_ref)
    div, first, second = divergence_directional_derivatives(spec, policy_from_params(theta).probs,
                                                            ref, v)
    norm_v = float(np.linalg.norm(v))
    return (4 * g * norm_v / (1 - g) ** 2 * float(np.max(np.abs(first)))
            + 8 * g * norm_v ** 2 / (1 - g) ** 3 * float(np.max(np.abs(div)))
            + float(np.max(np.abs(second))) / (1 - g))


# --------------------------------------------------------------------------- Lojasiewicz

@dataclass(frozen=True)
class LojasiewiczTerms:
    lhs: float              # ||grad V~(u)||^2
    rhs: float
    gap: float              # V~*(rho) - V~(rho)
    min_policy: float
    occupancy_ratio: float  # ||d*_rho / d_u||_inf
    z: np.ndarray           # projected per-state vectors

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs


def projected_vectors(quantities) -> np.ndarray:
    """``Z(s) = (I - 11^T/|A|)(Q~(s,.) - lam f'(pi(s)/pi_ref(s)))``."""
    q = quantities
    fp = f_prime(q.spec, q.ratio) if q.lam else 0.0
    y = q.q_tilde - q.lam * fp
    return y - y.mean(axis=1, keepdims=True)


def lojasiewicz_bound(theta, spec: DivergenceSpec, lam: float, mdp: Mdp, pi_ref, u,
                      pi_star: PolicyTable, rho, constants: DivergenceConstants) -> LojasiewiczTerms:
    """Both sides of ``||grad||^2 >= 2 lam c_u c_m (min pi)^2 ||d*_rho/d_u||^-1 (V~*(rho) - V~(rho))``."""
    u = np.asarray(u, float)
    q = evaluate(mdp, theta, pi_ref, spec, lam, u)
    star = evaluate_policy(mdp, pi_star, pi_ref, spec, lam, u)
    grad = exact_gradient(q)
    d_star_rho = discounted_state_distribution(mdp, pi_star.probs, rho)
    ratio = float(np.max(d_star_rho / q.d_u))
    gap = star.value(rho) - q.value(rho)
    min_pi = float(np.min(q.probs))
    rhs = 2.0 * lam * float(u.min()) * constants.c_m * min_pi ** 2 / ratio * gap
    if rhs < -1e-10:
        raise ValueError(f"supplied pi_star is not optimal: value gap {gap:.3e} < 0")
    return LojasiewiczTerms(float(np.sum(grad ** 2)), rhs, gap, min_pi, ratio, projected_vectors(q))


# --------------------------------------------------------------------------- step budgets

@dataclass(frozen=True)
class StepBudget:
    """Constants fixing the per-outer-iteration step budget ``S_max``."""

    regularizer: str
    a_max: float
    c_e: float
    smooth_l: float
    s_max: float
    caps: tuple
    c_pi_floor: float
    c_u: float
    c_ref: float
    c_a: float | None = None
    v0: float | None = None
    log_c_pi_floor: float | None = None
    lojasiewicz_c: float | None = None
    occupancy_ratio: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["caps"] = list(self.caps)
        return out

    def inexact_gradient_rate(self, gamma: float) -> float:
        """``C_e/(1-g)``: the surrogate gradient error per unit of inner displacement."""
        return self.c_e / (1.0 - gamma)


def _occupancy_ratio(mdp, pi_star, u):
    probs = pi_star.probs if isinstance(pi_star, PolicyTable) else np.asarray(pi_star, float)
    d = discounted_state_distribution(mdp, probs, u)
    return float(np.max(d / u))


def step_budget_forward_kl(mdp: Mdp, pi_ref, lam: float, u, eps_l: float, eps_h: float,
                           v0: float | None = None, pi_star=None) -> StepBudget:
    """Budget guaranteeing monotone ascent for the forward-KL objective started at ``pi_ref``.

    ``v0`` defaults to ``V~^{pi_ref}(u)``.  With ``pi_star`` the linear-rate
    constant ``C`` is included; it routinely underflows to 0 because it
    scales with the square of ``exp(-(C_A + log|A|)/c_ref)``.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    ref = _ref_probs(pi_ref)
    u = np.asarray(u, float)
    g, n_a = mdp.gamma, mdp.num_actions
    c_u, c_ref = float(u.min()), float(ref.min())
    if v0 is None:
        v0 = evaluate(mdp, np.log(ref), ref, FORWARD_KL, lam, u).value(u)
    v_top = mdp.r_max / (1 - g)
    if v0 > v_top:
        raise ValueError(f"v0={v0} exceeds r_max/(1-gamma)={v_top}; C_A would be negative")
    c_a = (v_top - v0) / (lam * c_u)
    log_floor = (-c_a - math.log(n_a)) / c_ref
    a_max = (mdp.r_max + lam * c_a) / (1 - g)
    c_e = math.sqrt(2) * a_max * clip_factor(eps_l, eps_h) + 3 * a_max + lam
    smooth_l = 8 * (mdp.r_max + lam * math.log(2) + lam * (math.log(n_a) + c_a) / c_ref) / (1 - g) ** 3
    caps = ((1 - g) / (8 * c_e), (1 - g) * math.log(2) / (4 * a_max + 8 * lam), 1 / (4 * smooth_l))
    s_max = min(caps)
    loja = ratio = None
    if pi_star is not None:
        ratio = _occupancy_ratio(mdp, pi_star, u)
        loja = (1 - g) * lam * s_max * c_u * c_ref * math.exp(2 * log_floor) / ratio
    return StepBudget("forward_kl", a_max, c_e, smooth_l, s_max, caps, math.exp(log_floor), c_u,
                      c_ref, c_a=c_a, v0=float(v0), log_c_pi_floor=log_floor, lojasiewicz_c=loja,
                      occupancy_ratio=ratio)


def step_budget_reverse_kl(mdp: Mdp, pi_ref, lam: float, pi_n1, eps_l: float, eps_h: float,
                           u=None, pi_star=None) -> StepBudget:
    """Policy-dependent budget ``min((1-g)/(8 C_e(pi_n1)), 1/(4 L_R))`` for reverse KL.

    ``c_pi_floor`` is the realized ``min pi_n1``; the local linear-rate constant is
    reported only when ``u`` and ``pi_star`` are both given.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    ref = _ref_probs(pi_ref)
    n1 = pi_n1 if isinstance(pi_n1, PolicyTable) else PolicyTable.from_probs(pi_n1)
    g = mdp.gamma
    c_ref = float(ref.min())
    a_max = (mdp.r_max - lam * math.log(c_ref)) / (1 - g)
    max_log_ratio = float(np.max(np.abs(np.log(ref) - n1.log_probs)))
    c_e = (math.sqrt(2) * a_max * clip_factor(eps_l, eps_h) + 3 * a_max
           + 3 * lam * max_log_ratio + 2 * lam)
    smooth_l = smoothness_reverse_kl(mdp, ref, lam)
    caps = ((1 - g) / (8 * c_e), 1 / (4 * smooth_l))
    s_max = min(caps)
    floor = float(np.min(n1.probs))
    c_u = float(np.min(u)) if u is not None else float("nan")
    loja = ratio = None
    if pi_star is not None and u is not None:
        ratio = _occupancy_ratio(mdp, pi_star, np.asarray(u, float))
        loja = (1 - g) * lam * s_max * c_u * floor ** 2 / ratio
    return StepBudget("reverse_kl", a_max, c_e, smooth_l, s_max, caps, floor, c_u, c_ref,
                      log_c_pi_floor=math.log(floor), lojasiewicz_c=loja, occupancy_ratio=ratio)


def reverse_kl_advantage_bound(mdp: Mdp, pi_ref, lam: float) -> float:
    """``(r_max - lam log c_ref)/(1-g)``, valid for every policy under reverse KL."""
    return (mdp.r_max - lam * math.log(float(_ref_probs(pi_ref).min()))) / (1 - mdp.gamma)


__all__ = [
    "LojasiewiczTerms", "StepBudget", "clip_factor", "divergence_directional_derivatives",
    "hessian_framework_bound", "policy_directional_derivatives", "lojasiewicz_bound", "projected_vectors",
    "reverse_kl_advantage_bound", "segment_sup_f", "smoothness_factor", "smoothness_forward_kl",
    "smoothness_reverse_kl", "step_budget_forward_kl", "step_budget_reverse_kl",
    "unregularized_smoothness",
]
