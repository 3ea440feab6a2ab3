"""Exact evaluation of the f-divergence regularized objective and its gradient.

For a policy ``pi`` the objective splits as ``V~ = V - lam * V_f`` where
``V`` is the discounted reward and ``V_f`` the discounted per-state
divergence ``D_f(pi(.|s), pi_ref(.|s))``.  Both solve linear Bellman
equations with the same matrix ``I - gamma P_pi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .divergence import DivergenceSpec, divergence_value, f_prime
from .mdp import Mdp, transition_under_policy
from .policy import PolicyTable, policy_from_params


def _frozen(arr):
    arr = np.asarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RegularizedQuantities:
    """Everything needed downstream for one ``(policy, MDP, divergence, lam, u)``."""

    policy: PolicyTable
    pi_ref: np.ndarray
    spec: DivergenceSpec
    lam: float
    gamma: float
    u: np.ndarray
    v: np.ndarray           # regularized value V~(s)
    v_reward: np.ndarray    # V(s)
    v_reg: np.ndarray       # V_f(s)
    div: np.ndarray         # D_f(pi(.|s), pi_ref(.|s))
    q_tilde: np.ndarray
    a_tilde: np.ndarray
    d_u: np.ndarray
    ratio: np.ndarray       # pi / pi_ref

    @property
    def probs(self) -> np.ndarray:
        return self.policy.probs

    def value(self, dist) -> float:
        """``V~(dist) = sum_s dist(s) V~(s)``."""
        return float(np.dot(dist, self.v))

    def occupancy(self, mdp: Mdp, dist) -> np.ndarray:
        """Normalized discounted occupancy from another start distribution."""
        return (1.0 - self.gamma) * scipy.linalg.lu_solve(self._lu(mdp), np.asarray(dist, float), trans=1)

    def _lu(self, mdp):
        return scipy.linalg.lu_factor(
            np.eye(mdp.num_states) - mdp.gamma * transition_under_policy(mdp, self.probs))


def evaluate_policy(mdp: Mdp, policy: PolicyTable, pi_ref, spec: DivergenceSpec, lam: float,
                    u) -> RegularizedQuantities:
    """Evaluate an explicit policy table (entries may be 0 where ``f(0+)`` is finite)."""
    ref = pi_ref.probs if isinstance(pi_ref, PolicyTable) else np.asarray(pi_ref, dtype=float)
    probs = policy.probs
    if probs.shape != mdp.reward.shape or ref.shape != mdp.reward.shape:
        raise ValueError("policy / reference shapes do not match the MDP")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    u = np.asarray(u, dtype=float)
    gamma = mdp.gamma

    div = divergence_value(spec, probs, ref)
    r_pi = np.sum(probs * mdp.reward, axis=1)
    p_pi = np.einsum("sa,sat->st", probs, mdp.transition)
    lu = scipy.linalg.lu_factor(np.eye(mdp.num_states) - gamma * p_pi, check_finite=False)
    v_reward, v_reg = scipy.linalg.lu_solve(lu, np.column_stack([r_pi, div])).T
    d_u = (1.0 - gamma) * scipy.linalg.lu_solve(lu, u, trans=1)

    v = v_reward - lam * v_reg
    q_tilde = mdp.reward - lam * div[:, None] + gamma * mdp.transition @ v
    a_tilde = q_tilde - v[:, None]
    return RegularizedQuantities(
        policy=policy, pi_ref=_frozen(ref), spec=spec, lam=float(lam), gamma=gamma, u=_frozen(u),
        v=_frozen(v), v_reward=_frozen(v_reward), v_reg=_frozen(v_reg), div=_frozen(div),
        q_tilde=_frozen(q_tilde), a_tilde=_frozen(a_tilde), d_u=_frozen(d_u),
        ratio=_frozen(probs / ref),
    )


def evaluate(mdp: Mdp, theta, pi_ref, spec: DivergenceSpec, lam: float, u) -> RegularizedQuantities:
    """Evaluate the softmax policy with logits ``theta``."""
    return evaluate_policy(mdp, policy_from_params(theta), pi_ref, spec, lam, u)


def regularized_value(mdp, theta, pi_ref, spec, lam, dist) -> float:
    """``V~_lam(dist)`` for logits ``theta``."""
    return evaluate(mdp, theta, pi_ref, spec, lam, dist).value(dist)


def exact_gradient(quantities: RegularizedQuantities) -> np.ndarray:
    """Gradient of ``V~(u)`` in the logits.

    ``d(s)/(1-gamma) pi(a|s) [A~(s,a) - lam (f'(w_sa) - sum_a' pi(a'|s) f'(w_sa'))]``
    """
    q = quantities
    probs = q.probs
    fp = f_prime(q.spec, q.ratio) if q.lam else np.zeros_like(probs)
    centered = fp - np.sum(probs * fp, axis=1, keepdims=True)
    return (q.d_u / (1.0 - q.gamma))[:, None] * probs * (q.a_tilde - q.lam * centered)


def gradient(mdp, theta, pi_ref, spec, lam, u) -> np.ndarray:
    return exact_gradient(evaluate(mdp, theta, pi_ref, spec, lam, u))


def gradient_by_jacobian(quantities: RegularizedQuantities) -> np.ndarray:
    """Same gradient assembled state by state as ``d(s)/(1-gamma) H(theta_s) (Q~(s) - lam f'(w_s))``."""
    q = quantities
    out = np.empty_like(q.q_tilde)
    fp = f_prime(q.spec, q.ratio) if q.lam else np.zeros_like(q.q_tilde)
    for s, pi_s in enumerate(q.probs):
        h = np.diag(pi_s) - np.outer(pi_s, pi_s)
        out[s] = q.d_u[s] / (1.0 - q.gamma) * h @ (q.q_tilde[s] - q.lam * fp[s])
    return out


def performance_difference_rhs(mdp: Mdp, first: RegularizedQuantities, second: RegularizedQuantities,
                               rho) -> float:
    """Right-hand side of the performance difference identity for ``V~^1(rho) - V~^2(rho)``.

    ``1/(1-gamma) sum_s d^1_rho(s) [sum_a (pi_1 - pi_2) Q~^2 - lam (D_f(pi_1) - D_f(pi_2))]``
    """
    d1 = first.occupancy(mdp, rho)
    inner = np.sum((first.probs - second.probs) * second.q_tilde, axis=1)
    inner -= second.lam * (first.div - second.div)
    return float(d1 @ inner / (1.0 - mdp.gamma))


def suboptimality_terms(optimal: RegularizedQuantities, other: RegularizedQuantities) -> np.ndarray:
    """Per-state ``W(s) = sum_a (pi* - pi) Q~*(s,a) - lam (D_f(pi*) - D_f(pi))``; nonnegative."""
    w = np.sum((optimal.probs - other.probs) * optimal.q_tilde, axis=1)
    return w - optimal.lam * (optimal.div - other.div)
