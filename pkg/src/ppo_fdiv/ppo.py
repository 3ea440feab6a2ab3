"""Deterministic double-loop PPO-Clip with forward- or reverse-KL regularization.

Each outer iteration freezes an anchor (policy, occupancy and regularized
advantage at ``theta_{n,1}``) and takes ``K`` ascent steps on the clipped
surrogate whose gradient is computed exactly from the anchor tables.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bounds import StepBudget, step_budget_forward_kl, step_budget_reverse_kl
from .divergence import FORWARD_KL, REVERSE_KL, divergence_value
from .evaluation import RegularizedQuantities, evaluate, evaluate_policy, exact_gradient
from .mdp import Mdp
from .policy import PolicyTable, policy_from_params

REGULARIZERS = ("forward_kl", "reverse_kl")
CSV_COLUMNS = ("n", "value_u", "value_rho", "grad_norm", "delta_n", "min_policy", "s_max_n",
               "clip_fraction")


@dataclass(frozen=True)
class ClipConfig:
    """Hyper-parameters of one run.

    ``weights`` splits the per-outer step budget across the ``K`` inner steps
    (uniform by default).  ``step_scale`` shrinks (or, for ablations, inflates)
    the budget; ``fixed_step`` bypasses it entirely.  With ``grad_tol`` the run
    stops early once ``||grad V~(u)|| <= grad_tol`` at an anchor.
    """

    eps_l: float = 0.2
    eps_h: float = 0.2
    lam: float = 0.1
    regularizer: str = "forward_kl"
    K: int = 10
    N: int = 100
    weights: tuple | None = None
    step_scale: float = 1.0
    fixed_step: float | None = None
    grad_tol: float | None = None

    def __post_init__(self):
        reg = self.regularizer.replace("-", "_")
        object.__setattr__(self, "regularizer", reg)
        if reg not in REGULARIZERS:
            raise ValueError(f"regularizer must be one of {REGULARIZERS}, got {self.regularizer!r}")
        if not 0.0 < self.eps_l < 1.0:
            raise ValueError(f"eps_l must lie in (0, 1), got {self.eps_l}")
        if not self.eps_h > 0.0:
            raise ValueError(f"eps_h must be positive, got {self.eps_h}")
        if not self.lam > 0.0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be an integer >= 1, got {self.K}")
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"N must be a non-negative integer, got {self.N}")
        if not self.step_scale > 0.0:
            raise ValueError("step_scale must be positive")
        if self.fixed_step is not None and not self.fixed_step > 0.0:
            raise ValueError("fixed_step must be positive")
        if self.grad_tol is not None and not self.grad_tol > 0.0:
            raise ValueError("grad_tol must be positive")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != self.K or min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
                raise ValueError("weights must be K non-negative numbers summing to 1")
            object.__setattr__(self, "weights", w)

    @property
    def spec(self):
        return FORWARD_KL if self.regularizer == "forward_kl" else REVERSE_KL

    @property
    def step_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.K, 1.0 / self.K)
        return np.array(self.weights)

    @property
    def theory_off(self) -> bool:
        return self.fixed_step is not None or self.step_scale > 1.0


@dataclass(frozen=True)
class Anchor:
    """Quantities frozen at ``theta_{n,1}`` for the whole inner loop."""

    theta: np.ndarray
    probs: np.ndarray
    d_u: np.ndarray
    a_tilde: np.ndarray
    gamma: float

    @classmethod
    def from_quantities(cls, theta, q: RegularizedQuantities) -> "Anchor":
        arrays = [np.array(x, dtype=float) for x in (theta, q.probs, q.d_u, q.a_tilde)]
        for a in arrays:
            a.setflags(write=False)
        return cls(*arrays, gamma=q.gamma)


def clip_regions(a_tilde, ratio, eps_l: float, eps_h: float) -> np.ndarray:
    """Non-clip mask ``{A >= 0, r <= 1+eps_h} | {A < 0, r >= 1-eps_l}``."""
    a_tilde = np.asarray(a_tilde, dtype=float)
    ratio = np.asarray(ratio, dtype=float)
    if a_tilde.shape != ratio.shape:
        raise ValueError("advantage and ratio tables differ in shape")
    return ((a_tilde >= 0) & (ratio <= 1.0 + eps_h)) | ((a_tilde < 0) & (ratio >= 1.0 - eps_l))


def _inner_coefficients(policy: PolicyTable, anchor: Anchor, ref, config: ClipConfig):
    ratio = policy.probs / anchor.probs
    mask = clip_regions(anchor.a_tilde, ratio, config.eps_l, config.eps_h)
    coef = np.where(mask, ratio * anchor.a_tilde, 0.0)
    if config.regularizer == "forward_kl":
        coef = coef + config.lam * ref / anchor.probs
    else:
        coef = coef - config.lam * ratio * (policy.log_probs - np.log(ref))
    return coef, mask


def surrogate_gradient(theta_k, anchor: Anchor, pi_ref, config: ClipConfig, *,
                       return_mask: bool = False):
    """Exact gradient of the clipped surrogate at ``theta_k`` under ``anchor``.

    ``g(s) = d(s)/(1-g) sum_a pi_1(a|s) c(s,a) (e_a - pi_k(s))`` with
    ``c = 1_N r A~ + lam pi_ref/pi_1`` (forward KL) or
    ``c = 1_N r A~ - lam r log(pi_k/pi_ref)`` (reverse KL).
    """
    theta_k = np.asarray(theta_k, dtype=float)
    if theta_k.shape != anchor.probs.shape:
        raise ValueError(f"theta shape {theta_k.shape} does not match anchor {anchor.probs.shape}")
    ref = pi_ref.probs if isinstance(pi_ref, PolicyTable) else np.asarray(pi_ref, dtype=float)
    policy = policy_from_params(theta_k)
    coef, mask = _inner_coefficients(policy, anchor, ref, config)
    weighted = anchor.probs * coef
    g = weighted - policy.probs * weighted.sum(axis=1, keepdims=True)
    g *= (anchor.d_u / (1.0 - anchor.gamma))[:, None]
    return (g, mask) if return_mask else g


def surrogate_objective(theta_k, anchor: Anchor, pi_ref, config: ClipConfig) -> float:
    """``sum_s d(s)/(1-g) [E_{pi_1} min(r A~, clip(r) A~) - lam D(pi_k(s), pi_ref(s))]``.

    Its gradient is :func:`surrogate_gradient`; used as a finite-difference oracle.
    """
    ref = pi_ref.probs if isinstance(pi_ref, PolicyTable) else np.asarray(pi_ref, dtype=float)
    probs = policy_from_params(theta_k).probs
    ratio = probs / anchor.probs
    clipped = np.clip(ratio, 1.0 - config.eps_l, 1.0 + config.eps_h)
    adv = anchor.a_tilde
    per_state = np.sum(anchor.probs * np.minimum(ratio * adv, clipped * adv), axis=1)
    per_state -= config.lam * divergence_value(config.spec, probs, ref)
    return float(anchor.d_u @ per_state / (1.0 - anchor.gamma))


@dataclass
class OuterRecord:
    n: int
    value_u: float
    value_rho: float
    grad_norm: float
    delta_n: float | None
    min_policy: float
    s_max_n: float
    clip_fraction: float
    anchor_error: float = 0.0
    max_error_ratio: float = 0.0      # max_k ||g_k - grad|| / (C_e/(1-g) ||theta_k - theta_1||)
    max_relative_error: float = 0.0   # max_k ||g_k - grad|| / ||grad||
    min_inner_policy: float = math.inf
    min_inner_ratio: float = math.inf  # min_k min pi_{n,k} / pi_{n,1}
    lojasiewicz_c: float | None = None
    max_abs_advantage: float = 0.0


@dataclass
class IterateLog:
    config: ClipConfig
    budget: StepBudget | None = None
    v_star_u: float | None = None
    records: list = field(default_factory=list)
    final: OuterRecord | None = None

    def column(self, name: str, include_final: bool = False) -> np.ndarray:
        rows = self.records + ([self.final] if include_final and self.final else [])
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in rows],
                        dtype=float)

    def rows(self) -> list[dict]:
        return [{k: getattr(r, k) for k in CSV_COLUMNS} for r in self.records]

    def write_csv(self, target) -> None:
        """Write the per-outer-iteration table to a path or an open text stream."""
        if hasattr(target, "write"):
            self._write_rows(target)
        else:
            with open(target, "w", newline="") as fh:
                self._write_rows(fh)

    def _write_rows(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows():
            writer.writerow(["" if row[k] is None else repr(row[k]) if isinstance(row[k], float)
                             else row[k] for k in CSV_COLUMNS])

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "budget": self.budget.to_dict() if self.budget else None,
            "v_star_u": self.v_star_u,
            "records": [asdict(r) for r in self.records],
            "final": asdict(self.final) if self.final else None,
        }


def _budget(mdp, ref, config, u, q, theta, pi_star, v0):
    if config.regularizer == "forward_kl":
        return step_budget_forward_kl(mdp, ref, config.lam, u, config.eps_l, config.eps_h,
                                      v0=v0, pi_star=pi_star)
    return step_budget_reverse_kl(mdp, ref, config.lam, q.policy, config.eps_l, config.eps_h,
                                  u=u, pi_star=pi_star)


def run(mdp: Mdp, pi_ref, u, rho, config: ClipConfig, theta0=None, oracle=None):
    """Run ``config.N`` outer iterations; returns ``(theta, IterateLog)``.

    ``theta0`` defaults to ``log pi_ref``.  ``oracle`` (anything with a
    ``pi_star`` table) enables ``delta_n`` and the linear-rate constants.  The
    forward-KL budget is computed once from the initial value; the reverse-KL
    budget is recomputed from every anchor policy.
    """
    ref = pi_ref.probs if isinstance(pi_ref, PolicyTable) else np.asarray(pi_ref, dtype=float)
    u = np.asarray(u, dtype=float)
    rho = np.asarray(rho, dtype=float)
    spec = config.spec
    theta = np.log(ref) if theta0 is None else np.array(theta0, dtype=float)
    if theta.shape != mdp.reward.shape:
        raise ValueError(f"theta0 shape {theta.shape} does not match MDP {mdp.reward.shape}")
    pi_star = None if oracle is None else getattr(oracle, "pi_star", oracle)
    log = IterateLog(config)
    if pi_star is not None:
        log.v_star_u = evaluate_policy(mdp, pi_star, ref, spec, config.lam, u).value(u)
    weights = config.step_weights
    gamma = mdp.gamma

    budget = None
    for n in range(1, config.N + 2):
        q = evaluate(mdp, theta, ref, spec, config.lam, u)
        grad = exact_gradient(q)
        if budget is None or config.regularizer == "reverse_kl":
            budget = _budget(mdp, ref, config, u, q, theta, pi_star, q.value(u) if n == 1 else None)
            if log.budget is None:
                log.budget = budget
        step = config.fixed_step if config.fixed_step is not None else config.step_scale * budget.s_max
        value_u = q.value(u)
        record = OuterRecord(
            n=n, value_u=value_u, value_rho=q.value(rho), grad_norm=float(np.linalg.norm(grad)),
            delta_n=None if log.v_star_u is None else log.v_star_u - value_u,
            min_policy=float(q.probs.min()), s_max_n=float(step), clip_fraction=0.0,
            lojasiewicz_c=budget.lojasiewicz_c, max_abs_advantage=float(np.max(np.abs(q.a_tilde))),
        )
        if n == config.N + 1 or (config.grad_tol is not None and record.grad_norm <= config.grad_tol):
            log.final = record
            break

        anchor = Anchor.from_quantities(theta, q)
        rate = budget.c_e / (1.0 - gamma)
        grad_norm = record.grad_norm
        clip_mass = 0.0
        theta_k = theta.copy()
        for k, w in enumerate(weights):
            g, mask = surrogate_gradient(theta_k, anchor, ref, config, return_mask=True)
            err = float(np.linalg.norm(g - grad))
            if k == 0:
                record.anchor_error = float(np.max(np.abs(g - grad)))
            else:
                disp = float(np.linalg.norm(theta_k - anchor.theta))
                if disp > 0:
                    record.max_error_ratio = max(record.max_error_ratio, err / (rate * disp))
                if grad_norm > 0:
                    record.max_relative_error = max(record.max_relative_error, err / grad_norm)
                probs_k = policy_from_params(theta_k).probs
                record.min_inner_policy = min(record.min_inner_policy, float(probs_k.min()))
                record.min_inner_ratio = min(record.min_inner_ratio,
                                             float(np.min(probs_k / anchor.probs)))
            clip_mass += float(np.sum(anchor.d_u[:, None] * anchor.probs * ~mask))
            theta_k = theta_k + w * step * g
            if not np.all(np.isfinite(theta_k)):
                raise FloatingPointError(f"non-finite logits at outer {n}, inner {k + 1} "
                                         f"(step {step:.3e}, |g|max {np.max(np.abs(g)):.3e})")
        probs_end = policy_from_params(theta_k).probs
        record.min_inner_policy = min(record.min_inner_policy, float(probs_end.min()))
        record.min_inner_ratio = min(record.min_inner_ratio, float(np.min(probs_end / anchor.probs)))
        record.clip_fraction = clip_mass / len(weights)
        log.records.append(record)
        theta = theta_k
    return theta, log
