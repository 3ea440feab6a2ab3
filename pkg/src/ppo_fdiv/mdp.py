"""Finite MDPs, policy-conditioned transition algebra and occupancy solves."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

ROW_SUM_TOL = 1e-12


class InvalidMdpError(ValueError):
    """Raised when an MDP file fails validation."""

    def __init__(self, violations: list[str]):
        super().__init__("invalid MDP: " + "; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class Mdp:
    """Tabular MDP ``(S, A, P, r, gamma)``.

    ``transition[s, a, s']`` is ``P(s'|s, a)`` and ``reward[s, a]`` lies in
    ``[0, r_max]``.  Construction does not validate; call :func:`validate_mdp`.
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma: float
    r_max: float

    def __post_init__(self):
        p = np.array(self.transition, dtype=float)
        r = np.array(self.reward, dtype=float)
        p.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "r_max", float(self.r_max))

    @property
    def num_states(self) -> int:
        return self.reward.shape[0]

    @property
    def num_actions(self) -> int:
        return self.reward.shape[1]

    def to_dict(self) -> dict:
        return {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "gamma": self.gamma,
            "r_max": self.r_max,
            "transition": self.transition.tolist(),
            "reward": self.reward.tolist(),
        }


def validate_mdp(mdp: Mdp) -> list[str]:
    """Return every violated invariant of ``mdp``; an empty list means valid."""
    out = []
    p, r = mdp.transition, mdp.reward
    if r.ndim != 2 or r.shape[0] < 1 or r.shape[1] < 1:
        return [f"reward must be a non-empty |S|x|A| table, got shape {r.shape}"]
    n_s, n_a = r.shape
    if p.shape != (n_s, n_a, n_s):
        return [f"transition shape {p.shape} does not match ({n_s}, {n_a}, {n_s})"]
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(r))):
        out.append("non-finite entry in transition or reward")
    for s, a in zip(*np.nonzero(np.any(p < 0, axis=2))):
        out.append(f"negative transition probability at (s={s},a={a})")
    sums = p.sum(axis=2)
    for s, a in zip(*np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)):
        out.append(f"transition row (s={s},a={a}) sums to {sums[s, a]!r}, not 1")
    if mdp.r_max < 0:
        out.append(f"r_max must be >= 0, got {mdp.r_max}")
    for s, a in zip(*np.nonzero((r < 0) | (r > mdp.r_max))):
        out.append(f"reward out of [0,r_max] at (s={s},a={a}): {r[s, a]!r}")
    if not 0.0 <= mdp.gamma < 1.0:
        out.append(f"gamma must lie in [0,1), got {mdp.gamma}")
    return out


def validate_distribution(weights, num_states: int, *, explorative: bool = False) -> list[str]:
    """Check an initial-state distribution; ``explorative`` additionally demands min > 0."""
    w = np.asarray(weights, dtype=float)
    out = []
    if w.shape != (num_states,):
        return [f"distribution has shape {w.shape}, expected ({num_states},)"]
    if np.any(w < 0):
        out.append("distribution has negative entries")
    if abs(w.sum() - 1.0) > ROW_SUM_TOL:
        out.append(f"distribution sums to {w.sum()!r}, not 1")
    if explorative and w.min() <= 0:
        out.append("gradient-evaluation distribution u must be strictly positive")
    return out


def uniform_distribution(num_states: int) -> np.ndarray:
    return np.full(num_states, 1.0 / num_states)


def transition_under_policy(mdp: Mdp, probs: np.ndarray) -> np.ndarray:
    """State-to-state matrix ``P_pi[s, s'] = sum_a pi(a|s) P(s'|s, a)``."""
    probs = np.asarray(probs, dtype=float)
    if probs.shape != mdp.reward.shape:
        raise ValueError(f"policy shape {probs.shape} does not match MDP {mdp.reward.shape}")
    return np.einsum("sa,sat->st", probs, mdp.transition)


def _system(mdp: Mdp, probs: np.ndarray) -> np.ndarray:
    return np.eye(mdp.num_states) - mdp.gamma * transition_under_policy(mdp, probs)


def visitation_factor(mdp: Mdp, probs: np.ndarray):
    """LU factorization of ``I - gamma P_pi``, reusable across right-hand sides."""
    return scipy.linalg.lu_factor(_system(mdp, probs), check_finite=False)


def accumulated_visitation_apply(mdp: Mdp, probs: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``M v = (I - gamma P_pi)^{-1} v``; ``M 1 = 1/(1-gamma)``."""
    return scipy.linalg.lu_solve(visitation_factor(mdp, probs), np.asarray(v, dtype=float))


def discounted_state_distribution(mdp: Mdp, probs: np.ndarray, init: np.ndarray) -> np.ndarray:
    """Normalized discounted occupancy ``d = (1-gamma) init^T (I - gamma P_pi)^{-1}``."""
    init = np.asarray(init, dtype=float)
    lu = visitation_factor(mdp, probs)
    return (1.0 - mdp.gamma) * scipy.linalg.lu_solve(lu, init, trans=1)


def random_mdp(seed: int, num_states: int, num_actions: int, r_max: float = 1.0,
               gamma: float = 0.9) -> Mdp:
    """Seeded random MDP with strictly positive transitions and uniform rewards."""
    if num_states < 1 or num_actions < 1:
        raise ValueError("num_states and num_actions must be >= 1")
    rng = np.random.default_rng(seed)
    p = rng.uniform(size=(num_states, num_actions, num_states))
    p /= p.sum(axis=2, keepdims=True)
    p = np.maximum(p, 1e-3 / num_states)
    p /= p.sum(axis=2, keepdims=True)
    r = rng.uniform(0.0, r_max, size=(num_states, num_actions))
    return Mdp(p, r, gamma, r_max)


def mdp_from_dict(data: dict) -> Mdp:
    """Build and validate an MDP from the JSON schema; raises on any violation."""
    try:
        mdp = Mdp(data["transition"], data["reward"], data["gamma"], data["r_max"])
    except KeyError as exc:
        raise InvalidMdpError([f"missing key {exc.args[0]!r}"]) from None
    violations = validate_mdp(mdp)
    for key, actual in (("num_states", mdp.reward.shape[0]), ("num_actions", mdp.reward.shape[-1])):
        if key in data and data[key] != actual:
            violations.append(f"{key}={data[key]} disagrees with reward table ({actual})")
    if violations:
        raise InvalidMdpError(violations)
    return mdp


def load_mdp(path: str | Path) -> Mdp:
    with open(path) as fh:
        return mdp_from_dict(json.load(fh))


def save_mdp(mdp: Mdp, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(mdp.to_dict(), fh, indent=2)
        fh.write("\n")
