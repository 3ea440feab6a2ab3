"""Softmax policies: logits to distributions, score functions and Jacobians."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class PolicyTable:
    """Per-state action distributions with their log-probabilities."""

    probs: np.ndarray
    log_probs: np.ndarray

    def __post_init__(self):
        for name in ("probs", "log_probs"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_probs(cls, probs) -> "PolicyTable":
        """Wrap an explicit table (entries may be 0, giving ``-inf`` log-probabilities)."""
        probs = np.asarray(probs, dtype=float)
        with np.errstate(divide="ignore"):
            return cls(probs, np.log(probs))

    @classmethod
    def uniform(cls, num_states: int, num_actions: int) -> "PolicyTable":
        return policy_from_params(np.zeros((num_states, num_actions)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape


def policy_from_params(theta: np.ndarray) -> PolicyTable:
    """Row-wise softmax via the max-shift trick.

    ``log_probs`` comes from the shifted logits directly, so a logit gap of
    1000 yields ``-1000`` rather than ``log(0) = -inf``.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2:
        raise ValueError(f"logits must be a |S|x|A| table, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("logits contain non-finite entries")
    z = theta - theta.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return PolicyTable(np.exp(log_probs), log_probs)


def logits_from_policy(policy: PolicyTable) -> np.ndarray:
    """Logits reproducing a strictly positive policy (``log pi``)."""
    if not np.all(np.isfinite(policy.log_probs)):
        raise ValueError("policy has zero entries; no finite logits exist")
    return np.array(policy.log_probs)


def score(theta: np.ndarray, s: int, a: int) -> np.ndarray:
    """``grad_{theta_s} log pi(a|s) = e_a - pi(.|s)``."""
    pi_s = _state_row(theta, s)
    if not 0 <= a < pi_s.size:
        raise IndexError(f"action {a} out of range for {pi_s.size} actions")
    psi = -pi_s
    psi[a] += 1.0
    return psi


def policy_jacobian(theta: np.ndarray, s: int) -> np.ndarray:
    """``H(theta_s) = diag(pi_s) - pi_s pi_s^T``, the Jacobian of ``pi(.|s)`` in ``theta_s``."""
    pi_s = _state_row(theta, s)
    return np.diag(pi_s) - np.outer(pi_s, pi_s)


def _state_row(theta, s):
    theta = np.asarray(theta, dtype=float)
    if not 0 <= s < theta.shape[0]:
        raise IndexError(f"state {s} out of range for {theta.shape[0]} states")
    return np.array(policy_from_params(theta[s:s + 1]).probs[0])


def save_theta(theta: np.ndarray, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(np.asarray(theta, dtype=float).tolist(), fh)
        fh.write("\n")


def load_theta(path: str | Path) -> np.ndarray:
    with open(path) as fh:
        theta = np.array(json.load(fh), dtype=float)
    policy_from_params(theta)
    return theta
