"""f-divergence generators, their derivatives and curvature constants.

Five generators are supported::

    alpha       (x^(1-a) - (1-a) x - a) / (a (a-1)),   0 < a < 1
    reverse_kl  x log x
    forward_kl  -log x
    js          x log x - (x+1) log((x+1)/2)
    chi2        (x-1)^2

``D_f(p, q) = sum_a q_a f(p_a / q_a)``.  For a policy ``p = pi(.|s)`` and
reference ``q = pi_ref(.|s)`` the ratio ``x`` lies in ``(0, 1/c_ref)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("alpha", "reverse_kl", "forward_kl", "js", "chi2")

_ALIASES = {
    "reverse-kl": "reverse_kl",
    "rkl": "reverse_kl",
    "forward-kl": "forward_kl",
    "fkl": "forward_kl",
    "chi-squared": "chi2",
    "chi^2": "chi2",
}


@dataclass(frozen=True)
class DivergenceSpec:
    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown divergence kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "alpha":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError(f"alpha-divergence needs alpha in (0, 1), got {self.alpha}")
        elif self.alpha is not None:
            raise ValueError(f"{self.kind} takes no alpha parameter")

    @property
    def label(self) -> str:
        if self.kind == "alpha":
            return f"alpha:{self.alpha:g}"
        return self.kind.replace("_", "-")


def parse_divergence(text: str) -> DivergenceSpec:
    """Parse ``alpha:<a>``, ``reverse-kl``, ``forward-kl``, ``js`` or ``chi2``."""
    text = text.strip().lower()
    if text.startswith("alpha"):
        _, _, value = text.partition(":")
        if not value:
            raise ValueError("alpha divergence needs a parameter, e.g. alpha:0.5")
        return DivergenceSpec("alpha", float(value))
    return DivergenceSpec(_ALIASES.get(text, text))


REVERSE_KL = DivergenceSpec("reverse_kl")
FORWARD_KL = DivergenceSpec("forward_kl")
JS = DivergenceSpec("js")
CHI2 = DivergenceSpec("chi2")


def all_kinds(alpha: float = 0.5) -> list[DivergenceSpec]:
    return [DivergenceSpec("alpha", alpha), REVERSE_KL, FORWARD_KL, JS, CHI2]


def f_eval(spec: DivergenceSpec, x):
    """Return ``(f(x), f'(x), f''(x))`` elementwise for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("f-divergence generators are evaluated only at x > 0")
    with np.errstate(over="ignore", divide="ignore"):
        return _generator(spec, x)


def _generator(spec, x):
    k = spec.kind
    if k == "alpha":
        a = spec.alpha
        f = (x ** (1 - a) - (1 - a) * x - a) / (a * (a - 1))
        return f, (1 - x ** (-a)) / a, x ** (-a - 1)
    if k == "reverse_kl":
        logx = np.log(x)
        return x * logx, logx + 1.0, 1.0 / x
    if k == "forward_kl":
        return -np.log(x), -1.0 / x, 1.0 / x ** 2
    if k == "js":
        f = x * np.log(x) - (x + 1) * np.log((x + 1) / 2)
        return f, np.log(2 * x / (x + 1)), 1.0 / (x * (x + 1))
    return (x - 1) ** 2, 2 * (x - 1), np.full_like(x, 2.0)


def f_value(spec: DivergenceSpec, x):
    """``f(x)`` for ``x >= 0``, using the limit ``f(0+)`` at zero."""
    x = np.asarray(x, dtype=float)
    pos = x > 0
    safe = np.where(pos, x, 1.0)
    out = f_eval(spec, safe)[0]
    return np.where(pos, out, f_at_zero(spec))


def f_prime(spec: DivergenceSpec, x):
    return f_eval(spec, x)[1]


def f_at_zero(spec: DivergenceSpec) -> float:
    """Limit ``f(0+)`` (``inf`` for forward KL)."""
    return {
        "alpha": 1.0 / (1.0 - (spec.alpha or 0.0)),
        "reverse_kl": 0.0,
        "forward_kl": math.inf,
        "js": math.log(2.0),
        "chi2": 1.0,
    }[spec.kind]


def f_prime_at_zero(spec: DivergenceSpec) -> float:
    return -2.0 if spec.kind == "chi2" else -math.inf


def f_prime_inverse(spec: DivergenceSpec, y):
    """Inverse of ``f'`` extended to ``[0, inf]``.

    Returns 0 where ``y <= f'(0+)`` and ``inf`` beyond the range of ``f'``.
    """
    y = np.asarray(y, dtype=float)
    k = spec.kind
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if k == "alpha":
            a = spec.alpha
            base = 1.0 - a * y
            return np.where(base > 0, np.abs(base) ** (-1.0 / a), np.inf)
        if k == "reverse_kl":
            return np.exp(y - 1.0)
        if k == "forward_kl":
            return np.where(y < 0, -1.0 / np.minimum(y, -0.0), np.inf)
        if k == "js":
            e = np.exp(y)
            return np.where(e < 2.0, e / (2.0 - np.minimum(e, 2.0)), np.inf)
        return np.maximum(0.0, 1.0 + y / 2.0)


def divergence_value(spec: DivergenceSpec, p, q):
    """``D_f(p, q) = sum q f(p/q)`` over the last axis; ``q`` must be strictly positive."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0):
        raise ValueError("reference distribution q must be strictly positive")
    return np.sum(q * f_value(spec, p / q), axis=-1)


@dataclass(frozen=True)
class DivergenceConstants:
    """Growth constants ``x|f'(x)| <= c_f1``, ``x^2|f''(x)| <= c_f2`` on ``(0, 1/c_ref)``
    and per-state strong-concavity coefficients ``m_s``."""

    c_f1: float
    c_f2: float
    m_s: np.ndarray
    c_ref: float

    @property
    def c_m(self) -> float:
        return float(np.min(self.m_s))


def table1_constants(spec: DivergenceSpec, pi_ref, *, as_printed: bool = False) -> DivergenceConstants:
    """Constants for ``spec`` relative to the reference policy table ``pi_ref``.

    The commonly tabulated chi2 ``c_f1`` and js ``m_s`` are not valid bounds;
    corrected values are used unless ``as_printed`` is set:

    * chi2: ``x|f'(x)| = 2x|x-1|`` reaches ``2c^-1 (c^-1 - 1)`` at ``x = 1/c``,
      which exceeds ``2c^-1`` whenever ``c < 1/2``.  Used: ``max(1/2, 2c^-1 (c^-1 - 1))``.
    * js: ``f''(p/q)/q = q / (p (p + q))`` falls to ``q/(1+q)`` at ``p = 1``,
      below the tabulated ``m_s = 1``.  Used: ``c_s / (1 + c_s)``, ``c_s = min_a pi_ref(a|s)``.
    """
    probs = pi_ref.probs if hasattr(pi_ref, "probs") else np.asarray(pi_ref, dtype=float)
    c_ref = float(np.min(probs))
    if not c_ref > 0:
        raise ValueError("reference policy must be strictly positive (c_ref > 0)")
    row_min = probs.min(axis=1)
    inv = 1.0 / c_ref
    k = spec.kind
    if k == "alpha":
        a = spec.alpha
        return DivergenceConstants(1.0 / (a * c_ref), c_ref ** (a - 1), row_min ** a, c_ref)
    if k == "reverse_kl":
        c1 = max(1.0 / math.e, inv * math.log(inv)) + inv
        return DivergenceConstants(c1, inv, np.ones_like(row_min), c_ref)
    if k == "forward_kl":
        return DivergenceConstants(1.0, 1.0, row_min.copy(), c_ref)
    if k == "js":
        c1 = max(1.0 / math.e, inv * math.log(2.0))
        m = np.ones_like(row_min) if as_printed else row_min / (1.0 + row_min)
        return DivergenceConstants(c1, 1.0, m, c_ref)
    c1 = 2.0 * inv if as_printed else max(0.5, 2.0 * inv * (inv - 1.0))
    return DivergenceConstants(c1, 2.0 * inv ** 2, np.full_like(row_min, 2.0), c_ref)
