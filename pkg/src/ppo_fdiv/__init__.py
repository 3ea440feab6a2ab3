"""Exact tabular PPO-Clip with f-divergence regularization."""
from __future__ import annotations

from .divergence import (CHI2, FORWARD_KL, JS, REVERSE_KL, DivergenceConstants, DivergenceSpec,
                         divergence_value, parse_divergence, table1_constants)
from .evaluation import evaluate, evaluate_policy, exact_gradient, regularized_value
from .mdp import InvalidMdpError, Mdp, load_mdp, random_mdp, save_mdp, validate_mdp
from .oracle import (OracleResult, general_regularized_vi, optimal_policy, soft_value_iteration,
                     value_iteration)
from .policy import PolicyTable, policy_from_params
from .ppo import ClipConfig, IterateLog, clip_regions, run, surrogate_gradient

__version__ = "0.1.0"
