"""Command-line entry point: ``ppo-fdiv {random-mdp,train,check,oracle,constants}``.

Exit codes: 0 success, 1 failed check or diverged run, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import checks
from .bounds import (smoothness_reverse_kl, step_budget_forward_kl, step_budget_reverse_kl,
                     unregularized_smoothness)
from .divergence import parse_divergence, table1_constants
from .evaluation import evaluate_policy
from .mdp import InvalidMdpError, load_mdp, random_mdp, uniform_distribution, validate_distribution
from .oracle import OracleError, general_regularized_vi, optimal_policy, soft_value_iteration
from .policy import PolicyTable, save_theta
from .ppo import ClipConfig, run


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


# --------------------------------------------------------------------------- argument helpers

def load_mdp_source(source: str, gamma: float | None = None):
    """``random:seed,S,A`` or a JSON file path.  ``gamma`` applies to random MDPs only."""
    if source.startswith("random:"):
        try:
            seed, n_s, n_a = (int(x) for x in source[len("random:"):].split(","))
        except ValueError:
            raise UsageError(f"bad random MDP spec {source!r}; expected random:seed,S,A") from None
        return random_mdp(seed, n_s, n_a, gamma=0.9 if gamma is None else gamma)
    mdp = load_mdp(source)
    if gamma is not None:
        raise UsageError("--gamma applies only to random MDPs; file MDPs carry their own gamma")
    return mdp


def parse_state_distribution(text: str, num_states: int) -> np.ndarray:
    if text == "uniform":
        return uniform_distribution(num_states)
    try:
        w = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError(f"bad distribution {text!r}; use 'uniform' or comma-separated weights") from None
    problems = validate_distribution(w, num_states)
    if problems:
        raise UsageError("; ".join(problems))
    return w


def parse_reference(text: str, num_states: int, num_actions: int) -> np.ndarray:
    if text == "uniform":
        return PolicyTable.uniform(num_states, num_actions).probs
    with open(text) as fh:
        ref = np.array(json.load(fh), dtype=float)
    if ref.shape != (num_states, num_actions):
        raise UsageError(f"reference policy shape {ref.shape} does not match MDP")
    if np.any(ref <= 0) or np.any(np.abs(ref.sum(axis=1) - 1) > 1e-12):
        raise UsageError("reference policy rows must be strictly positive and sum to 1")
    return ref


def _common_problem(p: argparse.ArgumentParser, with_eps: bool = True) -> None:
    p.add_argument("--mdp", default="random:0,3,3",
                   help="MDP JSON file or random:seed,S,A (default: random:0,3,3)")
    p.add_argument("--gamma", type=float, default=None,
                   help="discount for random MDPs (default 0.9)")
    p.add_argument("--divergence", default="forward-kl",
                   help="alpha:<a>, reverse-kl, forward-kl, js or chi2 (default forward-kl)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1,
                   help="regularization weight (default 0.1)")
    p.add_argument("--pi-ref", default="uniform",
                   help="reference policy: 'uniform' or JSON |S|x|A| table file")
    p.add_argument("--u", default="uniform", help="gradient distribution u (default uniform)")
    p.add_argument("--rho", default="uniform", help="performance distribution rho (default uniform)")
    if with_eps:
        p.add_argument("--eps-l", type=float, default=0.2, help="lower clip width (default 0.2)")
        p.add_argument("--eps-h", type=float, default=0.2, help="upper clip width (default 0.2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppo-fdiv", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file whose keys supply defaults for the subcommand flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("random-mdp", help="write a seeded random MDP as JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--states", type=int, default=3)
    p.add_argument("--actions", type=int, default=3)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--r-max", type=float, default=1.0)
    p.add_argument("--out", default="-", help="output path (default stdout)")

    p = sub.add_parser("train", help="run exact PPO-Clip and log one CSV row per outer iteration")
    _common_problem(p)
    p.add_argument("--outer", type=int, default=100, help="outer iterations N (default 100)")
    p.add_argument("--inner", type=int, default=10, help="inner steps K (default 10)")
    p.add_argument("--step-scale", type=float, default=1.0,
                   help="multiplier on the step budget; >1 voids the guarantees (default 1)")
    p.add_argument("--fixed-step", type=float, default=None,
                   help="theory-off mode: constant per-outer step, ignoring the budget")
    p.add_argument("--grad-tol", type=float, default=None, help="stop once ||grad|| <= this")
    p.add_argument("--no-oracle", action="store_true", help="skip the oracle; delta_n left empty")
    p.add_argument("--log", default="-", help="CSV path (default stdout)")
    p.add_argument("--theta-out", default=None, help="write final logits as JSON")
    p.add_argument("--summary", default=None, help="write a JSON run summary")

    p = sub.add_parser("check", help="run the randomized theory-check suites")
    p.add_argument("--suite", default="all", choices=("all",) + checks.SUITES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=None, help="override per-suite trial counts")
    p.add_argument("--out", default="-", help="JSON report path (default stdout)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes across suites")

    p = sub.add_parser("oracle", help="compute the regularized optimal policy and value")
    _common_problem(p, with_eps=False)
    p.add_argument("--tol", type=float, default=1e-10, help="Bellman residual tolerance")
    p.add_argument("--solver", default="auto", choices=("auto", "soft", "kkt", "pgd"),
                   help="auto: soft VI for reverse KL, KKT value iteration otherwise")
    p.add_argument("--out", default="-")

    p = sub.add_parser("constants", help="divergence constants, smoothness and step budget")
    _common_problem(p)
    p.add_argument("--oracle", dest="oracle_file", default=None,
                   help="oracle JSON (from the oracle subcommand) enabling the linear-rate constant")
    p.add_argument("--as-printed", action="store_true",
                   help="report the uncorrected tabulated constants")
    p.add_argument("--out", default="-")
    return parser


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        subparser = sub.choices[args.command]
        known = {a.dest for a in subparser._actions}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        if "lambda" in cfg:
            cfg["lam"] = cfg.pop("lambda")
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {unknown}")
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# --------------------------------------------------------------------------- commands

def _problem(args):
    mdp = load_mdp_source(args.mdp, args.gamma)
    spec = parse_divergence(args.divergence)
    ref = parse_reference(args.pi_ref, mdp.num_states, mdp.num_actions)
    u = parse_state_distribution(args.u, mdp.num_states)
    if validate_distribution(u, mdp.num_states, explorative=True):
        raise UsageError("u must be strictly positive")
    rho = parse_state_distribution(args.rho, mdp.num_states)
    return mdp, spec, ref, u, rho


def cmd_random_mdp(args) -> int:
    mdp = random_mdp(args.seed, args.states, args.actions, r_max=args.r_max, gamma=args.gamma)
    _emit(_dump(mdp.to_dict()), args.out)
    return 0


def cmd_train(args) -> int:
    mdp, spec, ref, u, rho = _problem(args)
    if spec.kind not in ("forward_kl", "reverse_kl"):
        raise UsageError("train supports forward-kl and reverse-kl regularizers only")
    config = ClipConfig(eps_l=args.eps_l, eps_h=args.eps_h, lam=args.lam, regularizer=spec.kind,
                        K=args.inner, N=args.outer, step_scale=args.step_scale,
                        fixed_step=args.fixed_step, grad_tol=args.grad_tol)
    oracle = None if args.no_oracle else optimal_policy(mdp, ref, spec, args.lam)
    try:
        theta, log = run(mdp, ref, u, rho, config, oracle=oracle)
    except FloatingPointError as exc:
        print(f"run diverged: {exc}", file=sys.stderr)
        return 1
    log.write_csv(sys.stdout if args.log in (None, "-") else args.log)
    if args.theta_out:
        save_theta(theta, args.theta_out)
    if args.summary:
        final = log.final
        _emit(_dump({"budget": log.budget.to_dict(), "final_value_u": final.value_u,
                     "final_value_rho": final.value_rho, "final_grad_norm": final.grad_norm,
                     "final_delta": final.delta_n, "outer_iterations": len(log.records),
                     "theory_off": config.theory_off}), args.summary)
    return 0


def cmd_check(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    reports = checks.run_suite(args.suite, args.seed, args.trials, args.jobs)
    for r in reports:
        print(r.summary(), file=sys.stderr)
    _emit(checks.reports_to_json(reports), args.out)
    return 0 if all(r.passed for r in reports) else 1


def cmd_oracle(args) -> int:
    mdp, spec, ref, _, _ = _problem(args)
    solver = args.solver
    if solver == "soft" or (solver == "auto" and spec.kind == "reverse_kl"):
        if spec.kind != "reverse_kl":
            raise UsageError("the soft solver handles reverse-kl only")
        result = soft_value_iteration(mdp, ref, args.lam, args.tol)
    else:
        result = general_regularized_vi(mdp, ref, spec, args.lam, args.tol,
                                        inner="pgd" if solver == "pgd" else "kkt",
                                        accelerate=solver == "auto")
    out = result.to_dict()
    out["divergence"] = spec.label
    out["lambda"] = args.lam
    _emit(_dump(out), args.out)
    return 0


def cmd_constants(args) -> int:
    mdp, spec, ref, u, rho = _problem(args)
    const = table1_constants(spec, ref, as_printed=args.as_printed)
    out = {
        "divergence": spec.label, "lambda": args.lam, "gamma": mdp.gamma,
        "c_f1": const.c_f1, "c_f2": const.c_f2, "m_s": const.m_s.tolist(), "c_m": const.c_m,
        "c_ref": const.c_ref, "c_u": float(u.min()),
        "unregularized_smoothness": unregularized_smoothness(mdp),
    }
    pi_star = None
    if args.oracle_file:
        with open(args.oracle_file) as fh:
            data = json.load(fh)
        pi_star = PolicyTable.from_probs(np.array(data["pi_star"], dtype=float))
        if pi_star.shape != mdp.reward.shape:
            raise UsageError("oracle pi_star shape does not match the MDP")
        star = evaluate_policy(mdp, pi_star, ref, spec, args.lam, u)
        out["v_star_u"] = star.value(u)
        out["v_star_rho"] = star.value(rho)
    if spec.kind == "forward_kl":
        out["step_budget"] = step_budget_forward_kl(mdp, ref, args.lam, u, args.eps_l, args.eps_h,
                                                    pi_star=pi_star).to_dict()
    elif spec.kind == "reverse_kl":
        out["smoothness_reverse_kl"] = smoothness_reverse_kl(mdp, ref, args.lam)
        out["step_budget"] = step_budget_reverse_kl(mdp, ref, args.lam, PolicyTable.from_probs(ref),
                                                    args.eps_l, args.eps_h, u=u,
                                                    pi_star=pi_star).to_dict()
    _emit(_dump(out), args.out)
    return 0


COMMANDS = {"random-mdp": cmd_random_mdp, "train": cmd_train, "check": cmd_check,
            "oracle": cmd_oracle, "constants": cmd_constants}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, InvalidMdpError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OracleError as exc:
        print(f"oracle failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
