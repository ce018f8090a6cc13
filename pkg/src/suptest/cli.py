"""Command-line front end.

Three subcommands:

    run       apply one method to a CSV of p-values
    simulate  run a scenario file or a packaged preset, emit metrics CSV
    privacy   budget conversions and noise-scale calibration

Exit codes: 0 success, 2 usage or data error, 1 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Optional

import numpy as np

from .adaptive import adaptive_sup_test
from .baselines import classic_procedure, dp_bh, dp_bonf
from .numerics import RandomStream
from .privacy import (
    calibrate_peeling_scales,
    experiment_mu,
    gdp_to_approx_dp_delta,
)
from .simulate import (
    METHOD_NAMES,
    MethodSpec,
    SimScenario,
    _adaptive_config,
    _dwork_params,
    _sup_config,
    desk_scenario,
    full_scenario,
    run_replications,
)
from .thresholds import sup_test

__all__ = ["main", "UsageError"]


class UsageError(Exception):
    """Bad flags or bad input data; mapped to exit code 2."""


# ---------------------------------------------------------------- run

def _parse_pvalue_csv(text: str):
    """Returns (ids, pvals) from `id,p` / `p` CSV or a headerless column."""
    numbered = [(i, line.strip()) for i, line in enumerate(text.splitlines(), 1)
                if line.strip()]
    if not numbered:
        raise UsageError("no p-values in input")

    first_fields = [f.strip() for f in numbered[0][1].split(",")]
    header = "p" in [f.lower() for f in first_fields]
    if header:
        cols = [f.lower() for f in first_fields]
        p_col = cols.index("p")
        id_col = cols.index("id") if "id" in cols else None
        data = numbered[1:]
    else:
        p_col, id_col = 0, None
        data = numbered
    if not data:
        raise UsageError("no p-values in input")

    ids, pvals = [], []
    for ln, line in data:
        fields = [f.strip() for f in line.split(",")]
        if len(fields) <= p_col:
            raise UsageError(f"line {ln}: expected at least {p_col + 1} fields")
        try:
            p = float(fields[p_col])
        except ValueError:
            raise UsageError(f"line {ln}: cannot parse p-value {fields[p_col]!r}")
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"line {ln}: p-value {p!r} outside [0, 1]")
        pvals.append(p)
        ids.append(fields[id_col] if id_col is not None else str(len(ids) + 1))
    return ids, np.asarray(pvals)


def _run_options(args) -> dict:
    opts = {"noise": args.noise, "gs": args.gs, "m_peel": args.m_peel}
    for key in ("mu", "eps", "delta", "tau", "c0", "rho", "m_tilde", "c",
                "eta", "nu", "sigma0", "sigma1"):
        val = getattr(args, key)
        if val is not None:
            opts[key] = val
    return opts


def cmd_run(args) -> int:
    if args.method not in METHOD_NAMES:
        raise UsageError(f"unknown method {args.method!r}")
    try:
        text = open(args.input, encoding="utf-8").read()
    except OSError as e:
        raise UsageError(f"cannot read {args.input}: {e.strerror}")
    ids, pvals = _parse_pvalue_csv(text)

    name, alpha, opts = args.method, args.alpha, _run_options(args)
    noisy = {}
    pi0_hat_val = None
    budget_echo = []
    if name in ("bh", "by", "bonf", "holm"):
        rejected = classic_procedure(pvals, name, alpha)
        j_star, m_used = rejected.size, pvals.size
        noisy = {i: float(pvals[i]) for i in range(pvals.size)}
    elif name.startswith(("sup-", "asup-")):
        if name.startswith("sup-"):
            cfg = _sup_config(name[4:], alpha, opts)
            cfg = dataclasses.replace(cfg, seed=args.seed)
            result = sup_test(pvals, cfg)
            m_used = cfg.m_peel
        else:
            cfg = _sup_config(name[5:], alpha, opts)
            cfg = dataclasses.replace(cfg, seed=args.seed)
            result = adaptive_sup_test(pvals, cfg, _adaptive_config(opts))
            m_used = result.adaptive_info.m_star
            pi0_hat_val = result.adaptive_info.pi0_hat
        rejected = result.rejected_indices
        j_star = result.j_star
        peel = result.peeled
        noisy = {int(i): float(v)
                 for i, v in zip(peel.peeled_indices, peel.inference_pvals)}
        budget_echo = _budget_parts(cfg.budget)
    else:
        params = _dwork_params(alpha, pvals.size, opts)
        stream = RandomStream(args.seed)
        if name == "dp-bh":
            rejected = dp_bh(pvals, params, alpha, stream)
            m_used = params.m_peel
        else:
            rejected = dp_bonf(pvals, params, alpha, stream)
            m_used = pvals.size
        j_star = rejected.size
        budget_echo = [f"eps={params.eps!r}", f"delta={params.delta!r}"]

    rejected_set = set(int(i) for i in rejected)
    lines = ["id,p,noisy_p,rejected"]
    for i, (rid, p) in enumerate(zip(ids, pvals)):
        np_field = repr(noisy[i]) if i in noisy else ""
        lines.append(f"{rid},{float(p)!r},{np_field},{1 if i in rejected_set else 0}")
    parts = [f"method={name}", f"alpha={alpha!r}", f"j_star={j_star}",
             f"m_peel={m_used}"]
    if pi0_hat_val is not None:
        parts.append(f"pi0_hat={pi0_hat_val!r}")
    parts.extend(budget_echo)
    if name not in ("bh", "by", "bonf", "holm"):
        parts.append(f"seed={args.seed}")
    summary = "# " + " ".join(parts)
    lines.append(summary)
    out = "\n".join(lines) + "\n"

    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
        print(summary)
    else:
        sys.stdout.write(out)
    return 0


def _budget_parts(budget) -> list:
    if budget.kind == "gdp":
        return [f"mu={budget.mu!r}"]
    return [f"eps={budget.eps!r}", f"delta={budget.delta!r}"]


# ---------------------------------------------------------------- simulate

_SCENARIO_INT = ("m", "m1", "block_size", "reps", "seed")
_SCENARIO_FLOAT = ("theta_signal", "block_rho", "alpha")
_SCENARIO_STR = ("null_mode", "dependence")


def _coerce(val: str):
    for conv in (int, float):
        try:
            return conv(val)
        except ValueError:
            pass
    return val


def _parse_scenario_file(text: str) -> SimScenario:
    entries, errors = {}, []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            errors.append(f"line {ln}: expected key=value")
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in entries:
            errors.append(f"line {ln}: duplicate key {key!r}")
        entries[key] = val

    labels = []
    if "methods" not in entries:
        errors.append("missing required key 'methods'")
    else:
        labels = [s.strip() for s in entries.pop("methods").split(",") if s.strip()]
        if not labels:
            errors.append("'methods' lists no methods")

    kwargs = {}
    options = {label: {} for label in labels}
    for key, val in entries.items():
        if "." in key:
            label, _, opt = key.partition(".")
            if label not in options:
                errors.append(f"option {key!r} references unlisted method {label!r}")
                continue
            options[label][opt] = _coerce(val)
        elif key in _SCENARIO_INT or key in _SCENARIO_FLOAT or key in _SCENARIO_STR:
            conv = int if key in _SCENARIO_INT else (
                float if key in _SCENARIO_FLOAT else str)
            try:
                kwargs[key] = conv(val)
            except ValueError:
                errors.append(f"key {key!r}: cannot parse value {val!r}")
        else:
            errors.append(f"unknown key {key!r}")

    specs = []
    for label in labels:
        opts = dict(options[label])
        name = str(opts.pop("method", label))
        try:
            specs.append(MethodSpec(name=name, label=label, options=opts))
        except ValueError as e:
            errors.append(f"method {label!r}: {e}")

    if errors:
        raise UsageError("invalid scenario:\n  " + "\n  ".join(errors))
    try:
        return SimScenario(methods=tuple(specs), **kwargs)
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid scenario: {e}")


def cmd_simulate(args) -> int:
    if bool(args.scenario) == bool(args.preset):
        raise UsageError("provide exactly one of --scenario or --preset")
    if args.scenario:
        try:
            text = open(args.scenario, encoding="utf-8").read()
        except OSError as e:
            raise UsageError(f"cannot read {args.scenario}: {e.strerror}")
        scenario = _parse_scenario_file(text)
    else:
        scenario = desk_scenario() if args.preset == "desk" else full_scenario()
    overrides = {k: getattr(args, k) for k in ("m", "m1", "reps", "seed")
                 if getattr(args, k) is not None}
    if overrides:
        try:
            scenario = dataclasses.replace(scenario, **overrides)
        except ValueError as e:
            raise UsageError(f"invalid scenario: {e}")

    csv = run_replications(scenario).to_csv()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    return 0


# ---------------------------------------------------------------- privacy

def cmd_privacy(args) -> int:
    if args.op == "mu-to-delta":
        print(f"delta={gdp_to_approx_dp_delta(args.mu, args.eps):.10g}")
    elif args.op == "eps-to-mu":
        print(f"mu={experiment_mu(args.eps, args.delta):.10g}")
    else:  # calibrate
        if args.mu is not None:
            mu = args.mu
        elif args.eps is not None and args.delta is not None:
            mu = experiment_mu(args.eps, args.delta)
        else:
            raise UsageError("calibrate needs --mu, or --eps with --delta")
        scales = calibrate_peeling_scales(mu, args.gs, args.m_peel)
        print(f"sigma0={scales.sigma0:.10g}")
        print(f"sigma1={scales.sigma1:.10g}")
    return 0


# ---------------------------------------------------------------- parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="suptest",
        description="Differentially private multiple testing with "
                    "super-uniform noisy p-values.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one method on a CSV of p-values")
    run.add_argument("--input", required=True)
    run.add_argument("--output", default=None)
    run.add_argument("--method", required=True)
    run.add_argument("--alpha", type=float, default=0.1)
    run.add_argument("--mu", type=float, default=None)
    run.add_argument("--eps", type=float, default=None)
    run.add_argument("--delta", type=float, default=None)
    run.add_argument("--noise", choices=("gaussian", "laplace"), default="gaussian")
    run.add_argument("--gs", type=float, default=1e-4)
    run.add_argument("--m-peel", dest="m_peel", type=int, default=200)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--tau", type=float, default=None)
    run.add_argument("--c0", type=float, default=None)
    run.add_argument("--rho", type=float, default=None)
    run.add_argument("--m-tilde", dest="m_tilde", type=int, default=None)
    run.add_argument("--c", type=float, default=None)
    run.add_argument("--eta", type=float, default=None)
    run.add_argument("--nu", type=float, default=None)
    run.add_argument("--sigma0", type=float, default=None)
    run.add_argument("--sigma1", type=float, default=None)
    run.set_defaults(func=cmd_run)

    sim = sub.add_parser("simulate", help="run a simulation scenario")
    sim.add_argument("--scenario", default=None)
    sim.add_argument("--preset", choices=("desk", "full"), default=None)
    sim.add_argument("--output", default=None)
    sim.add_argument("--m", type=int, default=None)
    sim.add_argument("--m1", type=int, default=None)
    sim.add_argument("--reps", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.set_defaults(func=cmd_simulate)

    priv = sub.add_parser("privacy", help="budget conversions and calibration")
    pop = priv.add_subparsers(dest="op", required=True)
    p1 = pop.add_parser("mu-to-delta")
    p1.add_argument("--mu", type=float, required=True)
    p1.add_argument("--eps", type=float, required=True)
    p2 = pop.add_parser("eps-to-mu")
    p2.add_argument("--eps", type=float, required=True)
    p2.add_argument("--delta", type=float, required=True)
    p3 = pop.add_parser("calibrate")
    p3.add_argument("--mu", type=float, default=None)
    p3.add_argument("--eps", type=float, default=None)
    p3.add_argument("--delta", type=float, default=None)
    p3.add_argument("--gs", type=float, default=1e-4)
    p3.add_argument("--m-peel", dest="m_peel", type=int, default=200)
    for p in (p1, p2, p3):
        p.set_defaults(func=cmd_privacy)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {e}", file=sys.stderr)
        return 1
