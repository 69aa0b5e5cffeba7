"""Command-line front door.

Subcommands: fit, tune, diagnose, simulate, kkt.  All results are emitted
as a single JSON document on stdout (or to --output).  Exit codes:

  0  success
  1  input error (bad file, bad flags, mismatched loss/response)
  2  hypothesis or guarantee check failed under --require-pass/--require-meets
  3  solver did not converge within the iteration budget

Variables are reported 1-based and by column name; internal indices are
0-based.  Randomized commands take --seed and default to a fixed constant.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import diagnostics, experiments, tuning
from .data import gram, load_csv, standardize, to_raw_scale, weighted_gram
from .errors import SparseSelectError
from .solvers import FitOptions, PenaltySpec, fit, kkt_check

DEFAULT_SEED = 20210521

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_HYPOTHESIS = 2
EXIT_NOT_CONVERGED = 3


def _emit(obj, output=None):
    text = json.dumps(obj, indent=2, allow_nan=True)
    if output:
        with open(output, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def _parse_floats(text):
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as f:
            return np.asarray(json.load(f), dtype=float)
    return np.asarray([float(t) for t in text.split(",") if t.strip()], dtype=float)


def _parse_support(text, names):
    """Support given as comma-separated column names or 1-based indices."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok in names:
            out.append(names.index(tok))
        else:
            idx = int(tok)
            if not 1 <= idx <= len(names):
                raise ValueError(f"support index {idx} out of range 1..{len(names)}")
            out.append(idx - 1)
    if not out:
        raise ValueError("empty support")
    return sorted(set(out))


def _load_dataset(args, need_response=True):
    response = getattr(args, "response", None)
    x_raw, y, names = load_csv(args.input, response if need_response else None)
    if need_response and y is None:
        raise ValueError("a response column is required")
    if y is None:
        y = np.zeros(x_raw.shape[0])
    kind = "binary" if np.all((y == 0.0) | (y == 1.0)) else "real"
    return standardize(x_raw, y, kind, sigma=getattr(args, "sigma", None), column_names=names)


def _method_spec(method, r, c):
    loss = tuning.loss_of(method)
    if tuning.is_elastic(method):
        if c is None:
            raise ValueError(f"method {method} requires --c")
    else:
        c = 0.0
    return PenaltySpec(loss=loss, r=r, c=c)


def cmd_fit(args) -> int:
    ds = _load_dataset(args)
    spec = _method_spec(args.method, args.r, args.c)
    result = fit(ds, spec, FitOptions(max_iter=args.max_iter, kkt_tol=args.kkt_tol))
    raw_coefs, raw_intercept = to_raw_scale(ds, result.beta_hat)
    names = ds.column_names
    payload = {
        "method": args.method,
        "n": ds.n,
        "n_features": ds.n_features,
        "r": args.r,
        "c": spec.c,
        "converged": result.converged,
        "iterations": result.iterations,
        "kkt_residual": result.kkt_residual,
        "objective": result.objective,
        "support": [j + 1 for j in result.support],
        "support_names": [names[j] for j in result.support],
        "coefficients_standardized": dict(zip(names, result.beta_hat.tolist())),
        "coefficients_raw": dict(zip(names, raw_coefs.tolist())),
        "intercept_raw": raw_intercept,
    }
    _emit(payload, args.output)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_tune(args) -> int:
    method = args.method
    r = tuning.r_for(
        method, args.n, args.n_features, args.delta,
        kind=args.kind, l_bound=args.l_bound, sigma=args.sigma, k_upper=args.k_upper,
    )
    payload = {
        "method": method,
        "n": args.n,
        "n_features": args.n_features,
        "delta": args.delta,
        "k_upper": args.k_upper,
        "r": r,
    }
    logistic = tuning.loss_of(method) == "logistic"
    epsilon = tuning.epsilon_tech(args.n, args.n_features, r) if logistic else 0.0
    payload["epsilon"] = epsilon
    s = 1.0
    if logistic and args.d_bound is not None:
        s = tuning.s_const(args.l_bound, args.d_bound)
        payload["s"] = s
    c = 0.0
    if args.b_bound is not None:
        c = tuning.c_for(r, args.b_bound)
        payload["c"] = c
        if logistic:
            payload["c_selection_logistic"] = tuning.c_for_selection_logistic(r, args.b_bound)
    if args.d is not None:
        b = diagnostics.b_from_d(args.d, tuning.alpha_for(method), epsilon)
        payload["b_from_d"] = b
        if args.k_star is not None:
            payload["ball_radius"] = tuning.ball_radius(
                method, r, c, args.k_star, b, s=s, epsilon=epsilon
            )
            payload["signal_threshold_large"] = payload["ball_radius"]
    payload["signal_threshold_weak"] = tuning.signal_threshold(
        method, tuning.REGIME_WEAK, r, c=c, s=s, epsilon=epsilon
    )
    payload["d_limit"] = tuning.d_limit(method, s=s, c=c, epsilon=epsilon)
    _emit(payload, args.output)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    ds = _load_dataset(args, need_response=False)
    names = list(ds.column_names)
    support = _parse_support(args.support, names)
    gm = gram(ds)
    identif = diagnostics.check_identif(gm, support, args.d)
    payload = {
        "n": ds.n,
        "n_features": ds.n_features,
        "support": [j + 1 for j in support],
        "support_names": [names[j] for j in support],
        "d": args.d,
        "identif": {
            "max_coherence": identif.max_coherence,
            "threshold": args.d / len(support),
            "passes": identif.passes,
            "margin": identif.margin,
        },
    }
    b_val = args.b
    if b_val is None:
        try:
            b_val = diagnostics.b_from_d(args.d, args.alpha, args.epsilon)
        except SparseSelectError as exc:
            payload["stabil"] = {"error": str(exc)}
    stabil = None
    if b_val is not None:
        stabil = diagnostics.check_stabil(
            gm, support, args.alpha, args.epsilon, b_val,
            sample_count=args.samples, seed=args.seed,
        )
        payload["stabil"] = _stabil_payload(stabil)
        if args.weights_beta is not None:
            beta = _parse_floats(args.weights_beta)
            wg = weighted_gram(ds, beta)
            lst = diagnostics.check_lstabil(
                wg, support, args.alpha, args.epsilon, b_val,
                sample_count=args.samples, seed=args.seed,
            )
            payload["lstabil"] = _stabil_payload(lst)

    _emit(payload, args.output)
    failed = (not identif.passes) or (
        stabil is not None and stabil.status == diagnostics.STATUS_CERTIFIED_FAIL
    )
    if args.require_pass and failed:
        return EXIT_HYPOTHESIS
    return EXIT_OK


def _stabil_payload(rep):
    return {
        "b": rep.b,
        "alpha": rep.alpha,
        "epsilon": rep.epsilon,
        "b_implied": rep.b_implied,
        "sufficient_eig_ok": rep.sufficient_eig_ok,
        "min_eig_shifted": rep.min_eig_shifted,
        "sample_violations": rep.sample_violations,
        "sample_count": rep.sample_count,
        "status": rep.status,
    }


def cmd_simulate(args) -> int:
    cfg = experiments.load_config(args.config)
    overrides = {}
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)

    if args.sweep:
        multipliers = [float(t) for t in args.sweep.split(",") if t.strip()]
        rows = experiments.sweep_signal_multiplier(cfg, multipliers)
        lines = ["multiplier,p_exact,ci_half_width"]
        for mult, rep in rows:
            lines.append(f"{mult},{rep.p_exact},{rep.ci_half_width}")
        text = "\n".join(lines) + "\n"
        if args.sweep_output:
            with open(args.sweep_output, "w", encoding="utf-8") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
        report = rows[-1][1]
    else:
        report = experiments.run_mc(cfg)
        _emit(report.to_json_dict(), args.output)

    if args.per_rep:
        experiments.write_replication_csv(args.per_rep, report)
    if args.require_meets and report.verdict == experiments.VERDICT_FAILS:
        return EXIT_HYPOTHESIS
    return EXIT_OK


def cmd_kkt(args) -> int:
    ds = _load_dataset(args)
    spec = _method_spec(args.method, args.r, args.c)
    beta = _parse_floats(args.beta)
    report = kkt_check(ds, beta, spec)
    names = list(ds.column_names)
    payload = {
        "method": args.method,
        "r": args.r,
        "c": spec.c,
        "max_violation": report.max_violation,
        "per_coordinate": [
            {
                "name": names[j],
                "index": j + 1,
                "gradient": float(report.gradient[j]),
                "active": bool(report.active[j]),
                "violation": float(report.violation[j]),
            }
            for j in range(len(names))
        ],
    }
    _emit(payload, args.output)
    if args.require_pass and report.max_violation > args.tol:
        return EXIT_HYPOTHESIS
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sparseselect",
        description="Penalized sparse regression: fits, tuning constants, "
        "design diagnostics, and Monte Carlo guarantee checks.",
    )
    sub = p.add_subparsers(dest="subcommand", required=True)

    def add_io(sp, response=True):
        sp.add_argument("--input", required=True, help="CSV with a header row")
        if response:
            sp.add_argument("--response", required=True, help="response column name")
        sp.add_argument("--output", help="write JSON here instead of stdout")

    sp = sub.add_parser("fit", help="fit one penalized estimator on CSV data")
    add_io(sp)
    sp.add_argument("--method", required=True, choices=tuning.METHODS)
    sp.add_argument("--r", type=float, required=True, help="l1 penalty level")
    sp.add_argument("--c", type=float, help="l2 penalty level (enet methods)")
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--max-iter", type=int, default=100_000)
    sp.add_argument("--kkt-tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("tune", help="evaluate the closed-form constants")
    sp.add_argument("--method", required=True, choices=tuning.METHODS)
    sp.add_argument("--kind", choices=["binary", "real"])
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--M", dest="n_features", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--L", dest="l_bound", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--K", dest="k_upper", type=int, help="selection mode: sparsity bound")
    sp.add_argument("--B", dest="b_bound", type=float, help="sup-norm bound on beta*")
    sp.add_argument("--D", dest="d_bound", type=float, help="l1 bound on beta*")
    sp.add_argument("--k-star", type=int)
    sp.add_argument("--d", type=float, help="coherence constant for the d -> b bridge")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_tune)

    sp = sub.add_parser("diagnose", help="check the design-matrix conditions")
    add_io(sp, response=False)
    sp.add_argument("--response", help="optional response column to exclude")
    sp.add_argument("--support", required=True,
                    help="comma-separated column names or 1-based indices")
    sp.add_argument("--d", type=float, required=True)
    sp.add_argument("--alpha", type=float, default=3.0)
    sp.add_argument("--epsilon", type=float, default=0.0)
    sp.add_argument("--b", type=float, help="override the d -> b bridge value")
    sp.add_argument("--samples", type=int, default=20_000)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--weights-beta", help="also check the weighted gram at this beta "
                                           "(comma floats or @file.json)")
    sp.add_argument("--require-pass", action="store_true")
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("simulate", help="run a Monte Carlo guarantee check")
    sp.add_argument("--config", required=True, help="experiment config JSON")
    sp.add_argument("--replications", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--output")
    sp.add_argument("--per-rep", help="write per-replication CSV here")
    sp.add_argument("--sweep", help="comma-separated signal multipliers; emits plot CSV")
    sp.add_argument("--sweep-output")
    sp.add_argument("--require-meets", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("kkt", help="evaluate the subgradient certificate at a given beta")
    add_io(sp)
    sp.add_argument("--method", required=True, choices=tuning.METHODS)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--c", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--beta", required=True, help="comma floats or @file.json")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--require-pass", action="store_true")
    sp.set_defaults(func=cmd_kkt)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the input-error code
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (SparseSelectError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main_entry():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
