"""``cohesive`` command-line tool.

Exit codes: 0 success or no violation, 1 counterexample or oracle
disagreement found, 2 bad input or usage.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

import numpy as np

from . import group, oracle, risk
from .errors import CohesiveError, PreconditionError
from .measure import ProbSpace
from .modelio import (
    Model,
    ModelError,
    capital_report_to_dict,
    dump_yaml,
    encode,
    instance_to_dict,
    load_model,
    to_json,
)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


class UsageError(CohesiveError):
    pass


def fmt(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    if isinstance(value, np.ndarray):
        if value.ndim == 2:
            return "[" + ", ".join(fmt(row) for row in value) + "]"
        return "(" + ", ".join(fmt(v) for v in value) + ")"
    if isinstance(value, (list, tuple)):
        return "(" + ", ".join(fmt(v) for v in value) + ")"
    return str(value)


def table(rows: list) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {fmt(v)}" for k, v in rows)


def emit(args, doc: dict, rows: list, out=None) -> None:
    out = out or sys.stdout
    if args.format == "json":
        print(to_json(doc), file=out)
    else:
        print(table(rows), file=out)


def _parse_xi(text: str, space: ProbSpace) -> np.ndarray:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != space.n_atoms:
        raise ModelError(f"expected {space.n_atoms} values, got {len(parts)}", field="--xi")
    try:
        return space.var([Fraction(p.strip()) for p in parts])
    except (ValueError, ZeroDivisionError):
        raise ModelError(f"cannot read {text!r} as numbers", field="--xi") from None


def _model(args) -> Model:
    if args.input is None:
        raise UsageError("--input is required for this command")
    model = load_model(args.input, mode=args.mode, tol=args.tol)
    for note in model.notes:
        print(f"note: {note}", file=sys.stderr)
    if args.seed is not None:
        model.options.seed = args.seed
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        model.options.trials = args.trials
    return model


def _liabilities(model: Model) -> group.LiabilityVector:
    if model.X is None:
        raise ModelError("missing required field 'liabilities'", field="liabilities")
    return model.X


def _as_band(sset):
    if isinstance(sset, risk.AVaR):
        return sset.as_band()
    return sset if isinstance(sset, risk.Band) else None


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------

def cmd_eval(args) -> int:
    model = _model(args)
    space = model.space
    if args.xi is not None:
        xi = _parse_xi(args.xi, space)
    elif model.xi is not None:
        xi = model.xi
    else:
        raise ModelError("no random variable: give 'xi' in the model or --xi", field="xi")
    value, witness = risk.rho_eval(space, model.sset, xi)
    doc = {"rho": value, "witness": witness}
    rows = [("rho", value), ("witness", witness)]
    band = _as_band(model.sset)
    if band is not None and band.h > 1:
        split = risk.band_split(space, band.L, band.H, xi)
        doc.update(q=split.q, c=split.c)
        rows += [("q", split.q), ("c", split.c)]
        if 0 < band.ell < 1:
            lower, upper = risk.lh_decomposition(space, band.L, band.H, xi)
            doc["decomposition"] = [lower, upper]
            rows.append(("decomposition", (lower, upper)))
    emit(args, doc, rows)
    return EXIT_OK


def _report_rows(report) -> list:
    return [
        ("K_aggregate", report.K_aggregate),
        ("K_group", report.K_group),
        ("gap", report.gap),
        ("alphas", report.alphas),
        ("witness", report.witness),
        ("residuals", report.residuals),
        ("payoff", report.payoff),
        ("payoff_kind", report.payoff_kind),
        ("cohesive", report.cohesion_holds),
        ("cohesion_condition", report.cohesion_condition),
        ("comonotonic_set", report.comonotonic_set),
    ]


def cmd_capital(args) -> int:
    model = _model(args)
    report = group.minimal_group_capital(model.space, model.sset, _liabilities(model))
    emit(args, capital_report_to_dict(report), _report_rows(report))
    return EXIT_OK


def cmd_payoffs(args) -> int:
    model = _model(args)
    space, sset, X = model.space, model.sset, _liabilities(model)
    report = group.minimal_group_capital(space, sset, X)
    std = group.standard_payoff(X, report.K_aggregate, report.alphas)
    verdict = group.verify_offsetting(space, sset, X, std, group_capital=report.K_group)
    doc = {
        "K_aggregate": report.K_aggregate,
        "alphas": report.alphas,
        "standard_payoff": std.Y,
        "standard_residuals": verdict.residuals,
        "conditions": {
            "acceptable": verdict.acceptable,
            "zero_residuals": verdict.zero_residuals,
            "additive_centered": verdict.additive_centered,
            "minimal": verdict.minimal,
        },
        "K_group": report.K_group,
        "group_payoff": report.payoff,
        "group_payoff_kind": report.payoff_kind,
        "group_residuals": report.residuals,
    }
    rows = [
        ("K_aggregate", report.K_aggregate),
        ("alphas", report.alphas),
        ("standard_payoff", std.Y),
        ("standard_residuals", verdict.residuals),
        ("acceptable", verdict.acceptable),
        ("zero_residuals", verdict.zero_residuals),
        ("additive_centered", verdict.additive_centered),
        ("minimal", verdict.minimal),
        ("K_group", report.K_group),
        ("group_payoff", report.payoff),
        ("group_payoff_kind", report.payoff_kind),
        ("group_residuals", report.residuals),
    ]
    emit(args, doc, rows)
    return EXIT_OK


def _certify_fixed(args, model: Model) -> int:
    band = _as_band(model.sset)
    if band is None:
        raise PreconditionError("fixed-Z certification needs a band or avar scenario set")
    n_units = model.X.n_units if model.X is not None else 2
    verdict = group.fixed_liability_cohesion(model.space, band.L, band.H, model.Z,
                                             trials=model.options.trials, n_units=n_units,
                                             seed=model.options.seed)
    doc = {"mode": "fixed-Z", "status": verdict.status, "rho_Z": verdict.rho_Z,
           "q": verdict.q, "sufficient_condition": verdict.sufficient_condition,
           "trials": verdict.trials}
    rows = [("mode", "fixed-Z"), ("status", verdict.status), ("rho(-Z)", verdict.rho_Z),
            ("q(-Z)", verdict.q), ("sufficient_condition", verdict.sufficient_condition),
            ("trials", verdict.trials)]
    if verdict.failures:
        t, X, K = verdict.failures[0]
        doc["counterexample"] = instance_to_dict(model.space, model.sset, X,
                                                 found={"trial": t, "K_group": K})
        rows.append(("counterexample", f"trial {t}"))
    emit(args, doc, rows)
    if verdict.failures and args.format != "json":
        print(dump_yaml(doc["counterexample"]))
    return EXIT_VIOLATION if verdict.failures else EXIT_OK


def cmd_certify(args) -> int:
    model = _model(args)
    if model.Z is not None:
        return _certify_fixed(args, model)
    space, sset = model.space, model.sset
    rng = np.random.default_rng(model.options.seed)
    n_units = model.X.n_units if model.X is not None else 2
    candidates = []
    if model.X is not None:
        candidates.append(("model", model.X))
    for t in range(model.options.trials):
        X = oracle.random_liabilities(rng, n_units, space.n_atoms, 6, 0.3)
        candidates.append((t, group.LiabilityVector(space, X)))
    checked = 0
    for label, X in candidates:
        report = group.minimal_group_capital(space, sset, X)
        checked += 1
        if not report.cohesion_holds:
            dump = instance_to_dict(space, sset, X, found={
                "trial": label, "K_aggregate": report.K_aggregate, "K_group": report.K_group})
            doc = {"verdict": "counterexample", "trial": label, "checked": checked,
                   "report": capital_report_to_dict(report), "instance": dump}
            rows = [("verdict", "counterexample"), ("trial", label), ("checked", checked)]
            rows += _report_rows(report)
            emit(args, doc, rows)
            if args.format != "json":
                print("\ninstance:\n" + dump_yaml(dump))
            return EXIT_VIOLATION
    doc = {"verdict": "no violation found", "checked": checked}
    emit(args, doc, [("verdict", "no violation found"), ("checked", checked)])
    return EXIT_OK


def _oracle_compare(space, sset, X, xis) -> dict:
    out = {"rho_checks": 0, "rho_mismatches": [], "capital": None}
    for xi in xis:
        out["rho_checks"] += 1
        a = risk.rho(space, sset, xi)
        b = oracle.enumerated_rho(space, sset, xi)
        if not space.eq(a, b):
            out["rho_mismatches"].append({"xi": xi, "rho": a, "enumerated": b})
    if X is not None and space.n_atoms <= 3 and X.n_units == 2:
        exact = group.minimal_group_capital(space, sset, X).K_group
        brute = oracle.brute_force_capital(space, sset, X)
        ok = abs(float(exact) - brute) <= 1e-3
        out["capital"] = {"K_group": exact, "brute_force": brute, "agree": ok}
    return out


def _oracle_ok(res: dict) -> bool:
    return not res["rho_mismatches"] and (res["capital"] is None or res["capital"]["agree"])


def cmd_oracle_check(args) -> int:
    if args.input is not None:
        model = _model(args)
        space, sset, X = model.space, model.sset, model.X
        xis = []
        if model.xi is not None:
            xis.append(model.xi)
        if X is not None:
            xis += [-X.total] + [-row for row in X.X]
        if not xis:
            raise ModelError("nothing to check: give 'xi' or 'liabilities'")
        res = _oracle_compare(space, sset, X, xis)
        doc = dict(res, passed=_oracle_ok(res))
        rows = [("rho_checks", res["rho_checks"]),
                ("rho_mismatches", len(res["rho_mismatches"]))]
        if res["capital"] is not None:
            rows += [("K_group", res["capital"]["K_group"]),
                     ("brute_force", res["capital"]["brute_force"])]
        rows.append(("passed", doc["passed"]))
        emit(args, doc, rows)
        return EXIT_OK if doc["passed"] else EXIT_VIOLATION

    trials = 20 if args.trials is None else args.trials
    if trials < 1:
        raise UsageError("--trials must be at least 1")
    seed = 0 if args.seed is None else args.seed
    kinds = ("band0", "band", "vertices", "avar")
    failures = []
    for t in range(trials):
        spec = oracle.InstanceSpec(n_atoms=1 + t % 3, kind=kinds[t % 4], max_value=4,
                                   seed=seed + t, exact=args.mode != "float")
        space, sset, X = oracle.random_instance(spec)
        res = _oracle_compare(space, sset, X, [-X.total] + [-row for row in X.X])
        if not _oracle_ok(res):
            failures.append({"trial": t, "seed": seed + t,
                             "instance": instance_to_dict(space, sset, X), "result": res})
    doc = {"trials": trials, "failures": failures, "passed": not failures}
    rows = [("trials", trials), ("failures", len(failures)), ("passed", not failures)]
    emit(args, doc, rows)
    return EXIT_VIOLATION if failures else EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-i", "--input", help="model file (YAML)")
    common.add_argument("--mode", choices=("exact", "float"), help="override arithmetic mode")
    common.add_argument("--tol", type=float, help="comparison tolerance in float mode")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--format", choices=("table", "json"), default="table",
                        help="output format (default: table)")

    parser = argparse.ArgumentParser(
        prog="cohesive", description="Coherent risk measures and group capital.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate rho(xi) and its witness")
    p.add_argument("--xi", help="comma-separated values, one per atom")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("capital", parents=[common], help="aggregate and minimal group capital")
    p.set_defaults(func=cmd_capital)

    p = sub.add_parser("payoffs", parents=[common],
                       help="standard payoff at the aggregate capital and its offsetting checks")
    p.set_defaults(func=cmd_payoffs)

    p = sub.add_parser("certify", parents=[common],
                       help="search random liabilities (or splits of Z) for a cohesion failure")
    p.add_argument("--trials", type=int, help="number of random trials")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("oracle-check", parents=[common],
                       help="compare closed forms against brute-force oracles")
    p.add_argument("--trials", type=int, help="random tiny instances when no model is given")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (CohesiveError, ValueError) as exc:
        kind = "usage error" if isinstance(exc, UsageError) else "input error"
        print(f"{kind}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
