"""Command-line front end: ``mdl verify | simulate | bound | decay``.

Exit codes: 0 success, 1 a verification cell failed (or a decay trend was
not observed), 2 malformed input or an exhausted resource budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import bound_engine as be
from . import rng as rngmod
from .config import FORMATS, ConfigError, load_config
from .errors import AnalyticTailUnavailable, DomainError, InputError, ResourceError
from .mc_estimator import estimate_max_tails
from .process_zoo import FieldModel, model_from_dict, sample_field, sample_path
from .tails import parse_tail
from .verify_harness import BoundReport, DecayReport, Scenario, check_decay, run_scenario

CSV_COLUMNS = ("scenario_id", "theorem", "n", "x", "lhs_point", "lhs_ci_lo", "lhs_ci_hi",
               "rhs", "rhs_err", "ratio", "status")
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
USER_ERRORS = (InputError, DomainError, ResourceError, AnalyticTailUnavailable)


# --- serialization ----------------------------------------------------------------------


def fmt_float(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def fmt_n(n) -> str:
    if isinstance(n, (tuple, list)):
        return "x".join(str(int(v)) for v in n)
    return str(n)


def report_rows(report: BoundReport) -> list[list[str]]:
    rows = []
    for c in report.cells:
        lhs = c.lhs
        rows.append([report.scenario_id, report.theorem, fmt_n(c.n), fmt_float(c.x),
                     fmt_float(lhs.point if lhs else None),
                     fmt_float(lhs.ci_low if lhs else None),
                     fmt_float(lhs.ci_high if lhs else None),
                     fmt_float(c.rhs), fmt_float(c.rhs_err), fmt_float(c.ratio), c.status])
    return rows


def reports_csv(reports: Sequence[BoundReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerows(report_rows(r))
    return buf.getvalue()


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def report_json(report: BoundReport) -> str:
    cells = []
    for c in report.cells:
        lhs = None
        if c.lhs is not None:
            lhs = {"point": c.lhs.point, "ci_lo": c.lhs.ci_low, "ci_hi": c.lhs.ci_high,
                   "exceedances": c.lhs.exceedances, "trials": c.lhs.trials,
                   "exact": c.lhs.exact, "confidence": c.lhs.confidence}
            lhs = {k: _finite(v) for k, v in lhs.items()}
        cells.append({"n": list(c.n) if isinstance(c.n, tuple) else c.n, "x": c.x,
                      "threshold": _finite(c.threshold), "lhs": lhs, "rhs": _finite(c.rhs),
                      "rhs_err": _finite(c.rhs_err), "ratio": _finite(c.ratio),
                      "status": c.status, "note": c.note})
    out = {"scenario_id": report.scenario_id, "theorem": report.theorem,
           "all_pass": report.all_pass, "worst_ratio": _finite(report.worst_ratio),
           "status_counts": report.status_counts(), "notes": report.notes, "cells": cells}
    if report.decay is not None:
        out["decay"] = decay_json(report.decay)
    return json.dumps(out, indent=2, allow_nan=False) + "\n"


def decay_json(d: DecayReport) -> dict:
    return {"n": list(d.n), "a": list(d.a), "ci_lo": list(d.ci_low), "ci_hi": list(d.ci_high),
            "below_resolution": list(d.below_resolution), "slope": d.slope,
            "envelope_nonincreasing": d.envelope_nonincreasing, "decaying": d.decaying,
            "hypothesis_ok": d.hypothesis_ok, "note": d.note}


def decay_csv(d: DecayReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("n", "a_n", "ci_lo", "ci_hi", "below_resolution"))
    for row in zip(d.n, d.a, d.ci_low, d.ci_high, d.below_resolution):
        w.writerow((row[0], fmt_float(row[1]), fmt_float(row[2]), fmt_float(row[3]),
                    int(row[4])))
    return buf.getvalue()


def write_reports(reports: Sequence[BoundReport], out: Path, fmt: str) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for r in reports:
        if fmt in ("csv", "both"):
            path = out / f"{r.scenario_id}.csv"
            path.write_text(reports_csv([r]))
            written.append(path)
        if fmt in ("json", "both"):
            path = out / f"{r.scenario_id}.json"
            path.write_text(report_json(r))
            written.append(path)
        if r.decay is not None:
            path = out / f"{r.scenario_id}_decay.csv"
            path.write_text(decay_csv(r.decay))
            written.append(path)
    return written


# --- commands ---------------------------------------------------------------------------


def _workers(value: int | None) -> int:
    return rngmod.default_workers() if value is None else value


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    workers = args.workers if args.workers is not None else cfg.workers
    workers = _workers(workers)
    out = Path(args.out) if args.out else cfg.output_dir
    fmt = args.format or cfg.format
    reports = []
    for sc in cfg.scenarios:
        if args.seed is not None:
            sc = _reseed(sc, args.seed)
        reports.append(run_scenario(sc, workers=workers))
    write_reports(reports, out, fmt)
    for r in reports:
        counts = ", ".join(f"{k}={v}" for k, v in sorted(r.status_counts().items()))
        print(f"{r.scenario_id} [{r.theorem}]: {counts}")
    return EXIT_OK if all(not r.hard_failures for r in reports) else EXIT_FAIL


def _reseed(sc: Scenario, seed: int) -> Scenario:
    return replace(sc, seed=rngmod.check_seed(seed))


def _load_model(text: str | None):
    if text is None:
        return None
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"model descriptor is not valid JSON: {exc.msg}") from exc
    return model_from_dict(spec)


def _n_value(text: str):
    parts = [int(v) for v in text.replace("x", ",").split(",") if v]
    if not parts:
        raise InputError("n must be an integer or a comma-separated vector")
    return parts[0] if len(parts) == 1 else tuple(parts)


def cmd_simulate(args) -> int:
    model = _load_model(args.model)
    n = _n_value(args.n)
    seed = rngmod.check_seed(args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.threshold:
        if isinstance(model, FieldModel):
            raise InputError("threshold estimates for fields are available through verify")
        thr = [float(t) for t in args.threshold]
        ests = estimate_max_tails(model, [n] * len(thr), thr, args.trials, seed,
                                  args.confidence, _workers(args.workers), label="simulate")
        w.writerow(("n", "threshold", "exceedances", "trials", "point", "ci_lo", "ci_hi"))
        for t, e in zip(thr, ests):
            w.writerow((n, fmt_float(t), e.exceedances, e.trials, fmt_float(e.point),
                        fmt_float(e.ci_low), fmt_float(e.ci_high)))
        return EXIT_OK
    for k in range(args.paths):
        stream = rngmod.stream(seed, "simulate/path", k)
        if isinstance(model, FieldModel):
            values = sample_field(model, n, stream).ravel()
        else:
            values = sample_path(model, n, stream).ravel()
        w.writerow([k] + [fmt_float(v) for v in values])
    return EXIT_OK


def cmd_bound(args) -> int:
    t = args.theorem
    tail = parse_tail(args.tail)
    cond = parse_tail(args.cond_tail) if args.cond_tail else None
    if t in ("T5", "T6_item1", "COR", "T7"):
        kind = {"T5": "thm5_p_lt_r", "T6_item1": "thm6_weak", "COR": "cor_weak",
                "T7": "thm7_series"}[t]
        n = _n_value(args.n) if args.n else None
        b = be.largedev_rhs(kind, tail, cond, x=args.x, p=args.p, s=args.s, q=args.q, n=n,
                            D=args.D, mode=args.mode, convention=args.convention)
        print(f"weighted\t{fmt_float(b.weighted)}")
        print(f"abserr\t{fmt_float(b.abserr)}")
        if n is not None and t != "T7":
            print(f"probability\t{fmt_float(b.probability_bound(n, args.p, args.s))}")
        return EXIT_OK
    n = _n_value(args.n or "1")
    d = len(n) if isinstance(n, tuple) else 1
    params = be.BoundParams(p=args.p, q=args.q, r=args.r, D=args.D, d=d, x=args.x, n=n)
    if t == "T2":
        b = be.theorem2_rhs(tail, params, args.mode, args.convention)
    elif t == "T2_condvar":
        b = be.theorem2_rhs_condvar(tail, _need(cond), params, args.mode, args.convention)
    elif t == "T3":
        b = be.theorem3_rhs(tail, params, args.mode, args.convention)
    elif t == "T3_condvar":
        b = be.theorem3_rhs_condvar(tail, _need(cond), params, args.axis, args.mode,
                                    args.convention)
    else:
        b = be.theorem1_rhs(tail, _need(cond), params, args.mode, args.convention)
    print(f"value\t{fmt_float(b.value)}")
    print(f"abserr\t{fmt_float(b.abserr)}")
    return EXIT_OK


def _need(cond):
    if cond is None:
        raise InputError("this bound needs --cond-tail")
    return cond


def cmd_decay(args) -> int:
    model = _load_model(args.model) or model_from_dict(
        {"kind": "iid_pareto_sym", "alpha": 1.8})
    if args.n_to < args.n_from:
        raise InputError("--n-to must be >= --n-from")
    sc = Scenario(id="decay", theorem=args.theorem, model=model, x_grid=(args.x,),
                  n_grid=tuple(range(args.n_from, args.n_to + 1)), p=args.p, q=args.q,
                  s=args.s, trials=args.trials, seed=rngmod.check_seed(args.seed),
                  confidence=args.confidence)
    rep = check_decay(sc, workers=_workers(args.workers))
    text = decay_csv(rep)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    slope = "undefined" if rep.slope is None else fmt_float(rep.slope)
    print(f"# slope={slope} envelope_nonincreasing={rep.envelope_nonincreasing} "
          f"hypothesis_ok={rep.hypothesis_ok} {rep.note}".rstrip(), file=sys.stderr)
    return EXIT_OK if rep.decaying else EXIT_FAIL


# --- parser -------------------------------------------------------------------------------


def _common_mc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: $MDL_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdl", description="Deviation inequalities for martingales and orthomartingales "
        "in smooth Banach spaces: bounds, simulation and verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run every scenario of a JSON config",
                       description="Run every scenario of a config (T1, T2, T2_condvar, T3, "
                       "T3_condvar, T5, T6_item1, T6_item2, COR, T7, LEM1, LEM2, LEM3) and "
                       "write one report per scenario.")
    v.add_argument("--config", required=True)
    v.add_argument("--out", default=None, help="output directory (overrides the config)")
    v.add_argument("--format", choices=FORMATS, default=None)
    v.add_argument("--seed", type=int, default=None, help="override every scenario seed")
    v.add_argument("--workers", type=int, default=None)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="sample paths or estimate maximal tails",
                       description="Sample martingale paths or product fields, or estimate "
                       "P{max ||S_i|| > t} for the left-hand sides of T1, T2 and T5.")
    s.add_argument("--model", required=True,
                   help='JSON model descriptor or @file, e.g. \'{"kind": "iid_sign"}\'')
    s.add_argument("--n", required=True, help="path length or comma-separated field box")
    s.add_argument("--paths", type=int, default=1, help="number of paths to print")
    s.add_argument("--threshold", type=float, nargs="*", default=None,
                   help="estimate maximal tails at these thresholds instead")
    _common_mc(s)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bound", help="evaluate a right-hand side",
                       description="Evaluate the explicit upper bound of T1, T2, T2_condvar, "
                       "T3, T3_condvar (probability at x |n|^(1/p)), or the weighted "
                       "large-deviation bounds of T5, T6_item1, COR and T7.")
    b.add_argument("--theorem", required=True,
                   choices=("T1", "T2", "T2_condvar", "T3", "T3_condvar", "T5", "T6_item1",
                            "COR", "T7"))
    b.add_argument("--tail", required=True,
                   help="increment tail, e.g. pareto:1.8, step:1, exp:1, prodpareto:1.8:2")
    b.add_argument("--cond-tail", default=None,
                   help="tail of the conditional moment (T2_condvar, T3_condvar, T6_item1, "
                   "T7) or of the conditional sum (T1)")
    b.add_argument("--p", type=float, default=None)
    b.add_argument("--q", type=float, default=None)
    b.add_argument("--s", type=float, default=None)
    b.add_argument("--x", type=float, required=True)
    b.add_argument("--n", default=None, help="integer, or comma-separated box for T3")
    b.add_argument("--r", type=float, default=2.0)
    b.add_argument("--D", type=float, default=1.0)
    b.add_argument("--axis", type=int, default=0)
    b.add_argument("--mode", choices=be.MODES, default="remark")
    b.add_argument("--convention", choices=be.CONVENTIONS, default="display")
    b.set_defaults(func=cmd_bound)

    d = sub.add_parser("decay", help="weighted-tail decay table",
                       description="Tabulate a_n = 2^{n w} P{max_{i <= 2^n} ||S_i|| > 2^n x} "
                       "(w = p - 1 for T5, s/2 for T6_item2) with confidence limits.")
    d.add_argument("--theorem", choices=("T5", "T6_item2"), default="T5")
    d.add_argument("--model", default=None, help="JSON descriptor (default Pareto 1.8)")
    d.add_argument("--n-from", type=int, required=True)
    d.add_argument("--n-to", type=int, required=True)
    d.add_argument("--x", type=float, default=1.0)
    d.add_argument("--p", type=float, default=None)
    d.add_argument("--q", type=float, default=None)
    d.add_argument("--s", type=float, default=None)
    d.add_argument("--out", default=None, help="write the table here instead of stdout")
    _common_mc(d)
    d.set_defaults(func=cmd_decay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
