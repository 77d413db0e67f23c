"""Command-line interface: ``pcombine {combine,threshold,tables,simulate,regions}``.

Exit codes: 0 success, 2 bad input (file, config or arguments),
3 computation or domain error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

from jsonschema import Draft202012Validator

from . import __version__
from .combine import CombinerKind, approx_pvalue, combine
from .errors import DomainError, InputError, NumericalError, PCombineError, UsageError
from .regions import analyze_regions, read_pvalue_file
from .simulate import (
    CovarianceModel,
    ExperimentPlan,
    SignalConfig,
    SignalPattern,
    run_experiment,
)
from .tables import DEFAULT_K_GRID, ratio_table
from .thresholds import decide, threshold

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE, EXIT_NUMERIC = 0, 2, 3, 4

KINDS = [k.value for k in CombinerKind]
FAMILIES = ["approx", "vwd", "vad"]
METHOD_PATTERN = r"^(bonferroni|(cct|pcct|hmp):(approx|vwd|vad))$"

CONFIG_VERSION = 1
_PLAN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["K", "methods", "replicates", "seed"],
    "properties": {
        "name": {"type": "string"},
        "K": {"type": "integer", "minimum": 1},
        "covariance": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["independent", "ar1", "compound_symmetry"]},
                "rho": {"type": "number", "minimum": -1, "maximum": 1},
            },
        },
        "signal": {
            "type": "object",
            "additionalProperties": False,
            "required": ["pattern"],
            "properties": {
                "pattern": {"enum": ["null", "sparse", "dense"]},
                "strength": {"type": "number", "minimum": 0},
                "sign_mode": {"enum": ["all_positive", "half_negative"]},
            },
        },
        "methods": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "string", "pattern": METHOD_PATTERN},
        },
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "replicates": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "side": {"enum": ["one-sided", "two-sided"]},
        "strengths": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
    },
}
CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "plans"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "plans": {"type": "array", "minItems": 1, "items": _PLAN_SCHEMA},
    },
}


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    return "" if v is None else str(v)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    # allow_nan=False keeps the output strict JSON
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _clean(obj):
    """Make diagnostics JSON-safe (tuples to lists, enums to values)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def _family_arg(kind: str, family):
    if kind == "bonferroni":
        if family not in (None, "none"):
            raise UsageError("bonferroni takes no --family; it uses K * min(p) <= alpha")
        return None
    if family is None:
        raise UsageError(f"--family is required for {kind}")
    return family


# ---------------------------------------------------------------------------
# subcommands


def cmd_combine(args) -> int:
    data = read_pvalue_file(args.file, column=args.column, sanitize=args.sanitize)
    family = _family_arg(args.kind, args.family)
    stat = combine(data.values, args.kind)
    thr = threshold(args.kind, family, stat.K, args.alpha)
    rep = decide(stat, thr)
    out = rep.as_dict()
    out["approx_pvalue"] = approx_pvalue(stat) if family == "approx" else None
    out = _clean(out)
    if args.format == "csv":
        cols = [k for k in out if k != "diagnostics"]
        _emit(_csv_text(cols, [[out[c] for c in cols]]), args.out)
    else:
        _emit(_json_text(out), args.out)
    return EXIT_OK


def cmd_threshold(args) -> int:
    family = _family_arg(args.kind, args.family)
    thr = threshold(args.kind, family, args.k, args.alpha)
    out = _clean(
        {
            "kind": thr.kind,
            "family": thr.family,
            "alpha": thr.alpha,
            "K": thr.K,
            "mean_scale_threshold": thr.mean_scale_threshold,
            "stat_scale_threshold": thr.stat_scale_threshold,
            "diagnostics": thr.diagnostics,
        }
    )
    if args.format == "csv":
        cols = [k for k in out if k != "diagnostics"]
        _emit(_csv_text(cols, [[out[c] for c in cols]]), args.out)
    else:
        _emit(_json_text(out), args.out)
    return EXIT_OK


def cmd_tables(args) -> int:
    Ks = args.k_grid or list(DEFAULT_K_GRID)
    columns, rows, errors = ratio_table(args.which, Ks, args.alpha_grid, args.kinds)
    if args.format == "csv":
        text = _csv_text(columns, rows)
    else:
        text = _json_text(
            {
                "table": args.which.upper(),
                "columns": columns,
                "rows": rows,
                "errors": [
                    {"K": K, "alpha": a, "kind": k, "message": msg}
                    for (K, a, k), msg in errors.items()
                ],
            }
        )
    _emit(text, args.out)
    for (K, a, k), msg in errors.items():
        print(f"cell K={K} alpha={a:g} {k}: {msg}", file=sys.stderr)
    return EXIT_COMPUTE if errors else EXIT_OK


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config: {exc.strerror}", None, path) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg}", exc.lineno, path) from None
    errs = sorted(Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg), key=lambda e: [str(p) for p in e.path])
    if errs:
        lines = []
        for e in errs:
            pointer = "/" + "/".join(str(p) for p in e.absolute_path)
            lines.append(f"{pointer}: {e.message}")
        raise InputError("config does not match schema:\n  " + "\n  ".join(lines), None, path)
    return cfg


def _plan_from(spec: dict, args) -> ExperimentPlan:
    cov = spec.get("covariance", {"kind": "independent"})
    sig = spec.get("signal", {"pattern": "null"})
    return ExperimentPlan(
        K=spec["K"],
        covariance=CovarianceModel(cov["kind"], cov.get("rho", 0.0)),
        signal=SignalConfig(
            sig["pattern"], sig.get("strength", 0.0), sig.get("sign_mode", "all_positive")
        ),
        methods=tuple(spec["methods"]),
        alpha=spec.get("alpha", 0.05),
        replicates=args.reps if args.reps is not None else spec["replicates"],
        seed=args.seed if args.seed is not None else spec["seed"],
        side=spec.get("side", "one-sided"),
    )


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    rows, reports = [], []
    for i, spec in enumerate(cfg["plans"]):
        name = spec.get("name", f"plan{i + 1}")
        plan = _plan_from(spec, args)
        strengths = spec.get("strengths")
        if strengths is not None and plan.signal.pattern is SignalPattern.NULL:
            raise DomainError(f"plan {name!r}: strengths need a sparse or dense signal")
        for c0 in strengths or [plan.signal.strength]:
            sub = plan
            if strengths is not None:
                sub = replace(plan, signal=replace(plan.signal, strength=float(c0)))
            rep = run_experiment(sub, args.threads)
            for r in rep.rows():
                rows.append({"plan": name, **r})
            reports.append({"plan": name, **rep.as_dict()})
    if args.format == "csv":
        cols = list(rows[0])
        _emit(_csv_text(cols, [[r[c] for c in cols] for r in rows]), args.out)
    else:
        _emit(_json_text({"version": CONFIG_VERSION, "reports": reports}), args.out)
    return EXIT_OK


def cmd_regions(args) -> int:
    data = read_pvalue_file(
        args.file, column=args.column, id_column=args.id_column, sanitize=args.sanitize
    )
    methods = args.methods or ["bonferroni", "hmp:vwd", "cct:vwd", "pcct:vwd"]
    rep = analyze_regions(data.values, args.k, methods, args.alpha, ids=data.ids)
    if args.format == "csv":
        cols = ["region", "first_id", "last_id", "size", "short"] + rep.methods
        rows = [
            [r.index, r.first_id, r.last_id, r.size, r.short] + [r.decisions[m] for m in rep.methods]
            for r in rep.regions
        ]
        _emit(_csv_text(cols, rows), args.out)
    else:
        regions = [
            {
                "region": r.index,
                "first_id": r.first_id,
                "last_id": r.last_id,
                "size": r.size,
                "short": r.short,
                "reject": r.decisions,
                "mean_scale": r.statistics,
            }
            for r in rep.regions
        ]
        _emit(_json_text({"summary": rep.summary(), "regions": regions}), args.out)
    if args.summary:
        _emit(_json_text(rep.summary()), args.summary)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _csv_floats(s):
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _csv_ints(s):
    vals = _csv_floats(s)
    if any(v != int(v) or v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"expected comma-separated positive integers, got {s!r}")
    return [int(v) for v in vals]


def _alpha(s):
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pcombine", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--format", choices=["csv", "json"], default=fmt_default)
        sp.add_argument("--out", metavar="PATH", help="write here instead of stdout")

    c = sub.add_parser("combine", help="combine the p-values in a file and test the global null")
    c.add_argument("file")
    c.add_argument("--kind", choices=KINDS, required=True)
    c.add_argument("--family", choices=FAMILIES)
    c.add_argument("--alpha", type=_alpha, default=0.05)
    c.add_argument("--column", help="CSV column holding the p-values")
    c.add_argument("--sanitize", action="store_true", help="floor exact zeros at 1e-300")
    common(c)
    c.set_defaults(func=cmd_combine)

    t = sub.add_parser("threshold", help="look up a rejection threshold")
    t.add_argument("--kind", choices=KINDS, required=True)
    t.add_argument("--family", choices=FAMILIES)
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--alpha", type=_alpha, default=0.05)
    common(t)
    t.set_defaults(func=cmd_threshold)

    tb = sub.add_parser("tables", help="VAD (A1) or VWD (A2) threshold ratio tables")
    tb.add_argument("which", choices=["A1", "A2", "a1", "a2"])
    tb.add_argument("--k-grid", type=_csv_ints, help="comma-separated K values")
    tb.add_argument("--alpha-grid", type=_csv_floats, help="comma-separated levels")
    tb.add_argument("--kinds", type=lambda s: s.split(","), help="comma-separated combiners")
    common(tb, "csv")
    tb.set_defaults(func=cmd_tables)

    s = sub.add_parser("simulate", help="run Monte Carlo plans from a JSON config")
    s.add_argument("config")
    s.add_argument("--seed", type=int, help="override every plan's seed")
    s.add_argument("--reps", type=int, help="override every plan's replicate count")
    s.add_argument("--threads", type=int, help="worker threads (default: PCOMBINE_THREADS or all cores)")
    common(s, "csv")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("regions", help="test consecutive regions of K p-values")
    r.add_argument("file")
    r.add_argument("--k", type=int, required=True, help="region size")
    r.add_argument("--methods", type=lambda s: s.split(","),
                   help="comma-separated methods, e.g. bonferroni,pcct:vwd")
    r.add_argument("--alpha", type=_alpha, default=0.05)
    r.add_argument("--column")
    r.add_argument("--id-column")
    r.add_argument("--sanitize", action="store_true")
    r.add_argument("--summary", metavar="PATH", help="also write the JSON summary here")
    common(r, "csv")
    r.set_defaults(func=cmd_regions)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PCombineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
