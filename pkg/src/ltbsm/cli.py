"""Command-line front end: ``ltbsm {exact,mc,threshold,bounds,repeater}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Dict, Iterable, List, Sequence

from . import __version__
from .bounds import (REGIMES, adaptive_bound_product, format_distance, repeater_max_distance,
                     static_bound_product, table1_thresholds)
from .codes import InvalidCode, parse_code
from .erasure import CapacityError
from .estimate import (EstimateResult, ThresholdQuery, exact_success, find_threshold,
                       mc_success)
from .lobsm import InvalidModel, parse_model
from .protocols import PROTOCOLS, SINGLE_CODE, InvalidOperation

SCHEMA = "ltbsm-csv/1"
RESULT_COLUMNS = ("protocol", "code", "model", "eta_a", "eta_b", "method", "trials", "mean",
                  "ci_low", "ci_high", "seed")
THRESHOLD_COLUMNS = ("family", "size", "epsilon_star", "tolerance", "target", "flag")
BOUNDS_COLUMNS = ("regime", "protocol_class", "threshold")
REPEATER_COLUMNS = ("eta_b_eta_d", "regime", "L_km")


class UsageError(Exception):
    pass


def parse_range(text: str) -> List[float]:
    """``x`` or ``start:stop:step`` (stop included within 1e-9)."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad number or range {text!r}") from None
    if len(values) == 1:
        return values
    if len(values) != 3:
        raise UsageError(f"range must be start:stop:step, got {text!r}")
    start, stop, step = values
    if step <= 0 or stop < start:
        raise UsageError(f"empty or ill-formed range {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _num(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _emit(args, kind: str, columns: Sequence[str], rows: Iterable[Dict]):
    rows = list(rows)
    if args.format == "json":
        text = json.dumps({"schema": f"{SCHEMA} {kind}", "columns": list(columns),
                           "rows": [{c: r.get(c) for c in columns} for r in rows]}, indent=1) + "\n"
    else:
        buf = io.StringIO()
        buf.write(f"# {SCHEMA} {kind}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_num(r.get(c)) for c in columns])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def result_row(res: EstimateResult) -> Dict:
    return {"protocol": res.protocol, "code": res.code, "model": res.model, "eta_a": res.eta_a,
            "eta_b": res.eta_b, "method": res.method, "trials": res.trials, "mean": res.mean,
            "ci_low": res.ci_low, "ci_high": res.ci_high,
            "seed": res.seed if res.seed is not None else None}


def _eta_points(args) -> List[tuple]:
    if args.eta is not None:
        if args.eta_a is not None or args.eta_b is not None:
            raise UsageError("use either --eta or --eta-a/--eta-b")
        return [(e, e) for e in parse_range(args.eta)]
    if args.eta_a is None:
        raise UsageError("--eta or --eta-a is required")
    eas = parse_range(args.eta_a)
    ebs = parse_range(args.eta_b) if args.eta_b is not None else [1.0]
    return [(a, b) for a in eas for b in ebs]


def _options(args) -> Dict:
    opts = {}
    if getattr(args, "via", None):
        opts["via"] = args.via
    if getattr(args, "reuse_partial", False):
        opts["reuse_partial"] = True
    return opts


def _resolve(args):
    try:
        code = parse_code(args.code)
        model = None if args.protocol in SINGLE_CODE else parse_model(args.model)
    except (InvalidCode, InvalidModel, ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None
    return code, model


def cmd_exact(args):
    code, model = _resolve(args)
    rows = [result_row(exact_success(args.protocol, code, model, a, b, **_options(args)))
            for a, b in _eta_points(args)]
    _emit(args, "estimate", RESULT_COLUMNS, rows)


def cmd_mc(args):
    if args.seed is None:
        raise UsageError("--seed is required for Monte Carlo runs")
    code, model = _resolve(args)
    rows = [result_row(mc_success(args.protocol, code, model, a, b, args.trials, args.seed,
                                  threads=args.threads, **_options(args)))
            for a, b in _eta_points(args)]
    _emit(args, "estimate", RESULT_COLUMNS, rows)


def _family(template: str):
    if "{s}" not in template:
        raise UsageError("--family needs a {s} placeholder for the size, e.g. surface:{s}")

    def build(s):
        try:
            return parse_code(template.replace("{s}", str(s)))
        except (InvalidCode, ValueError) as exc:
            raise UsageError(str(exc)) from None
    return build


def cmd_threshold(args):
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError:
        raise UsageError(f"bad size list {args.sizes!r}") from None
    method = "exact" if args.method == "exact" else "monte-carlo"
    if method == "monte-carlo" and args.seed is None:
        raise UsageError("--seed is required for Monte Carlo threshold search")
    try:
        model = None if args.protocol in SINGLE_CODE else parse_model(args.model)
        query = ThresholdQuery(args.protocol, _family(args.family), sizes, model, args.target,
                               symmetric=args.eps_b is None, eps_b=args.eps_b or 0.0,
                               tolerance=args.tolerance, method=method, trials=args.trials,
                               seed=args.seed, threads=args.threads, family_name=args.family,
                               options=_options(args))
    except (InvalidModel, ValueError) as exc:
        raise UsageError(str(exc)) from None
    res = find_threshold(query)
    rows = [{"family": res.family, "size": s, "epsilon_star": c, "tolerance": res.tolerance,
             "target": res.target, "flag": f}
            for s, c, f in zip(res.sizes, res.crossings, res.flags)]
    if res.estimate is None:
        summary_flag = "too-weak"
    elif "non-monotone" in res.flags:
        summary_flag = "non-monotone"
    else:
        summary_flag = "size-monotone" if res.nondecreasing else "size-non-monotone"
    rows.append({"family": res.family, "size": "extrapolated", "epsilon_star": res.estimate,
                 "tolerance": res.uncertainty if res.uncertainty is not None else res.tolerance,
                 "target": res.target, "flag": summary_flag})
    _emit(args, "threshold", THRESHOLD_COLUMNS, rows)


def cmd_bounds(args):
    rows = [{"regime": regime, "protocol_class": cls, "threshold": v}
            for (regime, cls), v in table1_thresholds().items()]
    if args.products:
        rows.append({"regime": "lobsm p=0.5", "protocol_class": "static-product",
                     "threshold": static_bound_product(0.5)})
        rows.append({"regime": "lobsm", "protocol_class": "adaptive-product",
                     "threshold": adaptive_bound_product()})
    _emit(args, "bounds", BOUNDS_COLUMNS, rows)


def cmd_repeater(args):
    if args.product is not None:
        products = parse_range(args.product)
    else:
        products = [round(args.eta_b * args.eta_d, 12)]
    rows = []
    for prod in products:
        if not 0 < prod <= 1:
            raise UsageError(f"eta_b * eta_d = {prod} outside (0, 1]")
        for regime, one_minus in REGIMES.items():
            d = repeater_max_distance(prod, 1.0, one_minus, args.attenuation)
            rows.append({"eta_b_eta_d": prod, "regime": regime, "L_km": format_distance(d)})
    _emit(args, "repeater", REPEATER_COLUMNS, rows)


def _common(p: argparse.ArgumentParser, estimate: bool = True):
    p.add_argument("--out", help="write to this file instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    if not estimate:
        return
    p.add_argument("--protocol", choices=PROTOCOLS + SINGLE_CODE, default="static")
    p.add_argument("--model", default="zz-det",
                   help="zz-det, xx-det, random-basis, deterministic, assisted:p=X, vector:FILE")
    p.add_argument("--via", choices=tuple(x for x in PROTOCOLS if x != "teleport"),
                   help="logical BSM used by the teleport protocol")
    p.add_argument("--reuse-partial", action="store_true",
                   help="qpc-sqm: a ZZ-only block skips its inner Z measurements")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltbsm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (("exact", cmd_exact, "exact success probability"),
                               ("mc", cmd_mc, "Monte Carlo success probability")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--code", required=True, help="e.g. surface:3, qpc:2,2, qpc2var:4/inner=tree:2-2")
        p.add_argument("--eta", help="symmetric transmission, value or start:stop:step")
        p.add_argument("--eta-a")
        p.add_argument("--eta-b")
        if name == "mc":
            p.add_argument("--trials", type=int, default=10_000)
            p.add_argument("--seed", type=int)
            p.add_argument("--threads", type=int, default=1)
        p.set_defaults(func=fn)

    p = sub.add_parser("threshold", help="finite-size loss-threshold crossings")
    _common(p)
    p.add_argument("--family", required=True, help="code template with {s}, e.g. surface:{s}")
    p.add_argument("--sizes", required=True, help="comma-separated sizes")
    p.add_argument("--target", type=float, default=0.5)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--eps-b", type=float, help="fixed loss of party b (default: symmetric)")
    p.add_argument("--method", choices=("exact", "mc"), default="exact")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("bounds", help="analytic symmetric-loss thresholds")
    _common(p, estimate=False)
    p.add_argument("--table", action="store_true", help="print the threshold table (default)")
    p.add_argument("--products", action="store_true", help="also print the product-form bounds")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("repeater", help="maximum internode distance per regime")
    _common(p, estimate=False)
    p.add_argument("--eta-b", type=float, default=0.9)
    p.add_argument("--eta-d", type=float, default=0.8 / 0.9)
    p.add_argument("--product", help="sweep eta_b*eta_d directly, value or start:stop:step")
    p.add_argument("--attenuation", type=float, default=0.2, help="fibre loss in dB/km")
    p.set_defaults(func=cmd_repeater)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except CapacityError as exc:
        print(f"ltbsm: {exc}", file=sys.stderr)
        return 3
    except (InvalidOperation, ValueError) as exc:
        print(f"ltbsm: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
