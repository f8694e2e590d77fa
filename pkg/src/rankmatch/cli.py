"""Command-line interface: estimate, asymptotics, table1, simulate.

Exit status is 0 on success, 2 for invalid input or configuration, 1 for
failures while computing.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .asymptotics import QuadConfig, report, table1
from .experiments import ConfigError, RunConfig, compare_methods, load_config, run_monte_carlo
from .matcher import MatchError, Method, RefineOpts, estimate
from .noise import NoiseError, NoiseModel
from .sampling import SignalError, read_signal
from .templates import TemplateError, get_template

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(f"{obj:.10g}")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _emit(text: str, out_dir, filename: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / filename).write_text(text)


def _template(spec):
    try:
        return get_template(spec)
    except TemplateError as exc:
        raise UsageError(str(exc)) from None


def _noise(family, scale):
    try:
        return NoiseModel(family, scale)
    except NoiseError as exc:
        raise UsageError(str(exc)) from None


def _methods(flag):
    return [Method.RANK, Method.PEARSON] if flag == "both" else [Method(flag)]


def cmd_estimate(args) -> int:
    try:
        signal = read_signal(args.signal)
    except SignalError as exc:
        raise UsageError(str(exc)) from None
    template = _template(args.template)
    opts = RefineOpts(refine=not args.no_refine, tol=args.tol)
    results = {}
    for m in _methods(args.method):
        try:
            results[m.value] = estimate(signal, template, m, opts).to_dict()
        except MatchError as exc:
            raise UsageError(str(exc)) from None
    doc = {"n": signal.n, "template": template.name}
    if args.method == "both":
        doc["estimates"] = results
    else:
        doc.update(results[args.method])
    _emit(_dumps(doc), args.out, "estimate.json")
    return EXIT_OK


def cmd_asymptotics(args) -> int:
    template = _template(args.template)
    noise = _noise(args.noise, args.scale)
    rep = report(template, noise, QuadConfig.from_env())
    _emit(_dumps(rep.to_dict()), args.out, "asymptotics.json")
    return EXIT_OK


def format_table1(rows) -> str:
    lines = ["template,noise,are"]
    for t, nz, are in rows:
        lines.append(f"{t},{nz},{'inf' if math.isinf(are) else f'{are:.10g}'}")
    return "\n".join(lines) + "\n"


def cmd_table1(args) -> int:
    _emit(format_table1(table1(QuadConfig.from_env())), args.out, "table1.csv")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.config is not None:
        cfg = load_config(args.config).to_dict()
    else:
        cfg = {}
    overrides = {
        "template": args.template, "n": args.n, "reps": args.reps, "master_seed": args.seed,
        "workers": args.workers, "theta_star": args.theta_star,
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if args.noise is not None or args.scale is not None:
        base = cfg.get("noise", {"family": "gaussian", "scale": 1.0})
        cfg["noise"] = {"family": args.noise or base["family"],
                        "scale": args.scale if args.scale is not None else base.get("scale", 1.0)}
    if args.method is not None:
        cfg["methods"] = [m.value for m in _methods(args.method)]
    config = RunConfig.from_dict(cfg)
    result = run_monte_carlo(config)
    if args.out is not None:
        result.write(args.out)
        if len(config.methods) == 2:
            cmp = compare_methods(result)
            (Path(args.out) / "compare.json").write_text(_dumps(cmp))
    else:
        sys.stdout.write(result.summary_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rankmatch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def out_flag(sp):
        sp.add_argument("--out", metavar="DIR", default=None,
                        help="write output files into DIR instead of printing to stdout")

    e = sub.add_parser("estimate", help="estimate the shift of a signal file")
    e.add_argument("signal", help="CSV file with one observation per line")
    e.add_argument("--template", default="A", help="A, B, C or a JSON knots file")
    e.add_argument("--method", choices=("rank", "pearson", "both"), default="rank")
    e.add_argument("--tol", type=float, default=1e-7, help="refinement tolerance in theta")
    e.add_argument("--no-refine", action="store_true", help="report the grid argmax only")
    out_flag(e)
    e.set_defaults(func=cmd_estimate)

    a = sub.add_parser("asymptotics", help="limit variances and efficiency for one setting")
    a.add_argument("--template", default="A", help="A, B, C or a JSON knots file")
    a.add_argument("--noise", choices=("gaussian", "t3", "cauchy"), default="gaussian")
    a.add_argument("--scale", type=float, default=1.0, help="noise scale")
    out_flag(a)
    a.set_defaults(func=cmd_asymptotics)

    t = sub.add_parser("table1", help="efficiency for templates A/B/C x three noise laws (CSV)")
    out_flag(t)
    t.set_defaults(func=cmd_table1)

    s = sub.add_parser("simulate", help="Monte Carlo run; writes rows.csv, summary.json, hist.csv")
    s.add_argument("config", nargs="?", default=None, help="JSON run configuration")
    s.add_argument("--template", default=None, help="A, B, C or a JSON knots file")
    s.add_argument("--noise", choices=("gaussian", "t3", "cauchy"), default=None)
    s.add_argument("--scale", type=float, default=None, help="noise scale")
    s.add_argument("--n", type=int, default=None, help="sample size (default 2000)")
    s.add_argument("--reps", type=int, default=None, help="replicates (default 300)")
    s.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    s.add_argument("--workers", type=int, default=None, help="worker processes (default 1)")
    s.add_argument("--method", choices=("rank", "pearson", "both"), default=None)
    s.add_argument("--theta-star", type=float, default=None, help="true shift (default 0)")
    out_flag(s)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on unknown flags
    try:
        return args.func(args)
    except (UsageError, ConfigError, TemplateError, NoiseError, SignalError) as exc:
        print(f"rankmatch {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failure
        print(f"rankmatch {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
