"""``adaptlab`` command line: run, sweep, compare, probe-vd, plot.

Exit codes: 0 success, 2 validation error, 3 non-finite termination.  Errors
go to stderr as one JSON object per line.
"""

import argparse
import json
import os
import sys

from ..errors import ValidationError
from .config import load_config
from .runner import SWEEP_PARAMS, compare, plot_csvs, probe_vd, run_scenario, sweep
from .io import write_text

EXIT_OK, EXIT_INVALID, EXIT_NON_FINITE = 0, 2, 3


def _out_dir(args):
    return os.environ.get("ADAPTLAB_OUT") or args.out


def _list(text):
    return [v.strip() for v in text.split(",") if v.strip()] if text else []


def _floats(text, field):
    try:
        return [float(v) for v in _list(text)]
    except ValueError:
        raise ValidationError({field: f"expected comma-separated numbers, got {text!r}"}) from None


def _report_validation(exc):
    print(json.dumps({"error": "validation", "fields": exc.errors}, sort_keys=True), file=sys.stderr)
    return EXIT_INVALID


def _report_non_finite(label, summary):
    print(json.dumps({"error": "non_finite", "run": label, "message": summary["error"]}, sort_keys=True), file=sys.stderr)
    return EXIT_NON_FINITE


def cmd_run(args):
    cfg = load_config(args.config)
    art = run_scenario(cfg, _out_dir(args))
    print(json.dumps({"csv": art.csv_path, **art.summary}, sort_keys=True))
    if art.summary["terminated"] == "non_finite":
        return _report_non_finite(cfg.name, art.summary)
    return EXIT_OK


def _members(artifacts, errors, label_of):
    """Report failed members; validation failures take precedence in the exit code."""
    for label, exc in errors.items():
        print(json.dumps({"error": "validation", "run": label, "fields": exc.errors}, sort_keys=True), file=sys.stderr)
    non_finite = [a for a in artifacts if a.summary["terminated"] == "non_finite"]
    for art in non_finite:
        _report_non_finite(label_of(art), art.summary)
    if errors:
        return EXIT_INVALID
    return EXIT_NON_FINITE if non_finite else EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args.config)
    values = _floats(args.values, "values")
    if not values:
        raise ValidationError({"values": "give at least one value"})
    artifacts, errors, path = sweep(cfg, args.param, values, _out_dir(args))
    print(json.dumps({"comparison": path, "runs": [a.csv_path for a in artifacts]}))
    return _members(artifacts, errors, lambda a: a.csv_path)


def cmd_compare(args):
    cfg = load_config(args.config)
    laws = _list(args.laws)
    if not laws:
        raise ValidationError({"laws": "give at least one law"})
    artifacts, errors, path = compare(cfg, laws, _out_dir(args))
    print(json.dumps({"comparison": path, "runs": [a.csv_path for a in artifacts]}))
    return _members(artifacts, errors, lambda a: a.csv_path)


def cmd_probe_vd(args):
    cfg = load_config(args.config)
    r_list = _floats(args.r_list, "r_list")
    if not r_list:
        raise ValidationError({"r_list": "give at least one r"})
    _, text, _ = probe_vd(cfg, r_list, _out_dir(args))
    sys.stdout.write(text)
    return EXIT_OK


def cmd_plot(args):
    svg = plot_csvs(args.csv, _list(args.columns), log_y=args.log_y)
    target = args.out
    env = os.environ.get("ADAPTLAB_OUT")
    if env:
        target = os.path.join(env, os.path.basename(args.out) if args.out else "plot.svg")
    if not target:
        sys.stdout.write(svg)
        return EXIT_OK
    if os.path.isdir(target):
        target = os.path.join(target, "plot.svg")
    parent = os.path.dirname(target)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_text(target, svg)
    print(json.dumps({"svg": target}))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="adaptlab", description="Adaptive CLF control experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--out", default=None, help="output directory (ADAPTLAB_OUT overrides)")

    p = sub.add_parser("run", help="simulate one scenario")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="repeat a scenario over values of one parameter")
    common(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("compare", help="run one scenario under several estimation laws")
    common(p)
    p.add_argument("--laws", required=True, help="comma-separated laws, e.g. standard,normalized:r=8")
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("probe-vd", help="numeric vanishing-degree probe")
    common(p)
    p.add_argument("--r-list", required=True, help="comma-separated r values")
    p.set_defaults(func=cmd_probe_vd)
    p = sub.add_parser("plot", help="render CSV columns to SVG")
    p.add_argument("csv", nargs="+", help="trajectory CSV files")
    p.add_argument("--columns", default="", help="comma-separated column names")
    p.add_argument("--log-y", action="store_true", help="log10 scale for the y axis")
    p.add_argument("--out", default=None, help="SVG path (or directory)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        return _report_validation(exc)


if __name__ == "__main__":
    sys.exit(main())
