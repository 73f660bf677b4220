"""Command-line entry point: ``vwb {bench-gauss,demo-2d,aggregate,eval}``.

Exit status is 0 on success, 1 on a validation error (bad config, unreadable
or inconsistent input files, refusing to overwrite) and 2 when training
aborts at run time.
"""

import argparse
import dataclasses
import sys

from . import experiments
from .config import ExperimentConfig, parse_config
from .errors import NoConvergence, NonFiniteLoss, VWBError

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 1, 2


def build_parser():
    parser = argparse.ArgumentParser(prog="vwb", description="Variational Wasserstein barycenters.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="experiment config file (see defaults.cfg)")
        p.add_argument("--seed", type=int, help="base RNG seed")
        p.add_argument("--workers", type=int, help="threads for the per-pair potential updates")
        p.add_argument("--out", metavar="DIR", help="output directory (default runs/<command>)")
        p.add_argument("--overwrite", action="store_true", help="replace existing output files")
        return p

    bench = common(sub.add_parser("bench-gauss", help="barycenter of random Gaussians against the fixed point"))
    bench.add_argument("--seeds", type=int, help="number of independent runs to average")
    common(sub.add_parser("demo-2d", help="bundled 2-D scenario, emits samples for plotting"))
    agg = common(sub.add_parser("aggregate", help="barycenter of posterior sample files"))
    agg.add_argument("files", nargs="*", help="sample CSV files (appended to the config's files)")
    agg.add_argument("--truth", metavar="PATH", help="reference samples for BW2-UVP")
    ev = sub.add_parser("eval", help="BW2-UVP between the sample moments of two CSV files")
    ev.add_argument("candidate")
    ev.add_argument("truth")
    return parser


def resolve_config(args):
    cfg = parse_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    overrides = {k: getattr(args, k, None) for k in ("seed", "workers", "seeds")}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.command == "aggregate":
        overrides["files"] = tuple(cfg.files) + tuple(args.files)
        if args.truth is not None:
            overrides["truth"] = args.truth
    return dataclasses.replace(cfg, **overrides)


def _print_report(report):
    for line in report.lines():
        print(line)


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            print(f"uvp = {experiments.evaluate_files(args.candidate, args.truth)!r}")
            return EXIT_OK
        cfg = resolve_config(args)
        out = args.out or f"runs/{args.command}"
        if args.command == "bench-gauss":
            report = experiments.run_gaussian_benchmark(cfg, out, args.overwrite)
        elif args.command == "demo-2d":
            report = experiments.run_2d_demo(cfg, out, args.overwrite)
        else:
            report = experiments.run_aggregate(cfg.files, cfg, out, args.overwrite, cfg.truth)
    except (NonFiniteLoss, NoConvergence) as exc:
        print(f"vwb: run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (VWBError, ValueError, FileExistsError, OSError) as exc:
        print(f"vwb: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _print_report(report)
    return EXIT_OK


def main():
    sys.exit(run())
