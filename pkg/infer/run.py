import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import yaml
from rich.logging import RichHandler

# Ensure project root is in sys.path so we can import 'infer' as a package
current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from infer import config  # noqa: E402
from infer.errors import AbacusError  # noqa: E402

logger = logging.getLogger("abacus")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

# Keys a --config file may not set.
_RESERVED = {"help", "config", "data", "command"}


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def setup_logging(level: str = config.LOG_LEVEL):
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(show_path=False)],
        force=True,
    )


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--log-level", default=config.LOG_LEVEL,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper,
                        help=f"Logging level (default: {config.LOG_LEVEL})")
    common.add_argument("--quiet", action="store_true", help="Hide progress bars")

    parser = _Parser(prog="abacus", description="Bayesian detection of additive outliers and level shifts")
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", parents=[common], help="Fit the model to a CSV and report changes")
    detect.add_argument("data", help="CSV file of observations")
    detect.add_argument("--config", help="YAML file whose keys supply defaults for the flags below")
    detect.add_argument("--k", type=int, default=config.DEFAULT_K,
                        help=f"Number of latent sources (default: {config.DEFAULT_K})")
    detect.add_argument("--iters", type=int, default=config.DEFAULT_ITERATIONS,
                        help=f"Gibbs iterations per stage (default: {config.DEFAULT_ITERATIONS})")
    detect.add_argument("--burnin", type=int, default=config.DEFAULT_BURN_IN,
                        help=f"Burn-in iterations (default: {config.DEFAULT_BURN_IN})")
    detect.add_argument("--delta", type=float, default=config.DEFAULT_DELTA,
                        help=f"Density threshold for the cutoff (default: {config.DEFAULT_DELTA})")
    detect.add_argument("--seed", type=int, help="Random seed")
    detect.add_argument("--standardize", action="store_true", help="Standardize every channel first")
    detect.add_argument("--prune", action="store_true", help="Prune level shifts by dynamic programming")
    detect.add_argument("--max-keep", type=int, help="Keep exactly this many level shifts when pruning")
    detect.add_argument("--orientation", choices=["rows", "columns"], default="rows",
                        help="Whether channels are CSV rows or columns (default: rows)")
    detect.add_argument("--chains", type=int, default=1, help="Independent chains per stage (default: 1)")
    detect.add_argument("--out", help="Output directory (default: <output root>/<data file stem>)")

    simulate = sub.add_parser("simulate", parents=[common], help="Write a synthetic dataset with known changes")
    simulate.add_argument("--p", type=int, required=True, help="Number of channels")
    simulate.add_argument("--n", type=int, required=True, help="Number of points")
    simulate.add_argument("--r", type=int, required=True, help="Number of true sources")
    simulate.add_argument("--ao", type=int, default=0, help="Number of additive outliers")
    simulate.add_argument("--ls", type=int, default=0, help="Number of level shifts")
    simulate.add_argument("--seed", type=int, help="Random seed")
    simulate.add_argument("--psi-range", type=float, nargs=2, default=(0.1, 5.0), metavar=("LO", "HI"))
    simulate.add_argument("--mag-range", type=float, nargs=2, default=(1.0, 5.0), metavar=("LO", "HI"))
    simulate.add_argument("--m-range", type=float, nargs=2, default=(-1.0, 1.0), metavar=("LO", "HI"))
    simulate.add_argument("--baseline-range", type=float, nargs=2, default=(-1.0, 1.0), metavar=("LO", "HI"))
    simulate.add_argument("--out", default=os.path.join(config.DEFAULT_OUTPUT_ROOT, "sim"),
                          help="Output directory")

    from evaluation.run import add_arguments
    evaluate = sub.add_parser("evaluate", parents=[common], help="Score an estimate against ground truth")
    add_arguments(evaluate)
    parser.commands = sub.choices
    return parser


def _config_defaults(parser: _Parser, argv: List[str]):
    """Apply `detect --config file.yaml` as subparser defaults so explicit flags still win."""
    if not argv or argv[0] != "detect":
        return
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if not known.config:
        return

    detect = parser.commands["detect"]
    try:
        with open(known.config, "r", encoding="utf-8") as f:
            mapping = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        detect.error(f"cannot read config {known.config}: {e}")
    if not isinstance(mapping, dict):
        detect.error(f"config {known.config} must be a mapping of flag names to values")

    valid = {a.dest for a in detect._actions} - _RESERVED
    defaults = {}
    for key, value in mapping.items():
        dest = str(key).lstrip("-").replace("-", "_")
        if dest not in valid:
            detect.error(f"unknown key {key!r} in {known.config}")
        defaults[dest] = value
    detect.set_defaults(**defaults)


def run_detect(args: argparse.Namespace) -> int:
    from infer.pipeline import run_abacus
    from toolkits.csv_io import emit_report, load_csv

    logger.info("=" * 40)
    logger.info(" mode: detect    data: %s", args.data)
    logger.info("=" * 40)

    Y = load_csv(args.data, orientation=args.orientation, standardize=args.standardize)
    prune = bool(args.prune or args.max_keep is not None)
    report = run_abacus(Y, K=args.k, iters=args.iters, burn_in=args.burnin, delta=args.delta,
                        seed=args.seed, prune=prune, max_keep=args.max_keep, chains=args.chains,
                        show_progress=not args.quiet)
    report.metadata["standardize"] = bool(args.standardize)
    report.metadata["orientation"] = args.orientation

    out = args.out or os.path.join(config.DEFAULT_OUTPUT_ROOT, Path(args.data).stem)
    emit_report(report, out)
    logger.info("AO: %s", report.cpt0)
    logger.info("LS: %s", report.cpt1)
    return EXIT_OK


def run_simulate(args: argparse.Namespace) -> int:
    from evaluation.simulate import SimConfig, generate, save_fixture

    cfg = SimConfig(P=args.p, N=args.n, r=args.r, n_ao=args.ao, n_ls=args.ls,
                    m_range=tuple(args.m_range), psi_range=tuple(args.psi_range),
                    mag_range=tuple(args.mag_range), baseline_range=tuple(args.baseline_range),
                    seed=args.seed)
    Y, truth = generate(cfg)
    paths = save_fixture(args.out, Y, truth)
    for name, path in paths.items():
        logger.info("%s -> %s", name, path)
    return EXIT_OK


def run_evaluate(args: argparse.Namespace) -> int:
    from evaluation.run import run

    run(args)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _config_defaults(parser, argv)
        args = parser.parse_args(argv)
        if getattr(args, "max_keep", None) is not None and args.max_keep < 0:
            parser.error(f"--max-keep must be nonnegative, got {args.max_keep}")
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    setup_logging(args.log_level)
    handlers = {"detect": run_detect, "simulate": run_simulate, "evaluate": run_evaluate}
    try:
        return handlers[args.command](args)
    except (AbacusError, OSError, ValueError) as e:
        logger.error("%s failed: %s", args.command, e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
