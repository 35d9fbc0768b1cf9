import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict

from rich.console import Console
from rich.table import Table

# Add project root
current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from infer import config  # noqa: E402
from evaluation.evaluators import DetectionEvaluator, RecoveryEvaluator  # noqa: E402
from evaluation.utils import load_estimate, load_truth  # noqa: E402

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--truth", required=True,
                        help="Ground truth: truth.json sidecar or a changes CSV")
    parser.add_argument("--est", required=True,
                        help="Estimate: a detect output directory or its changes.csv")
    parser.add_argument("--w", type=int, default=config.DEFAULT_WINDOW,
                        help=f"Matching window in indices (default: {config.DEFAULT_WINDOW})")
    parser.add_argument("--squared-m", action="store_true",
                        help="Report the squared Frobenius form of epsilon_M")
    parser.add_argument("--output", help="Optional path for a summary JSON")


def render(summary: Dict[str, Any], console: Console = None):
    console = console or Console()
    table = Table(title=f"Evaluation (w={summary['w']})")
    table.add_column("type")
    table.add_column("precision", justify="right")
    table.add_column("recall", justify="right")
    for label in ("ao", "ls", "all"):
        table.add_row(label.upper(), f"{summary[f'{label}_precision']:.4f}",
                      f"{summary[f'{label}_recall']:.4f}")
    console.print(table)

    if "epsilon_S" in summary:
        errors = Table(title="Recovery errors")
        errors.add_column("metric")
        errors.add_column("value", justify="right")
        for key in ("epsilon_M", "epsilon_S", "epsilon_E"):
            errors.add_row(key, f"{summary[key]:.6g}")
        console.print(errors)


def run(args: argparse.Namespace) -> Dict[str, Any]:
    truth = load_truth(args.truth)
    estimate = load_estimate(args.est)

    summary: Dict[str, Any] = {"truth": str(args.truth), "estimate": str(args.est)}
    summary.update(DetectionEvaluator(w=args.w).evaluate_single(truth, estimate))
    recovery = RecoveryEvaluator(squared_M=getattr(args, "squared_m", False))
    if recovery.applicable(truth, estimate):
        summary.update(recovery.evaluate_single(truth, estimate))

    render(summary)
    if getattr(args, "output", None):
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            json.dump(summary, f, ensure_ascii=False, indent=2)
        logger.info("summary written to %s", out)
    return summary


def main():
    parser = argparse.ArgumentParser(description="Score detected changes against ground truth")
    add_arguments(parser)
    run(parser.parse_args())


if __name__ == "__main__":
    main()
