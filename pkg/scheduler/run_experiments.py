"""
Command-line entry point for the experiments.

Usage:
    python scheduler/run_experiments.py <experiment-id> [--config path] [--w n] [--s n]
        [--d n] [--lr f] [--epochs n] [--seed n] [--subset n] [--out dir] [--data dir]

This script:
1. Merges defaults, the config file and command-line flags
2. Runs the experiment (sweeps may run in parallel workers)
3. Writes {experiment-id}-{label}.csv and, for plotted experiments, .svg
4. Prints a summary; the exit status is 0 only if every check passed
"""

import argparse
import sys
from datetime import datetime
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

# Add parent directory to path so we can import modules
sys.path.append(str(Path(__file__).parent.parent))

from experiments.co2_forecast import run_co2  # noqa: E402
from experiments.diagnostics import run_exact_poly, run_gradcheck  # noqa: E402
from experiments.mnist_sweeps import run_mnist_stride, run_mnist_window  # noqa: E402
from experiments.polynomial_regression import run_poly  # noqa: E402
from utils.config import EXPERIMENT_IDS, ExperimentConfig, build_config, load_config_file  # noqa: E402
from utils.errors import WpunnError  # noqa: E402
from utils.report_schema import ExperimentReport  # noqa: E402
from utils.svg_plot import emit_plot  # noqa: E402

Runner = Callable[[ExperimentConfig], ExperimentReport]

# experiment id -> (runner, plot kind or None)
EXPERIMENTS: Dict[str, Tuple[Runner, Optional[str]]] = {
    "mnist-stride": (run_mnist_stride, "epochs"),
    "mnist-window": (run_mnist_window, "epochs"),
    "poly": (run_poly, "degree"),
    "co2": (run_co2, "forecast"),
    "gradcheck": (run_gradcheck, None),
    "exact-poly": (run_exact_poly, None),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Windowed product unit network experiments")
    parser.add_argument("experiment_id", choices=EXPERIMENT_IDS)
    parser.add_argument("--config", type=Path, help="key=value config file")
    parser.add_argument("--w", type=int, help="window size")
    parser.add_argument("--s", type=int, help="stride")
    parser.add_argument("--d", type=int, help="polynomial degree")
    parser.add_argument("--lr", dest="learning_rate", type=float, help="Adam learning rate")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--subset", type=int, help="use the first n MNIST training images")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--data", dest="data_dir", help="data directory (default: $WPUNN_DATA_DIR or ./data)")
    parser.add_argument("--label", help="output file label (default: seed<seed>)")
    parser.add_argument("--repeats", type=int, help="seeds per degree in the polynomial experiment")
    parser.add_argument("--workers", type=int, help="parallel sweep workers")
    parser.add_argument("--eval-every", dest="eval_every", type=int, help="epochs between test evaluations")
    parser.add_argument("--count", type=int, help="polynomials checked by exact-poly")
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--bptt", dest="bptt_length", type=int, help="truncated BPTT length")
    parser.add_argument("--timing", action="store_true", default=None, help="fill the wall-seconds column")
    parser.add_argument("--quiet", action="store_true", default=None, help="suppress progress output")
    return parser


def write_report(report: ExperimentReport, out_dir: Path, plot_kind: Optional[str] = None) -> List[Path]:
    """
    Write {experiment-id}-{label}.csv and, if plot_kind is given, the matching .svg.

    Returns:
        Paths written
    """
    out_dir = Path(out_dir)
    written = [report.to_csv(out_dir / f"{report.name}.csv")]
    if plot_kind is not None and report.rows:
        svg_path = out_dir / f"{report.name}.svg"
        emit_plot(report, plot_kind, svg_path)
        written.append(svg_path)
    return written


def create_summary_report(report: ExperimentReport):
    """Print the run summary."""

    print(f"\n📊 SUMMARY REPORT")
    print("=" * 50)

    print(f"📈 Rows: {len(report.rows)} across {len(report.final_rows())} configurations")
    for key, value in report.summary.items():
        if "." in key:
            continue
        print(f"   • {key}: {value}")

    if report.failures:
        print(f"\n❌ {len(report.failures)} failures:")
        for failure in report.failures:
            print(f"   • {failure}")
    else:
        print("\n✅ All checks passed")


def run_experiment(config: ExperimentConfig) -> Tuple[ExperimentReport, List[Path]]:
    runner, plot_kind = EXPERIMENTS[config.experiment_id]
    report = runner(config)
    return report, write_report(report, config.out_path, plot_kind)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit status."""

    args = build_parser().parse_args(argv)
    start_time = datetime.now()

    print(f"🎯 STARTING {args.experiment_id.upper()} RUN")
    print("=" * 50)

    cli_values = {key: value for key, value in vars(args).items() if key not in ("experiment_id", "config")}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        config = build_config(args.experiment_id, file_values, cli_values)
        print(f"⚙️  Config: label={config.label}, seed={config.seed}, lr={config.learning_rate:g}, "
              f"epochs={config.epochs}")
        report, written = run_experiment(config)
    except WpunnError as e:
        print(f"❌ {args.experiment_id} error: {e}")
        return 1

    for path in written:
        print(f"💾 Saved {path}")

    if not config.quiet:
        create_summary_report(report)

    end_time = datetime.now()
    duration = (end_time - start_time).total_seconds()

    print(f"\n" + "=" * 50)
    print(f"🎉 {args.experiment_id.upper()} RUN COMPLETE!" if report.passed else f"❌ {args.experiment_id.upper()} RUN FAILED")
    print(f"⏱️  Duration: {duration:.1f} seconds")
    print(f"📅 Completed: {end_time.strftime('%Y-%m-%d %H:%M:%S')}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
