"""
Runs the independent configurations of a sweep and merges their reports.

Each configuration is a (label, keyword arguments) pair handed to a
module-level task function. With more than one worker the configurations
run in a process pool; results are merged in label order, not completion
order, so the output does not depend on scheduling.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from utils.errors import WpunnError
from utils.report_schema import ExperimentReport

Task = Callable[..., ExperimentReport]
Configuration = Tuple[str, Dict[str, Any]]


def announce(quiet: bool, message: str):
    if not quiet:
        print(message)


def _run_one(task: Task, label: str, kwargs: Dict[str, Any]) -> Tuple[str, Optional[ExperimentReport], Optional[str]]:
    try:
        return label, task(**kwargs), None
    except WpunnError as e:
        return label, None, f"{type(e).__name__}: {e}"


def run_configurations(
    task: Task,
    configurations: Sequence[Configuration],
    workers: int = 1,
    quiet: bool = False,
) -> List[Tuple[str, Optional[ExperimentReport], Optional[str]]]:
    """
    Run every configuration, sequentially or in a process pool.

    Returns:
        (label, report or None, error message or None) sorted by label
    """
    results = []
    if workers > 1 and len(configurations) > 1:
        announce(quiet, f"   ⚙️  Running {len(configurations)} configurations on {workers} workers...")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, task, label, kwargs) for label, kwargs in configurations]
            results = [future.result() for future in futures]
    else:
        for label, kwargs in configurations:
            announce(quiet, f"\n📊 Running {label}...")
            results.append(_run_one(task, label, kwargs))
    results.sort(key=lambda item: item[0])
    for label, report, error in results:
        if error is None:
            final = report.sorted_rows()[-1] if report.rows else None
            metric = final["test-metric"] if final else None
            shown = "n/a" if metric is None else f"{metric:.6g}"
            announce(quiet, f"✅ {label}: final test metric {shown}")
        else:
            announce(quiet, f"❌ {label} error: {error}")
    return results


def merge_reports(
    experiment_id: str,
    label: str,
    results: Sequence[Tuple[str, Optional[ExperimentReport], Optional[str]]],
) -> ExperimentReport:
    """Combine per-configuration reports; failed configurations become failures."""
    merged = ExperimentReport(experiment_id, label)
    for config_label, report, error in results:
        if error is not None:
            merged.failures.append(f"{config_label}: {error}")
            continue
        merged.extend(report)
        for key, value in report.summary.items():
            merged.summary[f"{config_label}.{key}"] = value
    return merged


def epoch_printer(label: str, quiet: bool, every: int = 1):
    """Progress callback printing one line per measured epoch, or None when quiet."""
    if quiet:
        return None

    def report(epoch: int, train_loss: float, test_metric: Optional[float]):
        if epoch % every and test_metric is None:
            return
        shown = "" if test_metric is None else f" | test {test_metric:.6g}"
        print(f"   {label} epoch {epoch}: train loss {train_loss:.6g}{shown}")

    return report
