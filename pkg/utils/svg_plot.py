"""
SVG figures for experiment reports.

Kinds:
    epochs    test metric against epoch, one curve per config label
    degree    final test error against polynomial degree (report.figure)
    forecast  training points, held-out points and forecast curves (report.figure)

Output is deterministic: the Agg backend, a fixed SVG hash salt and no date
metadata mean the same report always gives the same bytes. Every series is
drawn inside a group with id ``series-<n>``.
"""

import io
from pathlib import Path
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from utils.errors import ArgumentError  # noqa: E402
from utils.report_schema import ExperimentReport, Figure, Series  # noqa: E402

PLOT_KINDS = ("epochs", "degree", "forecast")
SVG_SALT = "wpunn"


def epoch_series(report: ExperimentReport) -> List[Series]:
    """One (epoch, test metric) curve per config label, skipping unmeasured epochs."""
    grouped = {}
    for row in report.sorted_rows():
        if row["test-metric"] is None:
            continue
        series = grouped.setdefault(row["config-label"], Series(row["config-label"], [], []))
        series.xs.append(row["epoch"])
        series.ys.append(row["test-metric"])
    return list(grouped.values())


def figure_for(report: ExperimentReport, kind: str) -> Figure:
    if kind not in PLOT_KINDS:
        raise ArgumentError(f"plot kind must be one of {PLOT_KINDS}, got '{kind}'")
    if kind == "epochs":
        if report.figure is None:
            return Figure(report.name, "epoch", "test metric", epoch_series(report))
        return Figure(report.figure.title, report.figure.x_label, report.figure.y_label, epoch_series(report))
    if report.figure is None:
        raise ArgumentError(f"'{kind}' plots need report.figure to be set")
    return report.figure


def render_svg(figure: Figure) -> str:
    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for index, series in enumerate(figure.series):
            if series.style == "points":
                (artist,) = ax.plot(series.xs, series.ys, linestyle="none", marker="o", markersize=2, label=series.label)
            else:
                (artist,) = ax.plot(series.xs, series.ys, linewidth=1.2, label=series.label)
            artist.set_gid(f"series-{index}")
        ax.set_title(figure.title)
        ax.set_xlabel(figure.x_label)
        ax.set_ylabel(figure.y_label)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        buffer = io.StringIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buffer.getvalue()


def emit_plot(report: ExperimentReport, kind: str, path: Optional[Path] = None) -> str:
    """
    Render a report as a self-contained SVG.

    Args:
        report: Experiment report
        kind: One of PLOT_KINDS
        path: Where to write the SVG (optional)

    Returns:
        The SVG text

    Raises:
        ArgumentError: If the report has nothing to plot or the kind is unknown
    """
    if not report.rows and report.figure is None:
        raise ArgumentError("cannot plot an empty report")
    figure = figure_for(report, kind)
    if not any(series.xs for series in figure.series):
        raise ArgumentError(f"report {report.name} has no data for a '{kind}' plot")
    svg = render_svg(figure)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(svg, encoding="utf-8")
    return svg
