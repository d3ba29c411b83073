"""Figure rendering for comparison reports.

The evaluation layer emits plot-ready CSV/JSON; this module turns the
rolling series of a report into PNG figures next to the delimited output.
Rendering is headless (Agg) so it works in batch runs and CI alike.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import EvaluationReport
from .timegrid import hour_to_datetime

_SERIES_TITLES = {
    "quarterly_rmse": ("Rolling quarterly RMSE", "RMSE"),
    "quarterly_smape": ("Rolling quarterly sMAPE", "sMAPE (%)"),
    "yearly_smape": ("Yearly sMAPE", "sMAPE (%)"),
}


def _render_series(report: EvaluationReport, series: str, path: Path) -> None:
    title, ylabel = _SERIES_TITLES[series]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for summary in report.summaries:
        rows = summary.rolling[series]
        stamps = [hour_to_datetime(h, report.epoch) for h, _, _ in rows]
        values = [v for _, v, _ in rows]
        marker = "o" if series.startswith("yearly") else None
        ax.plot(stamps, values, label=summary.name, marker=marker, markersize=3)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report_figures(report: EvaluationReport, outdir) -> list[Path]:
    """Write one PNG per rolling series; returns the created paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for series in _SERIES_TITLES:
        path = outdir / f"{series}.png"
        _render_series(report, series, path)
        paths.append(path)
    return paths
