"""Analysis report rendering: JSON, CSV, and boxplot figures.

``write_report`` runs the Manual-versus-SG comparison for the requested
measures and writes three kinds of artifact next to each other in one
output directory:

- ``report.json``: the full comparison (summaries, normality verdicts,
  test result, boxplot data) per measure;
- ``records.csv``: the analyzed records, one row each;
- ``boxplot_<measure>.png``: a figure per measure drawn from the
  precomputed quartiles/whiskers/outliers, the same numbers the JSON
  carries.  The figure stage recomputes nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")  # headless renders only; never require a display

import matplotlib.pyplot as plt

from .game import TrialRecord
from .stats import BoxplotStats, GroupComparison, compare_groups
from .store import export_csv

__all__ = ["MEASURE_LABELS", "ReportPaths", "render_boxplot", "write_report"]

# CLI-facing measure names and their record fields / axis labels.
MEASURE_LABELS = {
    "time": ("elapsed_s", "Round time (minutes)"),
    "grade": ("grade", "Grade (1-10)"),
}


@dataclass(frozen=True)
class ReportPaths:
    """Artifacts produced by one analysis run."""

    report_json: Path
    records_csv: Path
    figures: tuple[Path, ...]


def render_boxplot(
    comparison: GroupComparison, axis_label: str, out_path: Union[str, Path]
) -> Path:
    """Draw the two-group boxplot from precomputed stats."""
    out_path = Path(out_path)

    def as_bxp(stats: BoxplotStats) -> dict:
        return {
            "label": stats.label,
            "med": stats.median,
            "q1": stats.q1,
            "q3": stats.q3,
            "whislo": stats.whisker_low,
            "whishi": stats.whisker_high,
            "fliers": list(stats.outliers),
        }

    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    try:
        ax.bxp(
            [as_bxp(comparison.manual_box), as_bxp(comparison.sg_box)],
            showmeans=False,
        )
        ax.set_ylabel(axis_label)
        ax.set_title(f"Manual vs SG: {comparison.measure}")
        ax.grid(True, axis="y", alpha=0.3)
        fig.tight_layout()
        fig.savefig(out_path, dpi=120)
    finally:
        plt.close(fig)
    return out_path


def write_report(
    records: Sequence[TrialRecord],
    out_dir: Union[str, Path],
    measures: Sequence[str] = ("time", "grade"),
    alpha: float = 0.05,
) -> ReportPaths:
    """Analyze ``records`` and write report.json, records.csv, figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    comparisons: dict[str, GroupComparison] = {}
    figures: list[Path] = []
    for measure in measures:
        if measure not in MEASURE_LABELS:
            raise ValueError(
                f"measure must be one of {sorted(MEASURE_LABELS)}, got {measure!r}"
            )
        field_name, axis_label = MEASURE_LABELS[measure]
        comparison = compare_groups(records, field_name, alpha=alpha)
        comparisons[measure] = comparison
        figures.append(
            render_boxplot(comparison, axis_label, out_dir / f"boxplot_{measure}.png")
        )

    report = {
        "record_count": len(records),
        "measures": {name: cmp.to_dict() for name, cmp in comparisons.items()},
    }
    report_json = out_dir / "report.json"
    report_json.write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    records_csv = out_dir / "records.csv"
    export_csv(records, records_csv)
    return ReportPaths(
        report_json=report_json, records_csv=records_csv, figures=tuple(figures)
    )
