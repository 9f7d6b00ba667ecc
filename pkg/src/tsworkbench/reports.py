"""Report emitters: delimited text plus vector figures rendered side by side.

Every report writer produces a CSV and, where a chart is defined, an SVG
next to it in the output directory.  Charts follow the layouts used for
label-distribution comparison (grouped bars with error bars, reference
group first) and learning curves (one line per method plus a horizontal
reference level).
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dataset import ClassScheme
from .evaluation import LearningCurve
from .labelstats import LabelHistogram, histogram_group_stats
from .risk import RiskReport

REFERENCE = "reference"
METHOD_ORDER = ("RND", "FAFT", "2DV")

_BAR_COLORS = {
    REFERENCE: "#555555",
    "RND": "#1f77b4",
    "FAFT": "#ff7f0e",
    "2DV": "#2ca02c",
}

plt.rcParams.update({
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 9,
})


def _method_sort_key(method: str) -> tuple[int, str]:
    try:
        return (METHOD_ORDER.index(method), method)
    except ValueError:
        return (len(METHOD_ORDER), method)


def write_histogram_report(
    out_dir: str | Path,
    scheme: ClassScheme,
    per_method: Mapping[str, Sequence[tuple[str, LabelHistogram]]],
    reference: LabelHistogram | None = None,
    basename: str = "histograms",
) -> tuple[Path, Path]:
    """Write <basename>.csv and <basename>.svg; returns both paths.

    ``per_method`` maps method name to (annotator_id, histogram) pairs.
    The SD column is blank for single-annotator methods and the reference.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = sorted(per_method, key=_method_sort_key)
    annotators = sorted({a for hists in per_method.values() for a, _ in hists})

    rows = []
    series: dict[str, tuple] = {}   # name -> (mean, sd or None)
    if reference is not None:
        series[REFERENCE] = (reference.proportions, None)
        for i, cid in enumerate(scheme.class_ids):
            rows.append([REFERENCE, cid, f"{reference.proportions[i]:.6f}", ""] + [""] * len(annotators))
    for method in methods:
        hists = list(per_method[method])
        by_annotator = {a: h for a, h in hists}
        if len(hists) >= 2:
            stats = histogram_group_stats([h for _, h in hists])
            mean, sd = stats.mean, stats.sd
        else:
            mean, sd = hists[0][1].proportions, None
        series[method] = (mean, sd)
        for i, cid in enumerate(scheme.class_ids):
            row = [method, cid, f"{mean[i]:.6f}", "" if sd is None else f"{sd[i]:.6f}"]
            for a in annotators:
                row.append(f"{by_annotator[a].proportions[i]:.6f}" if a in by_annotator else "")
            rows.append(row)

    csv_path = out / f"{basename}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "class_id", "mean", "sd"] + annotators)
        writer.writerows(rows)

    svg_path = out / f"{basename}.svg"
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(scheme.classes) + 2), 4.0))
    names = list(series)
    width = 0.8 / len(names)
    x = range(len(scheme.classes))
    for pos, name in enumerate(names):
        mean, sd = series[name]
        offsets = [i + (pos - (len(names) - 1) / 2) * width for i in x]
        ax.bar(
            offsets, mean, width=width,
            yerr=None if sd is None else sd, capsize=2,
            label=name, color=_BAR_COLORS.get(name, "#999999"),
        )
    ax.set_xticks(list(x))
    ax.set_xticklabels([c.display_name for c in scheme.classes], rotation=30, ha="right")
    ax.set_ylabel("proportion")
    ax.set_title(f"label distribution: {scheme.track_name}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
    return csv_path, svg_path


def write_curve_report(
    out_dir: str | Path,
    curves: Mapping[str, LearningCurve],
    reference_level: float | None = None,
    title: str = "learning curve",
    basename: str = "curve",
) -> tuple[Path, Path]:
    """Write <basename>.csv and <basename>.svg; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = sorted(curves, key=_method_sort_key)
    max_repeats = max(
        (len(p.scores) for c in curves.values() for p in c.points), default=0
    )

    csv_path = out / f"{basename}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["method", "n_labels", "mean_score"]
            + [f"repeat_{i + 1}" for i in range(max_repeats)]
        )
        for method in methods:
            for point in curves[method].points:
                scores = [f"{s:.6f}" for s in point.scores]
                scores += [""] * (max_repeats - len(scores))
                writer.writerow([method, point.n_labels, f"{point.mean_score:.6f}"] + scores)
        if reference_level is not None:
            writer.writerow([REFERENCE, "", f"{reference_level:.6f}"] + [""] * max_repeats)

    svg_path = out / f"{basename}.svg"
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    for method in methods:
        points = curves[method].points
        ax.plot(
            [p.n_labels for p in points],
            [p.mean_score for p in points],
            marker="o",
            label=method,
            color=_BAR_COLORS.get(method, None),
        )
    if reference_level is not None:
        ax.axhline(reference_level, color="black", linewidth=1.2, label=REFERENCE)
    ax.set_xlabel("number of annotations")
    ax.set_ylabel("score (UAR)")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
    return csv_path, svg_path


_GROUP_DISPLAY = {"expert": "Expert", "non_expert": "Non-expert", "all": "All"}

_RISK_COLUMNS = (
    "Task",
    "Annotator group",
    "# Annotators",
    "Metrics used",
    "Ranked methods (combined risk score)",
)


def render_risk_table(reports: Sequence[RiskReport]) -> str:
    """Fixed-width table with one row per condition."""
    rows = [
        (
            r.condition.task,
            _GROUP_DISPLAY.get(r.condition.annotator_group, r.condition.annotator_group),
            str(r.condition.n_annotators),
            ", ".join(r.condition.metrics),
            r.ordering,
        )
        for r in reports
    ]
    widths = [
        max(len(col), *(len(row[i]) for row in rows)) if rows else len(col)
        for i, col in enumerate(_RISK_COLUMNS)
    ]
    def fmt(cells):
        return " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(_RISK_COLUMNS), "-+-".join("-" * w for w in widths)]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines) + "\n"


def write_risk_report(
    out_dir: str | Path,
    reports: Sequence[RiskReport],
    basename: str = "risk",
) -> tuple[Path, Path]:
    """Write <basename>.csv (per-method scores) and <basename>.txt (table)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{basename}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["task", "annotator_group", "n_annotators", "metrics", "method", "score", "ranking"]
        )
        for report in reports:
            for method in sorted(report.scores, key=lambda m: (report.scores[m], m)):
                writer.writerow(
                    [
                        report.condition.task,
                        report.condition.annotator_group,
                        report.condition.n_annotators,
                        "+".join(report.condition.metrics),
                        method,
                        f"{report.scores[method]:.1f}",
                        report.ordering,
                    ]
                )
    txt_path = out / f"{basename}.txt"
    txt_path.write_text(render_risk_table(reports), encoding="utf-8")
    return csv_path, txt_path
