"""Run reports: one JSON document per batch run, plus summary figures.

A report carries the tool version, the effective configuration, the
per-item records exactly as they went to stdout, and aggregate means
recomputed from those records (never accumulated separately, so the
invariant "aggregates equal recomputation" holds by construction).
Figures are rendered next to the report file as PNG.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_METRIC_KEYS = ("iou", "score", "kappa")


@dataclass
class RunReport:
    command: str
    version: str
    config: dict
    items: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)


def recompute_aggregates(items: list) -> dict:
    """Aggregate means over the per-item records.

    Every metric key gets an overall mean; when items carry a
    chart_type, per-type means are added alongside.
    """
    agg: dict = {"count": len(items)}
    for key in _METRIC_KEYS:
        values = [it[key] for it in items if key in it]
        if not values:
            continue
        agg[f"mean_{key}"] = sum(values) / len(values)
        by_type: dict = {}
        for it in items:
            if key in it and "chart_type" in it:
                by_type.setdefault(it["chart_type"], []).append(it[key])
        if by_type:
            agg[f"mean_{key}_by_type"] = {
                t: sum(v) / len(v) for t, v in sorted(by_type.items())
            }
    return agg


def build_report(command: str, version: str, config: dict, items: list) -> RunReport:
    return RunReport(command, version, dict(config), list(items),
                     recompute_aggregates(items))


def write_report(report: RunReport, path, figures: bool = True) -> list[Path]:
    """Write the JSON document; render the summary figure alongside it."""
    path = Path(path)
    path.write_text(json.dumps(asdict(report), indent=2, sort_keys=True) + "\n")
    written = [path]
    if figures:
        fig_path = path.with_name(path.stem + "_summary.png")
        if render_figure(report, fig_path):
            written.append(fig_path)
    return written


def _metric_key(items: list) -> str | None:
    for key in _METRIC_KEYS:
        if any(key in it for it in items):
            return key
    return None


def render_figure(report: RunReport, out_path) -> bool:
    """One summary PNG per report; returns False when there is nothing to plot."""
    items = report.items
    if report.command == "stats":
        return _render_stats_figure(report, out_path)
    key = _metric_key(items)
    if key is None:
        return False
    values = [it[key] for it in items if key in it]
    by_type = report.aggregates.get(f"mean_{key}_by_type")

    ncols = 2 if by_type else 1
    fig, axes = plt.subplots(1, ncols, figsize=(4.5 * ncols, 3.4))
    axes = [axes] if ncols == 1 else list(axes)

    ax = axes[0]
    if len(values) >= 8:
        ax.hist(values, bins=min(20, max(5, len(values) // 4)), color="#4878a8",
                edgecolor="white")
        ax.set_ylabel("items")
    else:
        ax.bar(range(len(values)), values, color="#4878a8")
        ax.set_xticks(range(len(values)))
        ax.set_ylabel(key)
    ax.set_xlabel(key)
    ax.set_title(f"{report.command}: {key} over {len(values)} items")

    if by_type:
        ax = axes[1]
        types = list(by_type)
        ax.bar(types, [by_type[t] for t in types], color="#a85448")
        ax.set_ylabel(f"mean {key}")
        ax.set_title("by chart type")

    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return True


def _render_stats_figure(report: RunReport, out_path) -> bool:
    items = [it for it in report.items if "chart_type" in it]
    if not items:
        return False
    fields = ["charts", "qa_pairs", "reasoning_steps", "qa_regions", "reasoning_regions"]
    types = [it["chart_type"] for it in items]
    fig, ax = plt.subplots(figsize=(7, 3.6))
    width = 0.8 / len(fields)
    for fi, f in enumerate(fields):
        xs = [i + fi * width for i in range(len(types))]
        ax.bar(xs, [it.get(f, 0) for it in items], width=width, label=f)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(types))])
    ax.set_xticklabels(types)
    ax.set_ylabel("count")
    ax.set_title("dataset composition by chart type")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return True
