"""Figure rendering for report documents.

Every report the CLI writes as JSON/text gets a sibling PNG here. The Agg
backend is forced so rendering works without a display.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .cost_model import BreakevenReport
from .perplexity_harness import PerplexityReport
from .quality_metrics import DistributionSummary

_DPI = 120


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_distributions(
    summaries: Mapping[str, DistributionSummary],
    title: str,
    path: Union[str, Path],
) -> Path:
    """Overlay the KDE curves of one metric across corpus slices."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, summary in sorted(summaries.items()):
        if summary.point_mass:
            ax.axvline(summary.mean, linestyle="--", label=f"{label} (point mass)")
            continue
        xs = [x for x, _ in summary.kde_grid]
        ys = [y for _, y in summary.kde_grid]
        ax.plot(xs, ys, label=f"{label} (n={summary.n_kept})")
    ax.set_title(title)
    ax.set_xlabel("value")
    ax.set_ylabel("density")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)


def plot_perplexity(report: PerplexityReport, path: Union[str, Path]) -> Path:
    """Horizontal bars per domain with the weighted average marked."""
    domains = [r.domain for r in report.rows]
    values = [r.perplexity for r in report.rows]
    fig, ax = plt.subplots(figsize=(7, max(3, 0.3 * len(domains) + 1)))
    ax.barh(domains, values)
    ax.axvline(report.weighted_average, color="black", linestyle="--",
               label=f"weighted avg = {report.weighted_average:.3f}")
    ax.set_xlabel("macro perplexity")
    ax.set_title("per-domain perplexity")
    ax.invert_yaxis()
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)


def plot_cost(report: BreakevenReport, path: Union[str, Path]) -> Path:
    """Computed generation/training GPU-hours next to the reference figures."""
    labels = ["generation", "training"]
    computed = [report.generation_hours, report.training_hours]
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = range(len(labels))
    ax.bar([x - 0.2 for x in xs], computed, width=0.4, label="computed")
    reference = [
        report.preset.reported_generation_gpu_hours or 0.0,
        report.preset.reported_training_gpu_hours[0]
        if report.preset.reported_training_gpu_hours
        else 0.0,
    ]
    if any(reference):
        ax.bar([x + 0.2 for x in xs], reference, width=0.4, label="reference")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_ylabel("GPU-hours")
    ax.set_title(f"cost breakdown ({report.preset.name})")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)
