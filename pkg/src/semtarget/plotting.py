"""Figure rendering for the report path.

One violin figure per metric, categories on the x axis are (source,
variant) pairs, the distribution is the per-group metric values (one per
attack). Rendering uses the Agg backend so it works headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

_METRIC_TITLES = {
    "fr": "Fooling rate",
    "tsr": "Targeted success rate",
    "dm": "Dissimilarity metric",
}


def render_metric_figures(
    rows: Sequence[tuple[str, str, str, float]],
    out_dir: str | Path,
    stem: str = "report",
    dpi: int = 120,
) -> list[Path]:
    """Write one PNG per metric present in the long-format rows; returns
    the written paths in metric order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_metric: dict[str, dict[tuple[str, str], list[float]]] = {}
    for metric, variant, source, value in rows:
        by_metric.setdefault(metric, {}).setdefault((source, variant), []).append(value)

    written: list[Path] = []
    for metric in ("fr", "tsr", "dm"):
        groups = by_metric.get(metric)
        if not groups:
            continue
        keys = sorted(groups)
        data = [groups[k] for k in keys]
        fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(keys), 4.0))
        ax.violinplot(data, positions=range(len(keys)), showmeans=True, widths=0.7)
        for pos, values in enumerate(data):
            ax.plot([pos] * len(values), values, "k.", markersize=4, alpha=0.6)
        ax.set_xticks(range(len(keys)))
        ax.set_xticklabels([f"{source}\n{variant}" for source, variant in keys], fontsize=9)
        ax.set_ylim(-0.05, 1.05)
        ax.set_ylabel(_METRIC_TITLES.get(metric, metric))
        ax.set_title(f"{_METRIC_TITLES.get(metric, metric)} by source and variant")
        ax.grid(axis="y", alpha=0.3)
        fig.tight_layout()
        path = out_dir / f"{stem}_{metric}.png"
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
        written.append(path)
    return written
