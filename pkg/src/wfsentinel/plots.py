"""Figures for corpus reports, rendered headless to image files."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .corpus import TimingReport  # noqa: E402
from .findings import Weakness  # noqa: E402
from .reporting import Matrix  # noqa: E402


def plot_timing(reports: Mapping[str, TimingReport], out: str | Path) -> Path:
    """Median scan time per workflow, workflows ordered by size."""
    fig, ax = plt.subplots(figsize=(8, 4))
    for name, rep in reports.items():
        ax.plot(range(len(rep.rows)), [r[2] * 1000 for r in rep.rows], marker=".", linewidth=0.8,
                label=f"{name} (median {rep.median * 1000:.1f} ms)")
    ax.set_xlabel("workflows, sorted by lines of code")
    ax.set_ylabel("median scan time (ms)")
    ax.set_title("Scan time per workflow")
    ax.grid(alpha=0.3)
    ax.legend(loc="upper left", fontsize="small")
    fig.tight_layout()
    out = Path(out)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_matrix(columns: Mapping[str, Matrix], out: str | Path) -> Path:
    """Findings and affected workflows per weakness, one bar group per column."""
    weaknesses = list(Weakness)
    n = max(1, len(columns))
    width = 0.8 / n
    fig, (ax_total, ax_wf) = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
    for i, (name, matrix) in enumerate(columns.items()):
        ys = [j + i * width for j in range(len(weaknesses))]
        ax_total.barh(ys, [matrix[w][0] for w in weaknesses], height=width, label=name)
        ax_wf.barh(ys, [matrix[w][1] for w in weaknesses], height=width, label=name)
    ticks = [j + width * (n - 1) / 2 for j in range(len(weaknesses))]
    ax_total.set_yticks(ticks, [w.value for w in weaknesses])
    ax_total.invert_yaxis()
    ax_total.set_xlabel("findings")
    ax_wf.set_xlabel("workflows with a finding")
    ax_total.legend(fontsize="small")
    fig.suptitle("Findings per weakness")
    fig.tight_layout()
    out = Path(out)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
