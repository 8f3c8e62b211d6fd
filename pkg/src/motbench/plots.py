"""Report figures rendered next to the delimited outputs.

Everything here is presentation only; the computing modules never import
matplotlib, so headless evaluation works without a display and plotting
stays swappable.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .audit import DEFAULT_BIN_WIDTH, OUTLIER_SPEED, SpeedProfile
from .metrics import MetricsReport
from .ranking import RankTable


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def mota_by_sequence(report: MetricsReport, path: str | Path) -> Path:
    names = sorted(report.per_sequence)
    values = [report.per_sequence[n].mota for n in names]
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(names) + 2), 3.2))
    ax.bar(range(len(names)), values, color="#3572b0")
    ax.axhline(report.mota, color="#c0392b", linewidth=1,
               label=f"overall {report.mota:.1f}")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("MOTA [%]")
    ax.set_title(f"{report.name}: accuracy per sequence")
    ax.legend(fontsize=8)
    return _save(fig, path)


def speed_histogram(profile: SpeedProfile, path: str | Path, title: str = "",
                    bin_width: float = DEFAULT_BIN_WIDTH) -> Path:
    bins = profile.histogram(bin_width)
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    if bins:
        ax.bar([lo for lo, _, _ in bins], [c for _, _, c in bins],
               width=bin_width, align="edge", color="#3572b0")
    ax.axvline(OUTLIER_SPEED, color="#c0392b", linewidth=1, linestyle="--",
               label=f"{OUTLIER_SPEED:g} m/s")
    ax.set_xlabel("speed [m/s]")
    ax.set_ylabel("samples")
    ax.set_title(title or "pedestrian speeds")
    ax.legend(fontsize=8)
    return _save(fig, path)


def mean_speed_per_pedestrian(profile: SpeedProfile, path: str | Path,
                              title: str = "") -> Path:
    means = profile.mean_speeds()
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ids = list(means)
    ax.bar(range(len(ids)), [means[i] for i in ids], color="#3572b0")
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels([str(i) for i in ids], fontsize=7, rotation=90)
    ax.axhline(OUTLIER_SPEED, color="#c0392b", linewidth=1, linestyle="--")
    ax.set_xlabel("pedestrian id")
    ax.set_ylabel("mean speed [m/s]")
    ax.set_title(title or "mean speed per pedestrian")
    return _save(fig, path)


def speed_map(profile: SpeedProfile, path: str | Path, title: str = "") -> Path:
    """Speeds scattered over image space; hot spots expose calibration issues."""
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    if profile.samples:
        xs = [s.foot[0] for s in profile.samples]
        ys = [s.foot[1] for s in profile.samples]
        sc = ax.scatter(xs, ys, c=[s.speed for s in profile.samples],
                        s=12, cmap="inferno")
        fig.colorbar(sc, ax=ax, label="speed [m/s]")
    ax.invert_yaxis()  # image rows grow downward
    ax.set_xlabel("x [px]")
    ax.set_ylabel("y [px]")
    ax.set_title(title or "speed distribution in image space")
    return _save(fig, path)


def rank_chart(table: RankTable, path: str | Path) -> Path:
    names = [name for name, _, _ in table.rows]
    values = [avg for _, avg, _ in table.rows]
    fig, ax = plt.subplots(figsize=(5, 0.4 * len(names) + 1.6))
    ax.barh(range(len(names)), values, color="#3572b0")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("average rank (lower is better)")
    return _save(fig, path)
