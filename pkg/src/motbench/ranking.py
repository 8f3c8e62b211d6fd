"""Average-rank leaderboard over several trackers' reports.

Every tracker is ranked on each metric separately (1 = best, ties share the
mean of the positions they occupy) and the ranks are averaged over the
metric set. The default set is the ten measures MOTA, MOTP, FAR, MT, ML,
FP, FN, IDSW, relID and FM; which direction counts as better is part of
the metric definition and can be overridden along with the set itself.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.stats import rankdata

from .metrics import MetricsReport

HIGHER_BETTER = frozenset({"MOTA", "MOTP", "MT", "Rcll", "Prcn", "Hz"})

DEFAULT_METRICS = ("MOTA", "MOTP", "FAR", "MT", "ML", "FP", "FN", "IDSW",
                   "relID", "FM")


class MissingMetric(ValueError):
    def __init__(self, tracker: str, metric: str):
        super().__init__(f"tracker {tracker!r} has no value for metric {metric!r}")
        self.tracker = tracker
        self.metric = metric


@dataclass
class RankTable:
    metrics: tuple[str, ...]
    # (tracker name, average rank, per-metric rank) sorted by average rank
    rows: list[tuple[str, float, dict[str, float]]]

    def to_text(self) -> str:
        header = ["Tracker", "AvgRank", *self.metrics]
        lines = [header]
        for name, avg, ranks in self.rows:
            lines.append([name, f"{avg:.2f}"] + [f"{ranks[m]:.1f}" for m in self.metrics])
        widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
            for row in lines) + "\n"

    def to_kv(self) -> str:
        lines = [f"metrics={','.join(self.metrics)}"]
        for name, avg, ranks in self.rows:
            per_metric = ",".join(repr(ranks[m]) for m in self.metrics)
            lines.append(f"{name}={avg!r};{per_metric}")
        return "\n".join(lines) + "\n"


def average_rank(reports: list[tuple[str, MetricsReport]],
                 metrics: tuple[str, ...] = DEFAULT_METRICS) -> RankTable:
    """Build the leaderboard; needs at least two reports.

    Ranks depend only on the ordering of the underlying values, so any
    strictly monotone rescaling of a metric leaves the table unchanged.
    """
    if len(reports) < 2:
        raise ValueError("ranking needs at least two reports")
    names = [name for name, _ in reports]
    if len(set(names)) != len(names):
        raise ValueError("tracker names must be unique")

    per_metric: dict[str, list[float]] = {}
    for metric in metrics:
        column = []
        for name, report in reports:
            value = report.value(metric)
            if value is None:
                raise MissingMetric(name, metric)
            column.append(float(value))
        if metric in HIGHER_BETTER:
            column = [-v for v in column]
        per_metric[metric] = [float(r) for r in rankdata(column, method="average")]

    rows = []
    for i, name in enumerate(names):
        ranks = {m: per_metric[m][i] for m in metrics}
        rows.append((name, sum(ranks.values()) / len(metrics), ranks))
    rows.sort(key=lambda r: (r[1], r[0]))
    return RankTable(metrics=tuple(metrics), rows=rows)
