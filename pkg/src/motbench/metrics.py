"""Tracking scores computed from event logs: accuracy, precision, track quality.

Counts are summed over all sequences of a benchmark first and the scalar
scores computed once from the sums; averaging per-sequence percentages would
weight small sequences as much as large ones. Percentages are kept at full
precision and rounded to one decimal only for display.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .io import (MotEntry, ResultBundle, SequenceMeta, active_entries,
                 build_trajectories, parse_key_values)
from .matching import CoverageRecord, DistanceMode, EventLog, coverage, match_sequence

MT_THRESHOLD = 0.8  # tracked for at least 80% of the life span
ML_THRESHOLD = 0.2  # tracked for less than 20%


class UndefinedMetricError(ValueError):
    """A score whose denominator is empty (no ground truth, no frames, ...)."""


def mota(fn: int, fp: int, idsw: int, gt_boxes: int) -> float:
    """Tracking accuracy in percent: 100 * (1 - (FN+FP+IDSW)/GT).

    Unbounded below; 100 only when no error of any kind was made.
    """
    if gt_boxes <= 0:
        raise UndefinedMetricError("MOTA needs at least one ground-truth box")
    return 100.0 * (1.0 - (fn + fp + idsw) / gt_boxes)


def motp(log: EventLog, mode: DistanceMode) -> float | None:
    """Localization precision of the true positives, in percent.

    2D: mean bounding-box overlap of all matches, so between the gate and
    100. 3D: distances normalized by the gate, 100 * (1 - mean/threshold),
    between 0 and 100. None when there are no matches at all.
    """
    if mode.kind != log.mode.kind:
        raise UndefinedMetricError(
            f"log was matched in {log.mode.kind} mode, not {mode.kind}")
    values = log.match_values()
    if not values:
        return None
    return motp_from_values(values, mode)


def motp_from_values(values: list[float], mode: DistanceMode) -> float:
    if not values:
        raise UndefinedMetricError("MOTP needs at least one match")
    mean = sum(values) / len(values)
    if mode.is_3d:
        return 100.0 * (1.0 - mean / mode.threshold)
    return 100.0 * mean


def far(fp: int, frames: int) -> float:
    """False alarms per frame."""
    if frames <= 0:
        raise UndefinedMetricError("FAR needs at least one frame")
    return fp / frames


@dataclass
class TrackQuality:
    mt: int
    pt: int
    ml: int
    fm: int

    @property
    def total(self) -> int:
        return self.mt + self.pt + self.ml

    @property
    def mt_pct(self) -> float:
        return 100.0 * self.mt / self.total

    @property
    def pt_pct(self) -> float:
        return 100.0 * self.pt / self.total

    @property
    def ml_pct(self) -> float:
        return 100.0 * self.ml / self.total


def track_quality(records: list[CoverageRecord]) -> TrackQuality:
    """Classify targets as mostly tracked / partial / mostly lost and sum FM.

    The 80% bound is inclusive (at least 80% is MT); the 20% bound is
    exclusive (ML needs strictly less than 20%).
    """
    if not records:
        raise UndefinedMetricError("track quality needs at least one trajectory")
    mt = sum(1 for r in records if r.ratio >= MT_THRESHOLD)
    ml = sum(1 for r in records if r.ratio < ML_THRESHOLD)
    fm = sum(r.fragment_count for r in records)
    return TrackQuality(mt=mt, pt=len(records) - mt - ml, ml=ml, fm=fm)


def recall_pct(tp: int, gt_boxes: int) -> float:
    if gt_boxes <= 0:
        raise UndefinedMetricError("recall needs at least one ground-truth box")
    return 100.0 * tp / gt_boxes


def precision_pct(tp: int, fp: int) -> float | None:
    return None if tp + fp == 0 else 100.0 * tp / (tp + fp)


def relative_ratios(idsw: int, fm: int, recall: float) -> tuple[float, float] | None:
    """Switches and fragmentations per recall percent; None at zero recall."""
    if recall == 0:
        return None
    return idsw / recall, fm / recall


NA = "n/a"

# Table column order used by every emitter.
COLUMNS = ("MOTA", "MOTP", "FAR", "MT", "ML", "FP", "FN", "IDSW",
           "relID", "FM", "relFM", "Rcll", "Prcn", "Hz")


@dataclass
class MetricsReport:
    """Every score for one tracker over one sequence set."""

    name: str
    mode: DistanceMode
    fp: int
    fn: int
    idsw: int
    fm: int
    matches: int
    gt_boxes: int
    gt_tracks: int
    frames: int
    mota: float
    mota_stddev: float
    motp: float | None
    far: float
    mt_pct: float
    pt_pct: float
    ml_pct: float
    recall: float
    precision: float | None
    rel_id: float | None
    rel_fm: float | None
    runtime_hz: float | None = None
    per_sequence: dict[str, "MetricsReport"] = field(default_factory=dict)

    def value(self, column: str) -> float | None:
        return {
            "MOTA": self.mota, "MOTP": self.motp, "FAR": self.far,
            "MT": self.mt_pct, "ML": self.ml_pct, "FP": self.fp,
            "FN": self.fn, "IDSW": self.idsw, "relID": self.rel_id,
            "FM": self.fm, "relFM": self.rel_fm, "Rcll": self.recall,
            "Prcn": self.precision, "Hz": self.runtime_hz,
        }[column]


def _fmt(value: float | None, decimals: int = 1) -> str:
    if value is None:
        return NA
    if isinstance(value, int):
        return str(value)
    return f"{value:.{decimals}f}"


def report_to_text(report: MetricsReport) -> str:
    """Aligned table, overall row last, MOTA with its across-sequence spread."""
    header = ["Sequence", *COLUMNS]
    rows = []
    for name in sorted(report.per_sequence):
        sub = report.per_sequence[name]
        rows.append([name] + [_fmt(sub.value(c)) for c in COLUMNS])
    overall = ["OVERALL"] + [_fmt(report.value(c)) for c in COLUMNS]
    overall[1] = f"{_fmt(report.mota)} ±{_fmt(report.mota_stddev)}"
    rows.append(overall)
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


_KV_FIELDS = ("fp", "fn", "idsw", "fm", "matches", "gt_boxes", "gt_tracks", "frames")
_KV_FLOATS = ("mota", "mota_stddev", "motp", "far", "mt_pct", "pt_pct", "ml_pct",
              "recall", "precision", "rel_id", "rel_fm", "runtime_hz")


def report_to_kv(report: MetricsReport) -> str:
    """Machine-readable key=value document, full precision."""
    lines = [f"name={report.name}",
             f"mode={report.mode.kind}",
             f"threshold={report.mode.threshold!r}"]
    for f in _KV_FIELDS:
        lines.append(f"{f}={getattr(report, f)}")
    for f in _KV_FLOATS:
        v = getattr(report, f)
        lines.append(f"{f}={NA if v is None else repr(float(v))}")
    return "\n".join(lines) + "\n"


def report_from_kv(text: str) -> MetricsReport:
    kv = parse_key_values(text)

    def fnum(key: str) -> float | None:
        v = kv[key]
        return None if v == NA else float(v)

    return MetricsReport(
        name=kv["name"],
        mode=DistanceMode(kv["mode"], float(kv["threshold"])),
        **{f: int(kv[f]) for f in _KV_FIELDS},
        **{f: fnum(f) for f in _KV_FLOATS},
    )


def breakdown_to_csv(report: MetricsReport) -> str:
    """Per-sequence breakdown, one CSV row per sequence plus OVERALL."""
    header = "sequence," + ",".join(COLUMNS)
    rows = [header]
    items = [(n, report.per_sequence[n]) for n in sorted(report.per_sequence)]
    items.append(("OVERALL", report))
    for name, rep in items:
        cells = [name]
        for c in COLUMNS:
            v = rep.value(c)
            cells.append(NA if v is None else (str(v) if isinstance(v, int) else repr(v)))
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# evaluation drivers

class MissingResult(KeyError):
    def __init__(self, sequence: str):
        super().__init__(f"no result entries for sequence {sequence!r}")
        self.sequence = sequence


@dataclass
class SequenceCounts:
    """Raw tallies for one sequence, the unit that aggregation sums over."""

    name: str
    log: EventLog
    records: list[CoverageRecord]
    frames: int


def evaluate_sequence(gt_entries: list[MotEntry], hyp_entries: list[MotEntry],
                      mode: DistanceMode, name: str = "",
                      meta: SequenceMeta | None = None) -> SequenceCounts:
    """Match one sequence. Ground truth entries flagged 0 are dropped here."""
    gt_active = active_entries(gt_entries)
    if not gt_active:
        raise UndefinedMetricError(f"sequence {name or '?'}: no active ground truth")
    gt = build_trajectories(gt_active)
    hyp = build_trajectories(active_entries(hyp_entries))
    log = match_sequence(gt, hyp, mode)
    if meta is not None:
        frames = meta.length
    else:
        frames = max((f.frame for f in log.frames), default=0)
    return SequenceCounts(name=name, log=log,
                          records=coverage(log, gt), frames=frames)


def _report_from_counts(name: str, mode: DistanceMode, counts: list[SequenceCounts],
                        mota_stddev: float, runtime_hz: float | None) -> MetricsReport:
    fp = sum(c.log.fp for c in counts)
    fn = sum(c.log.fn for c in counts)
    idsw = sum(c.log.idsw for c in counts)
    matches = sum(c.log.num_matches for c in counts)
    gt_boxes = sum(c.log.gt_boxes for c in counts)
    frames = sum(c.frames for c in counts)
    records = [r for c in counts for r in c.records]
    quality = track_quality(records)
    values = [v for c in counts for v in c.log.match_values()]
    recall = recall_pct(matches, gt_boxes)
    rel = relative_ratios(idsw, quality.fm, recall)
    return MetricsReport(
        name=name,
        mode=mode,
        fp=fp, fn=fn, idsw=idsw, fm=quality.fm,
        matches=matches, gt_boxes=gt_boxes, gt_tracks=len(records),
        frames=frames,
        mota=mota(fn, fp, idsw, gt_boxes),
        mota_stddev=mota_stddev,
        motp=motp_from_values(values, mode) if values else None,
        far=far(fp, frames),
        mt_pct=quality.mt_pct, pt_pct=quality.pt_pct, ml_pct=quality.ml_pct,
        recall=recall,
        precision=precision_pct(matches, fp),
        rel_id=rel[0] if rel else None,
        rel_fm=rel[1] if rel else None,
        runtime_hz=runtime_hz,
    )


def evaluate_benchmark(gt: dict[str, list[MotEntry]], results: ResultBundle,
                       mode: DistanceMode, name: str = "tracker",
                       metas: dict[str, SequenceMeta] | None = None,
                       runtime_hz: float | None = None,
                       stddev: str = "population",
                       jobs: int = 1) -> MetricsReport:
    """Evaluate a result bundle against ground truth over every sequence.

    All counts are summed across sequences before any score is computed.
    The MOTA spread is the standard deviation of the per-sequence MOTA
    values; population by default, 'sample' is accepted too. Sequences are
    matched independently (in ``jobs`` threads when asked) and always
    reduced in sorted name order, so the report does not depend on
    scheduling.
    """
    names = sorted(gt)
    for seq in names:
        if seq not in results:
            raise MissingResult(seq)

    def one(seq: str) -> SequenceCounts:
        return evaluate_sequence(gt[seq], results[seq], mode, name=seq,
                                 meta=(metas or {}).get(seq))

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            counts = list(pool.map(one, names))
    else:
        counts = [one(seq) for seq in names]
    per_sequence = {c.name: _report_from_counts(c.name, mode, [c], 0.0, None)
                    for c in counts}

    motas = [per_sequence[s].mota for s in sorted(per_sequence)]
    if len(motas) < 2:
        spread = 0.0
    elif stddev == "sample":
        spread = statistics.stdev(motas)
    else:
        spread = statistics.pstdev(motas)

    report = _report_from_counts(name, mode, counts, spread, runtime_hz)
    report.per_sequence = per_sequence
    return report


def check_3d_available(entries: list[MotEntry], name: str = "") -> None:
    """Fail fast when 3D evaluation is requested without world coordinates."""
    for e in entries:
        if e.active and not e.has_world_point:
            raise UndefinedMetricError(
                f"sequence {name or '?'}: frame {e.frame} id {e.id} has no "
                "world coordinates; 3D evaluation is impossible")
