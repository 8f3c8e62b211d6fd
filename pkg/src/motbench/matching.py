"""Frame-by-frame tracker-to-target correspondence.

The protocol per frame t:

1. A pair matched at t-1 whose dissimilarity at t still passes the gate is
   carried over, even when a closer hypothesis exists. Carryover binds both
   members; no new match may claim either.
2. The remaining targets and hypotheses are matched by a bipartite
   assignment that maximizes the number of gated pairs and, among those,
   maximizes total overlap (2D) or minimizes total distance (3D). Pairs
   failing the gate are never matched.
3. Unmatched targets are misses (FN), unmatched hypotheses false alarms (FP).
4. An identity switch is counted when a target is matched to hypothesis j
   while its last known assignment, anywhere in the past, was some k != j.
   Carried-over pairs can never switch.

A target is "tracked" at a frame when it is matched there. A fragmentation
is one tracked -> untracked -> tracked transition inside the target's life
span (first to last appearance, gaps included); it is attributed to the
frame where the interruption began and only materializes once tracking
resumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import Box, WorldPoint, dist3d, iou
from .io import MotEntry, Trajectory

_FORBIDDEN = 1e9  # dominates any sum of gated costs, forcing maximum cardinality


class ModeError(ValueError):
    """3D matching requested for an entry without world coordinates."""


@dataclass(frozen=True)
class DistanceMode:
    """Gate definition: 2D overlap ratio or 3D Euclidean distance in meters."""

    kind: str  # "iou2d" | "euclid3d"
    threshold: float

    def __post_init__(self):
        if self.kind not in ("iou2d", "euclid3d"):
            raise ValueError(f"unknown distance mode {self.kind!r}")
        if self.kind == "iou2d" and not 0 < self.threshold <= 1:
            raise ValueError(f"overlap threshold must be in (0, 1], got {self.threshold}")
        if self.kind == "euclid3d" and self.threshold <= 0:
            raise ValueError(f"distance threshold must be positive, got {self.threshold}")

    @classmethod
    def iou2d(cls, threshold: float = 0.5) -> "DistanceMode":
        return cls("iou2d", threshold)

    @classmethod
    def euclid3d(cls, threshold: float = 1.0) -> "DistanceMode":
        return cls("euclid3d", threshold)

    @property
    def is_3d(self) -> bool:
        return self.kind == "euclid3d"


def _box(entry: MotEntry) -> Box:
    return Box(entry.bb_left, entry.bb_top, entry.bb_width, entry.bb_height)


def _world(entry: MotEntry) -> WorldPoint:
    return WorldPoint(entry.x, entry.y, entry.z)


def pair_value(gt: MotEntry, hyp: MotEntry, mode: DistanceMode) -> float:
    """Overlap (2D) or distance (3D) between a target and a hypothesis."""
    if mode.is_3d:
        for entry in (gt, hyp):
            if not entry.has_world_point:
                raise ModeError(
                    f"3D matching needs world coordinates; frame {entry.frame} "
                    f"id {entry.id} has none")
        return dist3d(_world(gt), _world(hyp))
    return iou(_box(gt), _box(hyp))


def passes_gate(value: float, mode: DistanceMode) -> bool:
    """Boundary values pass: overlap >= threshold, distance <= threshold."""
    if mode.is_3d:
        return value <= mode.threshold
    return value >= mode.threshold


def _dissimilarity(value: float, mode: DistanceMode) -> float:
    return value if mode.is_3d else 1.0 - value


@dataclass
class FrameEvents:
    frame: int
    matches: list[tuple[int, int, float]] = field(default_factory=list)
    fp_ids: list[int] = field(default_factory=list)
    fn_ids: list[int] = field(default_factory=list)
    idsw_ids: list[int] = field(default_factory=list)


@dataclass
class EventLog:
    """Per-frame events plus the per-target state all metrics derive from."""

    mode: DistanceMode
    frames: list[FrameEvents] = field(default_factory=list)
    # frames where each ground-truth target was matched
    tracked_frames: dict[int, set[int]] = field(default_factory=dict)
    # full assignment history per target: (frame, hyp_id)
    assignment_history: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    # (gt_id, frame interruption began), recorded at reacquisition
    fragmentations: list[tuple[int, int]] = field(default_factory=list)
    gt_boxes: int = 0
    hyp_boxes: int = 0

    @property
    def num_matches(self) -> int:
        return sum(len(f.matches) for f in self.frames)

    @property
    def fp(self) -> int:
        return sum(len(f.fp_ids) for f in self.frames)

    @property
    def fn(self) -> int:
        return sum(len(f.fn_ids) for f in self.frames)

    @property
    def idsw(self) -> int:
        return sum(len(f.idsw_ids) for f in self.frames)

    @property
    def fm(self) -> int:
        return len(self.fragmentations)

    def match_values(self) -> list[float]:
        return [v for f in self.frames for (_, _, v) in f.matches]

    def to_csv(self) -> str:
        """Dump one row per event: frame, kind, gt_id, hyp_id, value."""
        rows = ["frame,kind,gt_id,hyp_id,value"]
        for f in self.frames:
            for gt_id, hyp_id, value in f.matches:
                rows.append(f"{f.frame},MATCH,{gt_id},{hyp_id},{value!r}")
            for hyp_id in f.fp_ids:
                rows.append(f"{f.frame},FP,,{hyp_id},")
            for gt_id in f.fn_ids:
                rows.append(f"{f.frame},FN,{gt_id},,")
            for gt_id in f.idsw_ids:
                hyp_id = dict((fr, h) for fr, h in self.assignment_history[gt_id])[f.frame]
                rows.append(f"{f.frame},IDSW,{gt_id},{hyp_id},")
        return "\n".join(rows) + "\n"


def assign(gt_entries: list[MotEntry], hyp_entries: list[MotEntry],
           mode: DistanceMode) -> list[tuple[int, int, float]]:
    """Gated bipartite assignment on one frame.

    Inputs are ordered by id. Maximizes the number of gated pairs, then
    optimizes total dissimilarity; returns (gt index, hyp index, value).
    """
    if not gt_entries or not hyp_entries:
        return []
    n, m = len(gt_entries), len(hyp_entries)
    values = np.empty((n, m))
    cost = np.full((n, m), _FORBIDDEN)
    for i, g in enumerate(gt_entries):
        for j, h in enumerate(hyp_entries):
            v = pair_value(g, h, mode)
            values[i, j] = v
            if passes_gate(v, mode):
                cost[i, j] = _dissimilarity(v, mode)
    rows, cols = linear_sum_assignment(cost)
    return [(int(i), int(j), float(values[i, j]))
            for i, j in zip(rows, cols) if cost[i, j] < _FORBIDDEN]


def match_sequence(gt: list[Trajectory], hyp: list[Trajectory],
                   mode: DistanceMode) -> EventLog:
    """Run the correspondence protocol over a whole sequence.

    Ground-truth trajectories must already be stripped of conf-0 entries.
    """
    log = EventLog(mode=mode)
    frames = sorted({f for t in gt for f in t.entries} |
                    {f for t in hyp for f in t.entries})
    prev_assignment: dict[int, int] = {}   # gt id -> hyp id matched last frame
    last_known: dict[int, int] = {}        # gt id -> most recent hyp id ever

    for frame in frames:
        gt_here = {t.id: t.entries[frame] for t in gt if frame in t.entries}
        hyp_here = {t.id: t.entries[frame] for t in hyp if frame in t.entries}
        log.gt_boxes += len(gt_here)
        log.hyp_boxes += len(hyp_here)
        events = FrameEvents(frame=frame)

        # step 1: carry previous pairs over while they still pass the gate
        matched: dict[int, int] = {}
        for gt_id in sorted(prev_assignment):
            hyp_id = prev_assignment[gt_id]
            if gt_id not in gt_here or hyp_id not in hyp_here:
                continue
            value = pair_value(gt_here[gt_id], hyp_here[hyp_id], mode)
            if passes_gate(value, mode):
                matched[gt_id] = hyp_id
                events.matches.append((gt_id, hyp_id, value))

        # step 2: fresh assignment over whatever is left
        free_gt = sorted(g for g in gt_here if g not in matched)
        free_hyp = sorted(h for h in hyp_here if h not in matched.values())
        for i, j, value in assign([gt_here[g] for g in free_gt],
                                  [hyp_here[h] for h in free_hyp], mode):
            gt_id, hyp_id = free_gt[i], free_hyp[j]
            matched[gt_id] = hyp_id
            events.matches.append((gt_id, hyp_id, value))
            if gt_id in last_known and last_known[gt_id] != hyp_id:
                events.idsw_ids.append(gt_id)

        events.matches.sort()
        events.fn_ids = sorted(g for g in gt_here if g not in matched)
        events.fp_ids = sorted(h for h in hyp_here if h not in matched.values())

        for gt_id, hyp_id in matched.items():
            last_known[gt_id] = hyp_id
            log.tracked_frames.setdefault(gt_id, set()).add(frame)
            log.assignment_history.setdefault(gt_id, []).append((frame, hyp_id))

        prev_assignment = matched
        log.frames.append(events)

    # fragmentations: untracked gaps inside each target's life span that are
    # followed by a reacquisition, attributed to the first untracked frame
    for t in gt:
        tracked = log.tracked_frames.get(t.id, set())
        if not tracked:
            continue
        in_gap_since = None
        for frame in range(t.first_frame, t.last_frame + 1):
            if frame in tracked:
                if in_gap_since is not None:
                    log.fragmentations.append((t.id, in_gap_since))
                    in_gap_since = None
            elif in_gap_since is None and frame > min(tracked):
                in_gap_since = frame
    log.fragmentations.sort()
    return log


@dataclass
class CoverageRecord:
    gt_id: int
    life_span: int
    tracked_frames: int
    fragment_count: int

    @property
    def ratio(self) -> float:
        return self.tracked_frames / self.life_span


def coverage(log: EventLog, gt: list[Trajectory]) -> list[CoverageRecord]:
    """Per-target coverage over its life span; identity changes are irrelevant."""
    fragments_by_id: dict[int, int] = {}
    for gt_id, _ in log.fragmentations:
        fragments_by_id[gt_id] = fragments_by_id.get(gt_id, 0) + 1
    return [
        CoverageRecord(
            gt_id=t.id,
            life_span=t.life_span,
            tracked_frames=len(log.tracked_frames.get(t.id, ())),
            fragment_count=fragments_by_id.get(t.id, 0),
        )
        for t in gt
    ]
