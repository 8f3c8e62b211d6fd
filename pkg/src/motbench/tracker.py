"""Reference tracking-by-detection via min-cost flow over a detection graph.

Every detection becomes a node; edges link detections 1..max_gap frames
apart whose boxes overlap at least gate_iou. Source and sink nodes let
trajectories start and end anywhere. Costs follow the usual log-likelihood
shape: a confident detection contributes a negative node cost
log((1-p)/p), a transition costs -log(affinity), and starting or ending a
track costs a fixed amount. The affinity is the box overlap attenuated
geometrically per skipped frame, so it always lies in (0, 1].

The solver augments one unit of flow along the cheapest source-sink path
of the residual graph, repeating while that path has negative cost. Node
capacities are 1, so the final flow decomposes into node-disjoint paths;
on small instances the total cost equals exhaustive enumeration over all
node-disjoint path sets. Successive path costs never decrease, which
bounds the number of iterations by the number of accepted tracks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .geometry import Box, foot_point, iou, project_ground
from .io import MotEntry, Trajectory, parse_key_values

GAP_DECAY = 0.9       # per skipped frame
_EPS = 1e-12
_PRIOR_FLOOR = 1e-3   # keep log-odds finite for conf 0 / conf 1 detections


@dataclass(frozen=True)
class TrackerParams:
    entry_exit_cost: float = 2.0
    max_gap: int = 3
    gate_iou: float = 0.3
    confidence_floor: float = 0.05
    nms_overlap: float = 0.6

    def __post_init__(self):
        if self.entry_exit_cost <= 0:
            raise ValueError("entry_exit_cost must be positive")
        if self.max_gap < 1:
            raise ValueError("max_gap must be at least 1")
        if not 0 < self.gate_iou < 1:
            raise ValueError("gate_iou must be in (0, 1)")
        if self.confidence_floor <= 0:
            raise ValueError("confidence_floor must be positive")
        if not 0 < self.nms_overlap < 1:
            raise ValueError("nms_overlap must be in (0, 1)")

    @classmethod
    def from_kv(cls, text: str) -> "TrackerParams":
        kv = parse_key_values(text)
        kwargs = {}
        for f in fields(cls):
            if f.name in kv:
                value = float(kv[f.name])
                kwargs[f.name] = int(value) if f.name == "max_gap" else value
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "TrackerParams":
        return cls.from_kv(Path(path).read_text())

    def to_kv(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)!r}\n" if f.name != "max_gap"
                       else f"max_gap={self.max_gap}\n" for f in fields(self))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_kv())


def nms(detections: list[MotEntry], overlap: float) -> list[MotEntry]:
    """Greedy suppression: keep the most confident box, drop what overlaps it.

    A detection is discarded when its overlap with an already kept one
    exceeds ``overlap``. Ties favor earlier file order.
    """
    order = sorted(range(len(detections)),
                   key=lambda i: (-detections[i].conf, i))
    kept: list[int] = []
    boxes = [Box(d.bb_left, d.bb_top, d.bb_width, d.bb_height) for d in detections]
    for i in order:
        if all(iou(boxes[i], boxes[j]) <= overlap for j in kept):
            kept.append(i)
    return [detections[i] for i in sorted(kept)]


def _prior(conf: float) -> float:
    return min(max(conf, _PRIOR_FLOOR), 1.0 - _PRIOR_FLOOR)


def node_cost(conf: float) -> float:
    """Log-odds against the detection being real: negative when conf > 0.5."""
    p = _prior(conf)
    return math.log((1.0 - p) / p)


def affinity(a: MotEntry, b: MotEntry) -> float:
    """Overlap attenuated by the frame gap; defined for b later than a."""
    gap = b.frame - a.frame
    overlap = iou(Box(a.bb_left, a.bb_top, a.bb_width, a.bb_height),
                  Box(b.bb_left, b.bb_top, b.bb_width, b.bb_height))
    return overlap * GAP_DECAY ** (gap - 1)


@dataclass
class FlowGraph:
    """Detection graph plus the solved node-disjoint paths."""

    detections: list[MotEntry]
    edges: list[tuple[int, int, float]]  # (from index, to index, transition cost)
    entry_exit_cost: float


def build_graph(detections: list[MotEntry], params: TrackerParams) -> FlowGraph:
    """Detections must be sorted by (frame, original order)."""
    edges = []
    boxes = [Box(d.bb_left, d.bb_top, d.bb_width, d.bb_height) for d in detections]
    by_frame: dict[int, list[int]] = {}
    for i, d in enumerate(detections):
        by_frame.setdefault(d.frame, []).append(i)
    for i, d in enumerate(detections):
        for gap in range(1, params.max_gap + 1):
            for j in by_frame.get(d.frame + gap, ()):
                overlap = iou(boxes[i], boxes[j])
                if overlap >= params.gate_iou:
                    edges.append((i, j, -math.log(overlap * GAP_DECAY ** (gap - 1))))
    return FlowGraph(detections=detections, edges=edges,
                     entry_exit_cost=params.entry_exit_cost)


class _Arc:
    __slots__ = ("tail", "head", "cost", "cap", "flow")

    def __init__(self, tail: int, head: int, cost: float):
        self.tail = tail
        self.head = head
        self.cost = cost
        self.cap = 1
        self.flow = 0


def solve_flow(graph: FlowGraph) -> tuple[list[list[int]], float, list[float]]:
    """Min-cost set of node-disjoint paths by successive shortest paths.

    Returns (paths as detection index lists, total cost, per-iteration path
    costs). Augmentation stops at the first nonnegative shortest path, which
    is the global minimum because successive path costs never decrease.
    """
    n = len(graph.detections)
    if n == 0:
        return [], 0.0, []
    source, sink = 2 * n, 2 * n + 1
    arcs: list[_Arc] = []
    for i, d in enumerate(graph.detections):
        arcs.append(_Arc(2 * i, 2 * i + 1, node_cost(d.conf)))   # through the node
        arcs.append(_Arc(source, 2 * i, graph.entry_exit_cost))
        arcs.append(_Arc(2 * i + 1, sink, graph.entry_exit_cost))
    for i, j, cost in graph.edges:
        arcs.append(_Arc(2 * i + 1, 2 * j, cost))

    num_nodes = 2 * n + 2
    path_costs: list[float] = []
    total = 0.0
    while True:
        # Bellman-Ford over the residual graph; it contains negative arcs
        # but no negative cycle while every augmentation is a shortest path.
        dist = [math.inf] * num_nodes
        pred: list[tuple[_Arc, bool] | None] = [None] * num_nodes
        dist[source] = 0.0
        for _ in range(num_nodes - 1):
            changed = False
            for arc in arcs:
                if arc.flow < arc.cap and dist[arc.tail] + arc.cost < dist[arc.head] - _EPS:
                    dist[arc.head] = dist[arc.tail] + arc.cost
                    pred[arc.head] = (arc, True)
                    changed = True
                if arc.flow > 0 and dist[arc.head] - arc.cost < dist[arc.tail] - _EPS:
                    dist[arc.tail] = dist[arc.head] - arc.cost
                    pred[arc.tail] = (arc, False)
                    changed = True
            if not changed:
                break
        if dist[sink] >= -_EPS or pred[sink] is None:
            break
        path_costs.append(dist[sink])
        total += dist[sink]
        node, hops = sink, 0
        while node != source:
            arc, forward = pred[node]
            if forward:
                arc.flow = 1
                node = arc.tail
            else:
                arc.flow = 0
                node = arc.head
            hops += 1
            if hops > num_nodes:
                raise RuntimeError("augmenting path reconstruction looped")

    # decompose the final flow into detection index paths
    next_of: dict[int, int | None] = {}
    starts: list[int] = []
    for arc in arcs:
        if arc.flow != 1:
            continue
        if arc.tail == source:
            starts.append(arc.head // 2)
        elif arc.head == sink or arc.tail % 2 == 0:
            continue
        else:
            next_of[arc.tail // 2] = arc.head // 2
    paths = []
    for start in sorted(starts, key=lambda i: (graph.detections[i].frame, i)):
        path = [start]
        while path[-1] in next_of:
            path.append(next_of[path[-1]])
        paths.append(path)
    return paths, total, path_costs


def track(detections: list[MotEntry], params: TrackerParams,
          homography=None) -> list[Trajectory]:
    """Run the full pipeline: confidence gate, per-frame NMS, flow solve.

    Emits one trajectory per accepted path with fresh ids 1, 2, ... ordered
    by first frame then detection order; entries carry conf 1 and, when a
    homography is given, the projected foot point as world coordinates.
    """
    confident = [d for d in detections if d.conf >= params.confidence_floor]
    by_frame: dict[int, list[MotEntry]] = {}
    for d in confident:
        by_frame.setdefault(d.frame, []).append(d)
    reduced = [d for frame in sorted(by_frame)
               for d in nms(by_frame[frame], params.nms_overlap)]

    graph = build_graph(reduced, params)
    paths, _, _ = solve_flow(graph)

    trajectories = []
    for track_id, path in enumerate(paths, start=1):
        traj = Trajectory(track_id)
        for i in path:
            d = reduced[i]
            x, y, z = -1.0, -1.0, -1.0
            if homography is not None:
                w = project_ground(homography, foot_point(
                    Box(d.bb_left, d.bb_top, d.bb_width, d.bb_height)))
                x, y, z = w.x, w.y, w.z
            traj.entries[d.frame] = MotEntry(
                frame=d.frame, id=track_id, bb_left=d.bb_left, bb_top=d.bb_top,
                bb_width=d.bb_width, bb_height=d.bb_height, conf=1.0,
                x=x, y=y, z=z)
        trajectories.append(traj)
    return trajectories


def trajectories_to_entries(trajectories: list[Trajectory]) -> list[MotEntry]:
    entries = [e for t in trajectories for e in t.entries.values()]
    entries.sort(key=lambda e: (e.frame, e.id))
    return entries
