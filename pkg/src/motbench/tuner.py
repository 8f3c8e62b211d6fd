"""Randomized parameter search on a training set.

Each run samples every parameter independently and uniformly from
[default/2, 2*default], tracks the training sequences and scores the
result; the parameter set with the highest training accuracy wins. Run 1
always uses the unperturbed defaults, so the search can never return
something worse than the defaults on the training data. A crashing run is
recorded with score -inf instead of aborting the search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .io import MotEntry, ResultBundle
from .matching import DistanceMode
from .metrics import evaluate_benchmark
from .tracker import TrackerParams, track, trajectories_to_entries

# ratio-valued parameters must stay strictly inside (0, 1) after sampling
_RATIO_CAP = 0.99


@dataclass
class SearchConfig:
    defaults: TrackerParams = field(default_factory=TrackerParams)
    runs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")


def sample_params(defaults: TrackerParams, rng: np.random.Generator) -> TrackerParams:
    """Draw one parameter set uniformly around the defaults.

    Integer parameters are rounded to the nearest value, at least 1; ratio
    parameters are capped just below 1 to stay valid (the cap lies inside
    the sampling interval whenever it can trigger).
    """
    kwargs = {}
    for f in fields(defaults):
        theta = getattr(defaults, f.name)
        if theta <= 0:
            raise ValueError(f"{f.name} default must be positive, got {theta}")
        value = rng.uniform(theta / 2.0, 2.0 * theta)
        if f.name == "max_gap":
            value = max(1, round(value))
        elif f.name in ("gate_iou", "nms_overlap"):
            value = min(value, _RATIO_CAP)
        kwargs[f.name] = value
    return TrackerParams(**kwargs)


@dataclass
class RunRecord:
    index: int
    params: TrackerParams
    mota: float
    error: str = ""


def search_log_to_csv(runs: list[RunRecord]) -> str:
    names = [f.name for f in fields(TrackerParams)]
    rows = ["run," + ",".join(names) + ",mota,error"]
    for r in runs:
        values = ",".join(repr(getattr(r.params, n)) if n != "max_gap"
                          else str(r.params.max_gap) for n in names)
        rows.append(f"{r.index},{values},{r.mota!r},{r.error}")
    return "\n".join(rows) + "\n"


def tune(detections: dict[str, list[MotEntry]],
         gt: dict[str, list[MotEntry]],
         config: SearchConfig,
         mode: DistanceMode | None = None,
         ) -> tuple[TrackerParams, float, list[RunRecord]]:
    """Run the search and return (best params, best score, full log).

    Reproducible for a fixed (seed, defaults, runs): parameters are sampled
    in field order from one seeded generator, runs scored in index order
    and ties resolved toward the earliest run.
    """
    if set(detections) != set(gt):
        raise ValueError("training detections and ground truth name different sequences")
    mode = mode or DistanceMode.iou2d()
    rng = np.random.default_rng(config.seed)

    runs: list[RunRecord] = []
    for index in range(1, config.runs + 1):
        params = config.defaults if index == 1 else sample_params(config.defaults, rng)
        try:
            results = {}
            for seq in sorted(detections):
                trajectories = track(detections[seq], params)
                results[seq] = trajectories_to_entries(trajectories)
            report = evaluate_benchmark(gt, ResultBundle(results), mode,
                                        name=f"run{index}")
            runs.append(RunRecord(index=index, params=params, mota=report.mota))
        except Exception as exc:  # a bad parameter draw must not kill the search
            runs.append(RunRecord(index=index, params=params,
                                  mota=-math.inf, error=str(exc)))

    best = max(runs, key=lambda r: (r.mota, -r.index))
    return best.params, best.mota, runs
