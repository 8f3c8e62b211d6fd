"""Multi-object tracking benchmark toolkit.

Parsing and writing of the 10-field tracking format, gated tracker-to-target
matching with temporal carryover, CLEAR and track-quality metrics,
average-rank leaderboards, a min-cost-flow reference tracker with a
randomized parameter search, and pedestrian-speed calibration audits.
"""

from .geometry import Box, Homography, WorldPoint, dist3d, foot_point, iou, project_ground
from .io import (EntryRole, MotEntry, ResultBundle, SequenceMeta, Trajectory,
                 build_trajectories, load_result_bundle, parse_mot_file,
                 write_mot_file)
from .matching import DistanceMode, EventLog, coverage, match_sequence
from .metrics import (MetricsReport, evaluate_benchmark, evaluate_sequence,
                      far, mota, motp, relative_ratios, track_quality)
from .ranking import RankTable, average_rank
from .tracker import TrackerParams, nms, track
from .tuner import SearchConfig, sample_params, tune

__version__ = "0.1.0"

__all__ = [
    "Box", "DistanceMode", "EntryRole", "EventLog", "Homography",
    "MetricsReport", "MotEntry", "RankTable", "ResultBundle", "SearchConfig",
    "SequenceMeta", "Trajectory", "TrackerParams", "WorldPoint",
    "average_rank", "build_trajectories", "coverage", "dist3d",
    "evaluate_benchmark", "evaluate_sequence", "far", "foot_point", "iou",
    "load_result_bundle", "match_sequence", "mota", "motp", "nms",
    "parse_mot_file", "project_ground", "relative_ratios", "sample_params",
    "track", "track_quality", "tune", "write_mot_file",
]
