"""Calibration and annotation quality checks via pedestrian speed statistics.

Speeds are finite differences of world positions between consecutive
annotated frames, attributed to the later frame. Realistic walking speeds
run from 0 to about 3 m/s with a comfortable mean near 1.4 m/s; samples
beyond the outlier threshold are almost always calibration or annotation
artifacts, typically far from the camera where small box shifts translate
into large ground-plane jumps. Flagged samples carry the image foot point
so they can be mapped back onto the frame.

World positions come from the file's x/y/z columns when present; otherwise
the box foot point is projected through a supplied ground-plane homography.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Box, Homography, foot_point, project_ground
from .io import Trajectory

OUTLIER_SPEED = 3.0       # m/s
DEFAULT_BIN_WIDTH = 0.25  # m/s


@dataclass
class SpeedSample:
    trajectory_id: int
    frame: int
    speed: float
    foot: tuple[float, float]


@dataclass
class SpeedProfile:
    samples: list[SpeedSample] = field(default_factory=list)
    skipped: list[tuple[int, int]] = field(default_factory=list)  # (id, frame) without a position

    def mean_speeds(self) -> dict[int, float]:
        sums: dict[int, list[float]] = {}
        for s in self.samples:
            sums.setdefault(s.trajectory_id, []).append(s.speed)
        return {i: sum(v) / len(v) for i, v in sorted(sums.items())}

    def histogram(self, bin_width: float = DEFAULT_BIN_WIDTH) -> list[tuple[float, float, int]]:
        """(lo, hi, count) bins covering every sample; total mass = sample count."""
        if not self.samples:
            return []
        top = max(s.speed for s in self.samples)
        nbins = max(1, int(math.floor(top / bin_width)) + 1)
        counts = [0] * nbins
        for s in self.samples:
            counts[min(int(s.speed / bin_width), nbins - 1)] += 1
        return [(i * bin_width, (i + 1) * bin_width, c) for i, c in enumerate(counts)]


def _position(entry, homography: Homography | None):
    if entry.has_world_point:
        return (entry.x, entry.y, entry.z)
    if homography is not None:
        w = project_ground(homography, foot_point(
            Box(entry.bb_left, entry.bb_top, entry.bb_width, entry.bb_height)))
        return (w.x, w.y, w.z)
    return None


def speeds(traj: Trajectory, fps: float,
           homography: Homography | None = None) -> SpeedProfile:
    """Per-frame speed samples for one trajectory.

    Between annotations at frames t1 < t2 the speed is
    ||p(t2) - p(t1)|| * fps / (t2 - t1), attributed to t2. Pairs with a
    missing position on either side are skipped and recorded as such.
    Single-frame trajectories produce no samples.
    """
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    profile = SpeedProfile()
    frames = traj.frames()
    positions = {}
    for f in frames:
        p = _position(traj.entries[f], homography)
        if p is None:
            profile.skipped.append((traj.id, f))
        positions[f] = p
    for t1, t2 in zip(frames, frames[1:]):
        p1, p2 = positions[t1], positions[t2]
        if p1 is None or p2 is None:
            continue
        speed = math.dist(p1, p2) * fps / (t2 - t1)
        profile.samples.append(SpeedSample(
            trajectory_id=traj.id, frame=t2, speed=speed,
            foot=foot_point(Box(traj.entries[t2].bb_left, traj.entries[t2].bb_top,
                                traj.entries[t2].bb_width, traj.entries[t2].bb_height))))
    return profile


def profile_sequence(trajectories: list[Trajectory], fps: float,
                     homography: Homography | None = None) -> SpeedProfile:
    merged = SpeedProfile()
    for traj in trajectories:
        p = speeds(traj, fps, homography)
        merged.samples.extend(p.samples)
        merged.skipped.extend(p.skipped)
    return merged


def flag_outliers(profile: SpeedProfile,
                  threshold: float = OUTLIER_SPEED) -> list[SpeedSample]:
    """Samples faster than the threshold, with their image positions."""
    return [s for s in profile.samples if s.speed > threshold]


# CSV emitters: raw inputs for plotting, nothing is aggregated away.

def histogram_to_csv(profile: SpeedProfile,
                     bin_width: float = DEFAULT_BIN_WIDTH) -> str:
    rows = ["bin_lo,bin_hi,count"]
    for lo, hi, count in profile.histogram(bin_width):
        rows.append(f"{lo!r},{hi!r},{count}")
    return "\n".join(rows) + "\n"


def mean_speeds_to_csv(profile: SpeedProfile) -> str:
    rows = ["trajectory_id,mean_speed,samples"]
    counts: dict[int, int] = {}
    for s in profile.samples:
        counts[s.trajectory_id] = counts.get(s.trajectory_id, 0) + 1
    for traj_id, mean in profile.mean_speeds().items():
        rows.append(f"{traj_id},{mean!r},{counts[traj_id]}")
    return "\n".join(rows) + "\n"


def outliers_to_csv(outliers: list[SpeedSample]) -> str:
    rows = ["trajectory_id,frame,speed,foot_x,foot_y"]
    for s in outliers:
        rows.append(f"{s.trajectory_id},{s.frame},{s.speed!r},{s.foot[0]!r},{s.foot[1]!r}")
    return "\n".join(rows) + "\n"
