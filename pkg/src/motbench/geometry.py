"""Box overlap, foot points, ground-plane homography projection and 3D distance.

Pixel coordinates are 1-based: the top-left image corner is (1, 1). Boxes are
closed real-valued rectangles given as (left, top, width, height); fractional
coordinates are allowed and no rasterization takes place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ProjectionError(ValueError):
    """Raised when a point maps to the line at infinity under a homography."""


@dataclass(frozen=True)
class Box:
    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"box dimensions must be positive, got {self.width}x{self.height}")

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class WorldPoint:
    x: float
    y: float
    z: float = 0.0


def iou(a: Box, b: Box) -> float:
    """Intersection over union (Jaccard index) of two boxes, in [0, 1]."""
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def clip_box(b: Box, width: float, height: float) -> Box | None:
    """Clip a box to the image extent [1, width] x [1, height].

    Returns None when the box lies entirely outside the image. Off by
    default everywhere; annotations cropped at the border are kept as-is
    unless a caller explicitly opts in.
    """
    left = max(b.left, 1.0)
    top = max(b.top, 1.0)
    right = min(b.right, float(width))
    bottom = min(b.bottom, float(height))
    if right <= left or bottom <= top:
        return None
    return Box(left, top, right - left, bottom - top)


def foot_point(b: Box) -> tuple[float, float]:
    """Bottom-center of a bounding box: the pedestrian's ground contact point."""
    return (b.left + b.width / 2.0, b.top + b.height)


class Homography:
    """Invertible 3x3 map between the image plane and the ground plane."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float).reshape(3, 3)
        if abs(np.linalg.det(m)) < 1e-12:
            raise ValueError("homography matrix is singular")
        self.matrix = m

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def load(cls, path: str | Path) -> "Homography":
        """Read 9 whitespace-separated reals, row-major."""
        values = Path(path).read_text().split()
        if len(values) != 9:
            raise ValueError(f"{path}: expected 9 values for a homography, got {len(values)}")
        return cls([float(v) for v in values])

    def save(self, path: str | Path) -> None:
        rows = [" ".join(repr(float(v)) for v in row) for row in self.matrix]
        Path(path).write_text("\n".join(rows) + "\n")

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def __repr__(self) -> str:
        return f"Homography({self.matrix.tolist()!r})"


def project_ground(h: Homography, point: tuple[float, float]) -> WorldPoint:
    """Map an image point to the ground plane; resulting z is always 0."""
    u, v = point
    px, py, pw = h.matrix @ (u, v, 1.0)
    if abs(pw) < 1e-12:
        raise ProjectionError(f"image point {point!r} maps to infinity")
    return WorldPoint(px / pw, py / pw, 0.0)


def dist3d(a: WorldPoint, b: WorldPoint) -> float:
    """Euclidean distance in meters."""
    return math.dist((a.x, a.y, a.z), (b.x, b.y, b.z))
