"""Canonical target formations.

Layouts, with ``d`` the desired spacing between adjacent robots:

* triangle/3: equilateral triangle of side ``d``, first vertex at angle 0.
* triangle/6: side ``2d`` triangle, vertices interleaved with edge midpoints.
* square/4: axis-aligned square of side ``d``.
* square/8: side ``2d`` square, corners interleaved with edge midpoints.
* circle/N: ``N`` equally spaced points with chord ``d``, first at angle 0.
* cross/5: the center plus four arms of length ``d`` along the axes.

Points run counterclockwise from angle 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Shape, TaskSpec, UnsupportedFormation, Vec2, from_array


@dataclass(frozen=True)
class ShapeTemplate:
    shape: Shape
    team_size: int
    center: Vec2 = Vec2(0.0, 0.0)
    desired_distance: float = 10.0

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "shape", Shape(self.shape))
        except ValueError as exc:
            raise UnsupportedFormation(str(exc)) from None
        if not isinstance(self.center, Vec2):
            object.__setattr__(self, "center", Vec2.of(self.center))
        if self.desired_distance < 0:
            raise UnsupportedFormation("desired_distance must be non-negative")

    @classmethod
    def from_task(cls, spec: TaskSpec) -> ShapeTemplate:
        return cls(spec.shape, spec.team_size, spec.center, spec.desired_distance)


def is_supported(shape: Shape | str, n: int) -> bool:
    shape = Shape(shape)
    if shape is Shape.TRIANGLE:
        return n in (3, 6)
    if shape is Shape.SQUARE:
        return n in (4, 8)
    if shape is Shape.CIRCLE:
        return n >= 3
    return n == 5


def _polygon(n: int, radius: float, phase: float = 0.0) -> np.ndarray:
    ang = phase + 2 * np.pi * np.arange(n) / n
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


def _interleave_midpoints(corners: np.ndarray) -> np.ndarray:
    mids = (corners + np.roll(corners, -1, axis=0)) / 2
    out = np.empty((2 * len(corners), 2))
    out[0::2] = corners
    out[1::2] = mids
    return out


def _offsets(shape: Shape, n: int, d: float) -> np.ndarray:
    if shape is Shape.TRIANGLE and n == 3:
        return _polygon(3, d / math.sqrt(3))
    if shape is Shape.TRIANGLE and n == 6:
        return _interleave_midpoints(_polygon(3, 2 * d / math.sqrt(3)))
    if shape is Shape.SQUARE and n == 4:
        h = d / 2
        return np.array([[h, h], [-h, h], [-h, -h], [h, -h]])
    if shape is Shape.SQUARE and n == 8:
        # start on the +x edge midpoint so the walk begins at angle 0
        corners = np.array([[d, d], [-d, d], [-d, -d], [d, -d]])
        return np.roll(_interleave_midpoints(corners), 1, axis=0)
    if shape is Shape.CIRCLE and n >= 3:
        return _polygon(n, d / (2 * math.sin(math.pi / n)))
    if shape is Shape.CROSS and n == 5:
        return np.array([[0, 0], [d, 0], [0, d], [-d, 0], [0, -d]], dtype=float)
    raise UnsupportedFormation(f"no canonical {shape.value} layout for {n} robots")


def formation_offsets(t: ShapeTemplate) -> np.ndarray:
    """``(N, 2)`` offsets from the center, centroid exactly removed."""
    off = _offsets(t.shape, t.team_size, float(t.desired_distance))
    # trig round-off leaves ~1e-15 of centroid drift
    return off - off.mean(axis=0)


def generate_formation(t: ShapeTemplate) -> list[Vec2]:
    off = formation_offsets(t)
    return from_array(off + np.array([t.center.x, t.center.y]))


def formation_radius(t: ShapeTemplate) -> float:
    """Largest center-to-point distance of the generated formation."""
    return float(np.max(np.hypot(*formation_offsets(t).T)))


def rotate_about(points: list[Vec2], center: Vec2, angle: float) -> list[Vec2]:
    c, s = math.cos(angle), math.sin(angle)
    out = []
    for p in points:
        dx, dy = p.x - center.x, p.y - center.y
        out.append(Vec2(center.x + c * dx - s * dy, center.y + s * dx + c * dy))
    return out
