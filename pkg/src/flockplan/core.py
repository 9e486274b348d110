"""Shared domain types, errors and seeded randomness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np


class FlockError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(FlockError, ValueError):
    """An operation was called with arguments outside its contract."""


class PlacementInfeasible(FlockError):
    """Random initial placement could not satisfy the safe-distance constraint."""


class UnsupportedFormation(FlockError, ValueError):
    """The (shape, team size) pair has no canonical layout."""


class ConfigError(FlockError, ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True, slots=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ContractViolation(f"non-finite position ({self.x}, {self.y})")

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> Vec2:
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: Vec2) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_list(self) -> list[float]:
        return [self.x, self.y]

    @classmethod
    def of(cls, p: Iterable[float]) -> Vec2:
        x, y = p
        return cls(float(x), float(y))


def as_array(points: Sequence[Vec2]) -> np.ndarray:
    """Stack points into an ``(N, 2)`` float array."""
    return np.array([[p.x, p.y] for p in points], dtype=float).reshape(-1, 2)


def from_array(arr: np.ndarray) -> list[Vec2]:
    return [Vec2(float(x), float(y)) for x, y in np.asarray(arr, dtype=float)]


class Shape(str, Enum):
    TRIANGLE = "triangle"
    SQUARE = "square"
    CIRCLE = "circle"
    CROSS = "cross"


@dataclass(frozen=True, slots=True)
class Arena:
    xmin: float = 0.0
    xmax: float = 100.0
    ymin: float = 0.0
    ymax: float = 100.0

    def __post_init__(self) -> None:
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ConfigError(f"empty arena {self}")

    def contains(self, p: Vec2) -> bool:
        return self.xmin <= p.x <= self.xmax and self.ymin <= p.y <= self.ymax

    def clamp(self, p: Vec2) -> Vec2:
        return Vec2(min(max(p.x, self.xmin), self.xmax), min(max(p.y, self.ymin), self.ymax))


@dataclass(frozen=True)
class TaskSpec:
    """Mission definition. Defaults are the desk-scale study parameters."""

    shape: Shape = Shape.TRIANGLE
    team_size: int = 3
    center: Vec2 = Vec2(50.0, 50.0)
    desired_distance: float = 10.0
    safe_distance: float = 3.0
    max_speed: float = 6.0
    comm_range: float = 15.0
    arena: Arena = field(default_factory=Arena)

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", Shape(self.shape))
        if not isinstance(self.center, Vec2):
            object.__setattr__(self, "center", Vec2.of(self.center))
        if not 0 < self.safe_distance < self.desired_distance:
            raise ConfigError("need 0 < safe_distance < desired_distance")
        if self.max_speed <= 0:
            raise ConfigError("max_speed must be positive")
        if self.comm_range <= 0:
            raise ConfigError("comm_range must be positive")
        if self.team_size < 2:
            raise ConfigError("team_size must be at least 2")
        if not self.arena.contains(self.center):
            raise ConfigError("center lies outside the arena")

    def with_(self, **changes) -> TaskSpec:
        return replace(self, **changes)


@dataclass(frozen=True)
class FormationPlan:
    """Ordered target positions, tagged with the robot that proposed them.

    ``origin_id`` is ``None`` for plans without provenance (e.g. loaded from
    a file); those are compared by coordinates only.
    """

    origin_id: int | None
    points: tuple[Vec2, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> Vec2:
        return self.points[i]

    def as_array(self) -> np.ndarray:
        return as_array(self.points)


PLAN_TOL = 1e-6


def plan_equal(a: FormationPlan, b: FormationPlan, tol: float = PLAN_TOL) -> bool:
    """Plan identity: same origin robot, or pointwise equal within ``tol``."""
    if len(a) != len(b):
        raise ContractViolation(f"plan lengths differ: {len(a)} vs {len(b)}")
    if a.origin_id is not None and a.origin_id == b.origin_id:
        return True
    return all(p.dist(q) <= tol for p, q in zip(a.points, b.points))


@dataclass(frozen=True)
class RobotState:
    id: int
    position: Vec2
    plan: FormationPlan
    goal: Vec2
    goal_index: int
    influence: float = 0.0
    neighbor_ids: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "neighbor_ids", frozenset(self.neighbor_ids))
        if not 0 <= self.goal_index < len(self.plan):
            raise ContractViolation(f"goal index {self.goal_index} outside plan")

    def observe(self, neighbor_ids: Iterable[int], team_size: int) -> RobotState:
        """Copy with a new neighborhood; influence is recomputed to match."""
        ids = frozenset(neighbor_ids)
        return replace(self, neighbor_ids=ids, influence=len(ids) / team_size)

    def with_(self, **changes) -> RobotState:
        return replace(self, **changes)


class SeededRng:
    """PCG64 stream keyed by a 64-bit seed.

    numpy's PCG64 bit stream and its ``uniform`` transform are stable across
    platforms, so trials replay identically anywhere.
    """

    algorithm = "PCG64"

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, algorithm={self.algorithm!r})"


MAX_PLACEMENT_ATTEMPTS = 10_000


def random_initial_positions(spec: TaskSpec, rng: SeededRng) -> list[Vec2]:
    """Uniform placement in the arena with pairwise spacing of at least ``safe_distance``.

    Rejection sampling, one robot at a time; gives up after
    ``MAX_PLACEMENT_ATTEMPTS`` draws in total.
    """
    a = spec.arena
    placed: list[Vec2] = []
    attempts = 0
    while len(placed) < spec.team_size:
        if attempts >= MAX_PLACEMENT_ATTEMPTS:
            raise PlacementInfeasible(
                f"placed {len(placed)}/{spec.team_size} robots after {attempts} draws"
            )
        attempts += 1
        x, y = rng.uniform((a.xmin, a.ymin), (a.xmax, a.ymax))
        p = Vec2(float(x), float(y))
        if all(p.dist(q) >= spec.safe_distance for q in placed):
            placed.append(p)
    return placed
