"""Constraint enforcement for proposed waypoints.

The engine never trusts a planner: every step is speed-clipped, kept inside
the arena and shortened on a discrete ladder until it respects the safe
distance against the neighbors' round-start positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import RobotState, TaskSpec, Vec2

# step fractions tried, longest first, when the full step is unsafe
SAFETY_LADDER = (0.75, 0.5, 0.25, 0.0)
SPEED_EPS = 1e-9


@dataclass(frozen=True)
class MotionReport:
    robot_id: int
    requested: Vec2 | None
    applied: Vec2
    clamped_speed: bool = False
    safety_hold: bool = False
    rejected: bool = False

    def to_dict(self) -> dict:
        return {
            "robot_id": self.robot_id,
            "requested": None if self.requested is None else self.requested.as_list(),
            "applied": self.applied.as_list(),
            "clamped_speed": self.clamped_speed,
            "safety_hold": self.safety_hold,
            "rejected": self.rejected,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MotionReport:
        req = d.get("requested")
        return cls(
            robot_id=int(d["robot_id"]),
            requested=None if req is None else Vec2.of(req),
            applied=Vec2.of(d["applied"]),
            clamped_speed=bool(d["clamped_speed"]),
            safety_hold=bool(d["safety_hold"]),
            rejected=bool(d.get("rejected", False)),
        )


def _acceptable(start: Vec2, end: Vec2, neighbors: Sequence[Vec2], d_s: float) -> bool:
    for q in neighbors:
        d_end = end.dist(q)
        # an existing violation may persist but must not get worse
        if d_end < d_s and d_end < start.dist(q):
            return False
    return True


def clip_speed(start: Vec2, target: Vec2, v_max: float) -> tuple[Vec2, bool]:
    step = target - start
    length = step.norm()
    if length <= v_max:
        return target, False
    return start + step * (v_max / length), True


def guard_step(
    start: Vec2, target: Vec2, neighbors: Sequence[Vec2], d_s: float
) -> tuple[Vec2, float]:
    """Shorten ``start -> target`` until it keeps ``d_s`` from every neighbor.

    Returns the accepted point and the step fraction used (1.0 when the full
    step is already safe, 0.0 when the robot has to hold).
    """
    if _acceptable(start, target, neighbors, d_s):
        return target, 1.0
    step = target - start
    for lam in SAFETY_LADDER:
        cand = start + step * lam
        if lam == 0.0 or _acceptable(start, cand, neighbors, d_s):
            return cand, lam
    raise AssertionError("unreachable")


def apply_step(
    state: RobotState,
    waypoint: Vec2 | tuple[float, float],
    neighbor_positions: Sequence[Vec2],
    spec: TaskSpec,
) -> tuple[Vec2, MotionReport]:
    start = state.position
    try:
        requested = waypoint if isinstance(waypoint, Vec2) else Vec2.of(waypoint)
    except (ValueError, TypeError):
        return start, MotionReport(state.id, None, start, rejected=True)
    target, clipped = clip_speed(start, requested, spec.max_speed)
    # the arena is convex and contains start, so clamping never lengthens the step
    target = spec.arena.clamp(target)
    applied, lam = guard_step(start, target, neighbor_positions, spec.safe_distance)
    moved = target.dist(start) > 0
    report = MotionReport(
        state.id, requested, applied, clamped_speed=clipped, safety_hold=moved and lam == 0.0
    )
    return applied, report
