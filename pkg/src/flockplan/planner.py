"""Per-robot plan generation and waypoint proposal.

Three families share one interface: a deterministic geometric oracle, two
fault-injection variants (distorted plan geometry, full-speed overshoot),
and the language-model planner in :mod:`flockplan.llm`, which uses the
prompt renderers and reply parsers defined here.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .core import (
    ContractViolation,
    FlockError,
    FormationPlan,
    SeededRng,
    TaskSpec,
    Vec2,
    as_array,
    from_array,
)
from .geometry import ShapeTemplate, generate_formation, rotate_about
from .motion import guard_step


class PlannerKind(str, Enum):
    ORACLE = "oracle"
    LLM = "llm"
    FAULT_DISTORTED_PLAN = "fault_distorted_plan"
    FAULT_OVERSHOOT = "fault_overshoot"


class ParseFailure(FlockError):
    """A model reply did not contain the required answer."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class PlannerUnavailable(FlockError):
    """The model endpoint could not be reached."""


@dataclass(frozen=True)
class PlanResult:
    plan: FormationPlan
    my_index: int

    def __post_init__(self) -> None:
        if not 0 <= self.my_index < len(self.plan):
            raise ContractViolation(f"index {self.my_index} outside plan of {len(self.plan)}")

    @property
    def goal(self) -> Vec2:
        return self.plan[self.my_index]


@dataclass(frozen=True)
class StepContext:
    self_position: Vec2
    neighbor_positions: tuple[Vec2, ...]
    plan: FormationPlan
    goal: Vec2
    spec: TaskSpec

    def __post_init__(self) -> None:
        object.__setattr__(self, "neighbor_positions", tuple(self.neighbor_positions))
        r = self.spec.comm_range
        if any(self.self_position.dist(q) > r for q in self.neighbor_positions):
            raise ContractViolation("neighbor outside communication range")


DISTORTION = 0.4


def generate_plan(
    kind: PlannerKind | str,
    robot_id: int,
    spec: TaskSpec,
    rng: SeededRng | None = None,
    *,
    rotation: float = 0.0,
    distortion: float = DISTORTION,
) -> PlanResult:
    """Initial plan for one robot from a non-LLM planner.

    ``rotation`` turns the canonical layout about the task center, which is
    how the harness gives robots conflicting plans. ``distortion`` is the
    per-coordinate noise amplitude, as a fraction of the desired distance,
    used by the distorted-plan fault.
    """
    kind = PlannerKind(kind)
    if kind is PlannerKind.LLM:
        raise ContractViolation("LLM plans come from flockplan.llm.LLMPlanner")
    pts = generate_formation(ShapeTemplate.from_task(spec))
    if rotation:
        pts = rotate_about(pts, spec.center, rotation)
    if kind is PlannerKind.FAULT_DISTORTED_PLAN:
        amp = distortion * spec.desired_distance
        if amp > 0:
            if rng is None:
                raise ContractViolation("distorted plans need an rng")
            noise = rng.uniform(-amp, amp, size=(len(pts), 2))
            pts = from_array(as_array(pts) + noise)
    plan = FormationPlan(robot_id, tuple(pts))
    return PlanResult(plan, robot_id % spec.team_size)


def toward(start: Vec2, goal: Vec2, v_max: float, *, overshoot: bool = False) -> Vec2:
    d = goal - start
    dist = d.norm()
    if dist == 0:
        return start
    if dist <= v_max and not overshoot:
        return goal
    return start + d * (v_max / dist)


def propose_step(kind: PlannerKind | str, ctx: StepContext) -> Vec2:
    """Next waypoint for the oracle and fault planners."""
    kind = PlannerKind(kind)
    if kind is PlannerKind.LLM:
        raise ContractViolation("LLM steps come from flockplan.llm.LLMPlanner")
    overshoot = kind is PlannerKind.FAULT_OVERSHOOT
    target = toward(ctx.self_position, ctx.goal, ctx.spec.max_speed, overshoot=overshoot)
    waypoint, _ = guard_step(
        ctx.self_position, target, ctx.neighbor_positions, ctx.spec.safe_distance
    )
    return waypoint


# -- prompts -----------------------------------------------------------------


def format_number(x: float) -> str:
    """Shortest round-trip decimal; integral values drop the ``.0``."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_point(p: Vec2 | Sequence[float]) -> str:
    x, y = p
    return f"[{format_number(x)}, {format_number(y)}]"


def format_points(points: Sequence[Vec2]) -> str:
    return "[" + ", ".join(format_point(p) for p in points) + "]"


SYSTEM_TEMPLATE = (
    "You are a drone navigating in a 2D space. Your objective is to determine your next "
    "position to contribute to forming a shape with your neighbors while maintaining "
    "specific distance constraints. Your neighbors are also moving.\n"
    "Key Requirements:\n"
    "Formation: Form a/an {shape} centered at {center}.\n"
    "Desired Distance: Maintain a desired distance of {d_d} units between each drone.\n"
    "Safe Distance: Keep a minimum safe distance of {d_s} units from other drones.\n"
    "Maximum Speed: Your movement per step cannot exceed {v_m} units.\n"
    "Communication Range: Your communication range is {r_comm} units.\n"
    "Task: Decide your next position considering the above constraints and formation goal. "
    "Briefly explain your decision and provide the new position in the format "
    "'Position: [x, y].'"
)

PLAN_REQUEST_TEMPLATE = (
    "Please make a plan of the locations for the team of {n} robots forming the shape. "
    "Remember the given requirements about the shape and desired distance. Please give the "
    "final answer in the form of 'Plan: [[x_1, y_1], [x_2, y_2], ..., [x_n, y_n]]', and the "
    "index of the location you are taking as 'my plan: a', where a is the index of the "
    "coordinate."
)

STEP_REQUEST_TEMPLATE = (
    "Current Position: {position}. Moving Neighbor Positions: {neighbors}. Plan: {plan}. "
    "You will need to go to {goal} as your final destination.\n"
    "Task: Decide your next position considering the above constraints and the location of "
    "your neighbors. Briefly explain your decision and provide the new position in the "
    "format 'Position: [x, y].'"
)

PLAN_FORMAT_REMINDER = (
    "Your previous answer could not be read. Reply again and end with exactly two lines: "
    "'Plan: [[x_1, y_1], ..., [x_n, y_n]]' with {n} coordinates, and 'my plan: a'."
)

POSITION_FORMAT_REMINDER = (
    "Your previous answer could not be read. Reply again and end with exactly one line "
    "of the form 'Position: [x, y]'."
)


def render_system_prompt(spec: TaskSpec) -> str:
    return SYSTEM_TEMPLATE.format(
        shape=spec.shape.value,
        center=format_point(spec.center),
        d_d=format_number(spec.desired_distance),
        d_s=format_number(spec.safe_distance),
        v_m=format_number(spec.max_speed),
        r_comm=format_number(spec.comm_range),
    )


def render_plan_request(spec: TaskSpec) -> str:
    return PLAN_REQUEST_TEMPLATE.format(n=spec.team_size)


def render_step_request(ctx: StepContext) -> str:
    return STEP_REQUEST_TEMPLATE.format(
        position=format_point(ctx.self_position),
        neighbors=format_points(ctx.neighbor_positions),
        plan=format_points(ctx.plan.points),
        goal=format_point(ctx.goal),
    )


def render_plan_reply(result: PlanResult) -> str:
    """A minimal well-formed reply carrying ``result``; used by scripted endpoints."""
    return f"Plan: {format_points(result.plan.points)}\nmy plan: {result.my_index}"


def render_position_reply(p: Vec2) -> str:
    return f"Position: {format_point(p)}"


# -- reply parsing -------------------------------------------------------------

_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_PAIR = rf"\[\s*({_NUM})\s*,\s*({_NUM})\s*\]"
_PAIR_RE = re.compile(_PAIR)
_PLAN_RE = re.compile(rf"plan\s*:\s*(\[\s*{_PAIR}(?:\s*,\s*{_PAIR})*\s*\])", re.IGNORECASE)
_INDEX_RE = re.compile(r"my[\s_]plan\s*:\s*(-?\d+)", re.IGNORECASE)
_POSITION_RE = re.compile(rf"position\s*:\s*{_PAIR}", re.IGNORECASE)

_LATEX_CMD = re.compile(r"\\[a-zA-Z]+\s*\{")
_LATEX_SPACE = re.compile(r"\\[ ,;:!]|\\q?quad\b")


def normalize_reply(text: str) -> str:
    """Strip the markdown and LaTeX decoration models wrap answers in."""
    text = text.replace("\\_", "_")
    text = _LATEX_SPACE.sub(" ", text)
    text = _LATEX_CMD.sub("", text)
    return re.sub(r"[{}*`$]", "", text)


def parse_plan_reply(reply: str, n: int, origin_id: int | None = None) -> PlanResult:
    """Extract the last ``Plan: [[x, y], ...]`` and the last ``my plan: a``."""
    text = normalize_reply(reply)
    plans = list(_PLAN_RE.finditer(text))
    if not plans:
        raise ParseFailure("plan-missing")
    raw = [(float(x), float(y)) for x, y in _PAIR_RE.findall(plans[-1].group(1))]
    if not all(math.isfinite(v) for p in raw for v in p):
        raise ParseFailure("plan-missing", "non-finite coordinates")
    pts = tuple(Vec2(x, y) for x, y in raw)
    if len(pts) != n:
        raise ParseFailure("bad-length", f"expected {n} points, got {len(pts)}")
    idx = _INDEX_RE.findall(text)
    if not idx:
        raise ParseFailure("bad-index", "no 'my plan' index")
    a = int(idx[-1])
    if not 0 <= a < n:
        raise ParseFailure("bad-index", f"index {a} outside [0, {n})")
    return PlanResult(FormationPlan(origin_id, pts), a)


def parse_position_reply(reply: str) -> Vec2:
    """Extract the last ``Position: [x, y]``."""
    matches = _POSITION_RE.findall(normalize_reply(reply))
    if not matches:
        raise ParseFailure("position-missing")
    x, y = matches[-1]
    p = (float(x), float(y))
    if not all(math.isfinite(v) for v in p):
        raise ParseFailure("position-missing", "non-finite coordinates")
    return Vec2(*p)
