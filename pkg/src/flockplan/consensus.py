"""Influence-based plan consensus and greedy goal assignment.

One call to :func:`consensus_round` is one synchronous round: every robot
reads its neighbors' broadcasts from the same round-start snapshot, adopts
the plan of its most influential neighbor when that neighbor is strictly
more influential and holds a different plan, and then re-derives its goal
from the robots it can see that share its plan.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from .commgraph import CommGraph
from .core import PLAN_TOL, ContractViolation, FormationPlan, RobotState, Vec2, plan_equal


@dataclass(frozen=True)
class ConsensusMessage:
    sender_id: int
    plan: FormationPlan
    influence: float
    claimed_goal_index: int = -1


class Adoption(NamedTuple):
    round: int
    robot_id: int
    adopted_from: int


def broadcast(state: RobotState) -> ConsensusMessage:
    return ConsensusMessage(state.id, state.plan, state.influence, state.goal_index)


def assign_goal(
    robot_id: int, plan: FormationPlan, known_positions: Mapping[int, Vec2]
) -> tuple[Vec2, int]:
    """Greedy nearest-available assignment over the locally known cohort.

    Robots claim in ascending id order, each taking its nearest unclaimed plan
    point (ties to the lowest plan index). Returns ``robot_id``'s claim.
    """
    if robot_id not in known_positions:
        raise ContractViolation(f"robot {robot_id} missing from known positions")
    if len(known_positions) > len(plan):
        raise ContractViolation("more robots than plan points")
    free = list(range(len(plan)))
    for rid in sorted(known_positions):
        pos = known_positions[rid]
        best = min(free, key=lambda j: (pos.dist(plan[j]), j))
        if rid == robot_id:
            return plan[best], best
        free.remove(best)
    raise AssertionError("unreachable")


def _most_influential(nbrs, infl: Sequence[float]) -> int | None:
    best = None
    for j in sorted(nbrs):
        if best is None or infl[j] > infl[best]:
            best = j
    return best


def consensus_round(
    states: Sequence[RobotState],
    graph: CommGraph,
    *,
    tie_break_by_id: bool = False,
    influences: Sequence[float] | None = None,
    tol: float = PLAN_TOL,
) -> tuple[list[RobotState], list[Adoption]]:
    """Run one simultaneous round over ``states``.

    ``influences`` overrides the broadcast scores, for studies with frozen
    influence values. With ``tie_break_by_id`` a robot also adopts from an
    equally influential neighbor with a lower id.
    """
    if len(states) != graph.n:
        raise ContractViolation("states and graph disagree on team size")
    if any(s.id != i for i, s in enumerate(states)):
        raise ContractViolation("states must be ordered by robot id")
    inbox = [broadcast(s) for s in states]
    infl = list(influences) if influences is not None else [m.influence for m in inbox]

    plans: list[FormationPlan] = []
    log: list[Adoption] = []
    for s in states:
        plan = s.plan
        k = _most_influential(graph.neighbors(s.id), infl)
        if k is not None:
            higher = infl[k] > infl[s.id]
            tie_win = tie_break_by_id and infl[k] == infl[s.id] and k < s.id
            if (higher or tie_win) and not plan_equal(inbox[k].plan, plan, tol):
                plan = inbox[k].plan
                log.append(Adoption(graph.round, s.id, k))
        plans.append(plan)

    out = []
    for s, plan in zip(states, plans):
        # cohort = self plus neighbors whose broadcast plan matches the plan now held
        known = {s.id: s.position}
        for j in graph.neighbors(s.id):
            if plan_equal(inbox[j].plan, plan, tol):
                known[j] = states[j].position
        goal, idx = assign_goal(s.id, plan, known)
        out.append(s.with_(plan=plan, goal=goal, goal_index=idx))
    return out, log
