import random

import pytest

from flockplan.commgraph import CommGraph, diameter, hop_distances
from flockplan.consensus import Adoption, assign_goal, broadcast, consensus_round
from flockplan.core import ContractViolation, FormationPlan, RobotState, Vec2
from oracles import adoption_step, connected_graphs


def _plan(origin, n, shift=0.0):
    return FormationPlan(origin, [Vec2(10 * k + shift + origin, 50.0) for k in range(n)])


def _team(n, infl=None, positions=None):
    states = []
    for i in range(n):
        p = _plan(i, n)
        pos = positions[i] if positions else Vec2(10.0 * i, 10.0)
        states.append(RobotState(i, pos, p, p[i], i, infl[i] if infl else 0.0))
    return states


def test_assign_goal_ascending_id_greedy():
    plan = FormationPlan(0, [Vec2(0, 0), Vec2(10, 0), Vec2(20, 0)])
    known = {0: Vec2(9, 0), 1: Vec2(11, 0), 2: Vec2(0, 0)}
    assert assign_goal(0, plan, known) == (Vec2(10, 0), 1)
    assert assign_goal(1, plan, known) == (Vec2(20, 0), 2)
    assert assign_goal(2, plan, known) == (Vec2(0, 0), 0)


def test_assign_goal_ties_to_lowest_index():
    plan = FormationPlan(0, [Vec2(-1, 0), Vec2(1, 0)])
    assert assign_goal(0, plan, {0: Vec2(0, 0)})[1] == 0


def test_assign_goal_contract():
    plan = FormationPlan(0, [Vec2(0, 0)])
    with pytest.raises(ContractViolation):
        assign_goal(0, plan, {1: Vec2(0, 0)})
    with pytest.raises(ContractViolation):
        assign_goal(0, plan, {0: Vec2(0, 0), 1: Vec2(1, 1)})


def test_broadcast_carries_claim():
    s = _team(3)[1]
    m = broadcast(s)
    assert (m.sender_id, m.claimed_goal_index, m.plan) == (1, 1, s.plan)


def test_path_graph_adopts_center_plan():
    g = CommGraph.from_edges(3, [(0, 1), (1, 2)], round=4)
    states = _team(3, [1 / 3, 2 / 3, 1 / 3])
    out, log = consensus_round(states, g)
    assert [s.plan.origin_id for s in out] == [1, 1, 1]
    assert log == [Adoption(4, 0, 1), Adoption(4, 2, 1)]


def test_equal_influence_no_adoption_without_tie_break():
    g = CommGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    states = _team(3, [2 / 3] * 3)
    out, log = consensus_round(states, g)
    assert log == [] and [s.plan.origin_id for s in out] == [0, 1, 2]
    out, log = consensus_round(states, g, tie_break_by_id=True)
    assert [s.plan.origin_id for s in out] == [0, 0, 0]


def test_snapshot_semantics():
    # 2 must copy 1's round-start plan, not the plan 1 takes from 0 this round
    g = CommGraph.from_edges(3, [(0, 1), (1, 2)])
    out, _ = consensus_round(_team(3), g, influences=[0.9, 0.5, 0.1])
    assert [s.plan.origin_id for s in out] == [0, 0, 1]


def test_goal_reassigned_within_cohort():
    g = CommGraph.from_edges(2, [(0, 1)])
    pos = [Vec2(10, 50), Vec2(0, 50)]
    states = _team(2, [0.5, 0.5], pos)
    shared = _plan(0, 2)
    states = [s.with_(plan=shared) for s in states]
    out, _ = consensus_round(states, g)
    assert out[0].goal_index == 1 and out[1].goal_index == 0


def test_contract_checks():
    g = CommGraph.from_edges(2, [(0, 1)])
    with pytest.raises(ContractViolation):
        consensus_round(_team(3), g)
    with pytest.raises(ContractViolation):
        consensus_round(list(reversed(_team(2))), g)


def test_matches_brute_force_on_all_small_connected_graphs():
    rng = random.Random(11)
    cases = 0
    for n in range(2, 6):
        for edges in connected_graphs(n):
            g = CommGraph.from_edges(n, edges)
            infl = rng.sample(range(1, 100), n)
            states = _team(n, [x / 100 for x in infl])
            labels = list(range(n))
            for _ in range(n):
                states, _ = consensus_round(states, g)
                labels = adoption_step(labels, [g.neighbors(i) for i in range(n)], infl)
                assert [s.plan.origin_id for s in states] == labels
            cases += 1
    assert cases >= 200


def _random_connected(rng, n, p=0.15):
    edges = [(i, rng.randrange(i)) for i in range(1, n)]
    edges += [(i, j) for i in range(n) for j in range(i) if rng.random() < p]
    return CommGraph.from_edges(n, edges)


def test_unique_max_spreads_within_diameter():
    # influence falls with hop distance from the leader, so it is the only local maximum
    rng = random.Random(5)
    for _ in range(50):
        n = 10
        g = _random_connected(rng, n)
        leader = rng.randrange(n)
        hops = hop_distances(g, leader)
        infl = [1.0 - h / n - rng.random() * 0.01 * (h > 0) for h in hops]
        states = _team(n, infl)
        for _ in range(diameter(g)):
            states, _ = consensus_round(states, g, influences=infl)
        assert all(s.plan.origin_id == leader for s in states)


def test_local_maximum_keeps_its_plan():
    # 0 - 1 - 2 - 3 with 3 the global maximum; 0 outranks its only neighbor
    g = CommGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    infl = [0.6, 0.2, 0.4, 0.9]
    states = _team(4, infl)
    for _ in range(10):
        states, _ = consensus_round(states, g, influences=infl)
    assert [s.plan.origin_id for s in states] == [0, 0, 3, 3]
