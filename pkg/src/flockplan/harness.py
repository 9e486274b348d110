"""Round loop, seeded trials and batch aggregation.

A trial is round 0 (random placement, one plan per robot, initial goal
claims) followed by rounds that each run graph construction, an optional
consensus round, waypoint proposal and constrained motion. Round indices
count these combined consensus+motion rounds.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .commgraph import build_graph, influences
from .consensus import Adoption, assign_goal, consensus_round
from .core import (
    ConfigError,
    FlockError,
    RobotState,
    SeededRng,
    TaskSpec,
    Vec2,
    as_array,
    plan_equal,
    random_initial_positions,
)
from .geometry import ShapeTemplate, generate_formation, is_supported
from .llm import ChatClient, LLMPlanner, LLMSettings
from .metrics import converged, plan_agreement, point_correspondence, procrustes_align
from .motion import MotionReport, apply_step
from .planner import (
    DISTORTION,
    ParseFailure,
    PlannerKind,
    PlannerUnavailable,
    PlanResult,
    StepContext,
    generate_plan,
    propose_step,
)

log = logging.getLogger(__name__)

CORRESPONDENCE_MODES = ("auto", "goal", "greedy")
Z95 = 1.96


@dataclass(frozen=True)
class RunConfig:
    task: TaskSpec = field(default_factory=TaskSpec)
    planner: PlannerKind = PlannerKind.ORACLE
    planner_overrides: Mapping[int, PlannerKind] = field(default_factory=dict)
    consensus_enabled: bool = True
    tie_break_by_id: bool = False
    conflicting_plans: bool = True
    max_rounds: int = 30
    seeds: tuple[int, ...] = tuple(range(10))
    epsilon: float = 0.5
    window: int = 3
    correspondence: str = "auto"
    distortion: float = DISTORTION
    llm: LLMSettings | None = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "planner", PlannerKind(self.planner))
            overrides = {int(k): PlannerKind(v) for k, v in dict(self.planner_overrides).items()}
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "planner_overrides", overrides)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        n = self.task.team_size
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be at least 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.epsilon <= 0 or self.window < 1:
            raise ConfigError("need epsilon > 0 and window >= 1")
        if self.correspondence not in CORRESPONDENCE_MODES:
            raise ConfigError(f"correspondence must be one of {CORRESPONDENCE_MODES}")
        if not is_supported(self.task.shape, n):
            raise ConfigError(f"unsupported formation {self.task.shape.value}/{n}")
        if any(not 0 <= i < n for i in overrides):
            raise ConfigError("planner override for a robot outside the team")
        if self.distortion < 0:
            raise ConfigError("distortion must be non-negative")

    def kind_for(self, robot_id: int) -> PlannerKind:
        return self.planner_overrides.get(robot_id, self.planner)

    @property
    def uses_llm(self) -> bool:
        n = self.task.team_size
        return any(self.kind_for(i) is PlannerKind.LLM for i in range(n))

    @property
    def matching(self) -> str:
        if self.correspondence != "auto":
            return self.correspondence
        return "goal" if self.consensus_enabled else "greedy"

    def with_(self, **changes) -> RunConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class Frame:
    round: int
    positions: tuple[Vec2, ...]
    plan_origins: tuple[int | None, ...]
    goals: tuple[Vec2, ...]
    goal_indices: tuple[int, ...]
    influences: tuple[float, ...]
    adoptions: tuple[Adoption, ...]
    motion: tuple[MotionReport, ...]
    error_mean_dist: float
    error_mean_sq: float
    agreement: float
    wall_clock: float = field(default=0.0, compare=False)


@dataclass
class TrialRecord:
    seed: int
    frames: list[Frame] = field(default_factory=list)
    converged_round: int | None = None
    failed: bool = False
    failure: str | None = None
    llm_replies: int = 0
    llm_parse_failures: int = 0
    llm_fallbacks: int = 0

    @property
    def error_curve(self) -> list[float]:
        return [f.error_mean_dist for f in self.frames]

    @property
    def error_sq_curve(self) -> list[float]:
        return [f.error_mean_sq for f in self.frames]

    @property
    def agreement_curve(self) -> list[float]:
        return [f.agreement for f in self.frames]

    @property
    def final(self) -> Frame:
        return self.frames[-1]


def shape_error(positions: Sequence[Vec2], goal_indices: Sequence[int], reference: np.ndarray,
                matching: str) -> tuple[float, float]:
    X = as_array(positions)
    if matching == "goal":
        Y = reference[list(goal_indices)]
    else:
        Y = reference[point_correspondence(X, reference)]
    res = procrustes_align(X, Y)
    return res.error_mean_dist, res.error_mean_sq


def _known_cohort(i: int, states: Sequence[RobotState], nbrs) -> dict[int, Vec2]:
    me = states[i]
    known = {i: me.position}
    for j in nbrs:
        if plan_equal(states[j].plan, me.plan):
            known[j] = states[j].position
    return known


def _stop_mask(record: TrialRecord, consensus: bool) -> list[float]:
    # rounds without full plan agreement never count as converged under consensus
    return [
        f.error_mean_dist if (not consensus or f.agreement == 1.0) else math.inf
        for f in record.frames
    ]


class _Trial:
    """Mutable state of one running trial."""

    def __init__(self, config: RunConfig, seed: int, client_factory=None):
        self.config = config
        self.spec = config.task
        self.n = self.spec.team_size
        self.record = TrialRecord(seed=seed)
        self.rng = SeededRng(seed)
        self.reference = as_array(generate_formation(ShapeTemplate.from_task(self.spec)))
        self.kinds = [config.kind_for(i) for i in range(self.n)]
        self.agents: dict[int, LLMPlanner] = {}
        if config.uses_llm:
            factory = client_factory or (lambda s: ChatClient(s))
            client = factory(config.llm or LLMSettings())
            for i, kind in enumerate(self.kinds):
                if kind is PlannerKind.LLM:
                    self.agents[i] = LLMPlanner(i, self.spec, client)
        self._pool = ThreadPoolExecutor(max_workers=len(self.agents)) if self.agents else None

    # -- planning ---------------------------------------------------------

    def _initial_plan(self, i: int) -> PlanResult:
        rotation = i * 2 * math.pi / self.n if self.config.conflicting_plans else 0.0
        kind = self.kinds[i]
        if kind is PlannerKind.LLM:
            try:
                return self.agents[i].generate_plan()
            except ParseFailure as exc:
                self.record.llm_fallbacks += 1
                log.warning("round=0 robot=%d event=plan_fallback reason=%s", i, exc.reason)
                kind = PlannerKind.ORACLE
        return generate_plan(
            kind, i, self.spec, self.rng, rotation=rotation, distortion=self.config.distortion
        )

    def _waypoints(self, ctxs: list[StepContext], round_: int) -> list[Vec2]:
        out: list[Vec2 | None] = [None] * self.n
        futures = {}
        for i, ctx in enumerate(ctxs):
            if i in self.agents:
                futures[i] = self._pool.submit(self.agents[i].propose_step, ctx)
            else:
                out[i] = propose_step(self.kinds[i], ctx)
        # barrier: every reply is in before anyone moves
        for i, fut in futures.items():
            try:
                out[i] = fut.result()
            except ParseFailure as exc:
                self.record.llm_fallbacks += 1
                log.warning(
                    "round=%d robot=%d event=step_fallback reason=%s", round_, i, exc.reason
                )
                out[i] = propose_step(PlannerKind.ORACLE, ctxs[i])
        return out

    # -- bookkeeping ------------------------------------------------------

    def _frame(self, round_, states, infl, adoptions, motion, started) -> Frame:
        positions = tuple(s.position for s in states)
        goal_idx = tuple(s.goal_index for s in states)
        e_dist, e_sq = shape_error(positions, goal_idx, self.reference, self.config.matching)
        return Frame(
            round=round_,
            positions=positions,
            plan_origins=tuple(s.plan.origin_id for s in states),
            goals=tuple(s.goal for s in states),
            goal_indices=goal_idx,
            influences=tuple(infl),
            adoptions=tuple(adoptions),
            motion=tuple(motion),
            error_mean_dist=e_dist,
            error_mean_sq=e_sq,
            agreement=plan_agreement(states),
            wall_clock=time.perf_counter() - started,
        )

    def _finish(self) -> TrialRecord:
        rec = self.record
        rec.converged_round = converged(
            _stop_mask(rec, self.config.consensus_enabled), self.config.epsilon, self.config.window
        )
        for agent in self.agents.values():
            rec.llm_replies += agent.replies
            rec.llm_parse_failures += agent.parse_failures
        if self._pool is not None:
            self._pool.shutdown()
        return rec

    # -- loop ---------------------------------------------------------------

    def run(self) -> TrialRecord:
        cfg, spec, n = self.config, self.spec, self.n
        started = time.perf_counter()
        positions = random_initial_positions(spec, self.rng)
        try:
            plans = [self._initial_plan(i) for i in range(n)]
        except PlannerUnavailable as exc:
            return self._fail(exc)
        graph = build_graph(positions, spec.comm_range, 0)
        states = [
            RobotState(i, positions[i], plans[i].plan, plans[i].goal, plans[i].my_index)
            .observe(graph.neighbors(i), n)
            for i in range(n)
        ]
        claims = [
            assign_goal(s.id, s.plan, _known_cohort(s.id, states, graph.neighbors(s.id)))
            for s in states
        ]
        states = [s.with_(goal=g, goal_index=k) for s, (g, k) in zip(states, claims)]
        self.record.frames.append(self._frame(0, states, influences(graph), (), (), started))

        for t in range(1, cfg.max_rounds + 1):
            started = time.perf_counter()
            graph = build_graph([s.position for s in states], spec.comm_range, t)
            states = [s.observe(graph.neighbors(s.id), n) for s in states]
            adoptions: list[Adoption] = []
            if cfg.consensus_enabled:
                states, adoptions = consensus_round(
                    states, graph, tie_break_by_id=cfg.tie_break_by_id
                )
                for a in adoptions:
                    log.debug("round=%d robot=%d event=adopt from=%d", t, a.robot_id, a.adopted_from)
            start_pos = [s.position for s in states]
            nbr_pos = [[start_pos[j] for j in sorted(graph.neighbors(i))] for i in range(n)]
            ctxs = [
                StepContext(start_pos[i], nbr_pos[i], s.plan, s.goal, spec)
                for i, s in enumerate(states)
            ]
            try:
                waypoints = self._waypoints(ctxs, t)
            except PlannerUnavailable as exc:
                return self._fail(exc)
            reports = []
            moved = []
            for i, s in enumerate(states):
                new_pos, rep = apply_step(s, waypoints[i], nbr_pos[i], spec)
                if rep.safety_hold:
                    log.debug("round=%d robot=%d event=safety_hold", t, i)
                if rep.rejected:
                    log.warning("round=%d robot=%d event=rejected_waypoint", t, i)
                reports.append(rep)
                moved.append(s.with_(position=new_pos))
            states = moved
            self.record.frames.append(
                self._frame(t, states, [s.influence for s in states], adoptions, reports, started)
            )
            f = self.record.frames[-1]
            log.info(
                "seed=%d round=%d event=round error=%.4f agreement=%.3f adoptions=%d",
                self.record.seed, t, f.error_mean_dist, f.agreement, len(adoptions),
            )
            mask = _stop_mask(self.record, cfg.consensus_enabled)
            if len(mask) >= cfg.window and all(e <= cfg.epsilon for e in mask[-cfg.window :]):
                break
        return self._finish()

    def _fail(self, exc: Exception) -> TrialRecord:
        log.error("event=trial_failed seed=%d error=%s", self.record.seed, exc)
        self.record.failed = True
        self.record.failure = str(exc)
        return self._finish()


def run_trial(config: RunConfig, seed: int, *, client_factory: Callable | None = None) -> TrialRecord:
    """Run one seeded trial. Deterministic for every non-LLM planner."""
    return _Trial(config, seed, client_factory).run()


@dataclass(frozen=True)
class BatchSummary:
    mean_error: tuple[float, ...]
    half_width: tuple[float, ...]
    mean_error_sq: tuple[float, ...]
    trials: int
    failed: int
    convergence_rate: float
    mean_convergence_round: float | None


def _padded(curves: list[list[float]]) -> np.ndarray:
    # trials that stop early hold their final value
    length = max(len(c) for c in curves)
    return np.array([c + [c[-1]] * (length - len(c)) for c in curves], dtype=float)


def summarize(records: Sequence[TrialRecord]) -> BatchSummary:
    usable = [r for r in records if r.frames]
    if usable:
        err = _padded([r.error_curve for r in usable])
        sq = _padded([r.error_sq_curve for r in usable])
        k = len(usable)
        mean = err.mean(axis=0)
        if k > 1:
            half = Z95 * err.std(axis=0, ddof=1) / math.sqrt(k)
        else:
            half = np.zeros_like(mean)
        mean_sq = sq.mean(axis=0)
    else:
        mean = half = mean_sq = np.zeros(0)
    conv = [r.converged_round for r in records if r.converged_round is not None and not r.failed]
    return BatchSummary(
        mean_error=tuple(float(v) for v in mean),
        half_width=tuple(float(v) for v in half),
        mean_error_sq=tuple(float(v) for v in mean_sq),
        trials=len(records),
        failed=sum(r.failed for r in records),
        convergence_rate=len(conv) / len(records) if records else 0.0,
        mean_convergence_round=float(np.mean(conv)) if conv else None,
    )


def run_batch(
    config: RunConfig, *, workers: int = 1, client_factory: Callable | None = None
) -> tuple[BatchSummary, list[TrialRecord]]:
    """Run every seed in ``config.seeds``; per-trial failures are kept, not raised."""

    def one(seed: int) -> TrialRecord:
        try:
            return run_trial(config, seed, client_factory=client_factory)
        except FlockError as exc:
            log.error("event=trial_failed seed=%d error=%s", seed, exc)
            return TrialRecord(seed=seed, failed=True, failure=str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, config.seeds))
    else:
        records = [one(s) for s in config.seeds]
    return summarize(records), records
