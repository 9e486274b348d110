"""Decentralized formation flocking with influence-based plan consensus."""

from .core import (
    Arena,
    ConfigError,
    ContractViolation,
    FlockError,
    FormationPlan,
    PlacementInfeasible,
    RobotState,
    SeededRng,
    Shape,
    TaskSpec,
    UnsupportedFormation,
    Vec2,
    plan_equal,
    random_initial_positions,
)
from .harness import BatchSummary, RunConfig, TrialRecord, run_batch, run_trial
from .metrics import ProcrustesAligner, procrustes_align
from .planner import PlannerKind

__version__ = "0.1.0"

__all__ = [
    "Arena",
    "BatchSummary",
    "ConfigError",
    "ContractViolation",
    "FlockError",
    "FormationPlan",
    "PlacementInfeasible",
    "PlannerKind",
    "ProcrustesAligner",
    "RobotState",
    "RunConfig",
    "SeededRng",
    "Shape",
    "TaskSpec",
    "TrialRecord",
    "UnsupportedFormation",
    "Vec2",
    "plan_equal",
    "procrustes_align",
    "random_initial_positions",
    "run_batch",
    "run_trial",
]
