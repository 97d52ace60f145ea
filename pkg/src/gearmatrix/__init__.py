"""Gear-matrix sensor relocation: kinematics, planners, oracles and experiments."""

from .core import (
    CostModel,
    GearError,
    GearPos,
    GridConfig,
    IllegalTransfer,
    PlanStep,
    PostStateInvalid,
    RotationBlocked,
    Slot,
    Transfer,
    WorldState,
    apply_step,
    capacity,
    channel_angle,
    connections_at,
    legal_rotation,
    validate_state,
)
from .planner import (
    Plan,
    PlannerParams,
    PlanningFailed,
    Scenario,
    Target,
    heuristic,
    makespan,
    plan_exact,
    plan_greedy,
    step_cost,
    successors,
    validate_plan,
)

__version__ = "0.1.0"

__all__ = [
    "CostModel",
    "GearError",
    "GearPos",
    "GridConfig",
    "IllegalTransfer",
    "PlanStep",
    "PostStateInvalid",
    "RotationBlocked",
    "Slot",
    "Transfer",
    "WorldState",
    "apply_step",
    "capacity",
    "channel_angle",
    "connections_at",
    "legal_rotation",
    "validate_state",
    "Plan",
    "PlannerParams",
    "PlanningFailed",
    "Scenario",
    "Target",
    "heuristic",
    "makespan",
    "plan_exact",
    "plan_greedy",
    "step_cost",
    "successors",
    "validate_plan",
]
