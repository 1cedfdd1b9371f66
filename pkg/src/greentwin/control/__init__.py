"""PID, receding-horizon, fuzzy controllers and the strategy supervisor."""

from .fuzzy import FuzzyResult, FuzzyRuleBase, default_rule_base, fuzzy_eval, load_rule_base
from .mpc import MpcConfig, MpcResult, PlannerUnavailable, candidate_grid, mpc_plan, sequence_cost
from .pid import PidState, pid_step
from .supervisor import ControlDecision, Selection, SupervisorConfig, SupervisorContext, supervisor_select

__all__ = [
    "ControlDecision",
    "FuzzyResult",
    "FuzzyRuleBase",
    "MpcConfig",
    "MpcResult",
    "PidState",
    "PlannerUnavailable",
    "Selection",
    "SupervisorConfig",
    "SupervisorContext",
    "candidate_grid",
    "default_rule_base",
    "fuzzy_eval",
    "load_rule_base",
    "mpc_plan",
    "pid_step",
    "sequence_cost",
    "supervisor_select",
]
