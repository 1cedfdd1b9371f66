"""Strategy arbitration: which controller drives which actuator this tick.

Routing table, evaluated top to bottom per actuator:

=================== =================================================== ========
actuator            condition                                           strategy
=================== =================================================== ========
heater, ventilator  planner available, predictor validation MSE <=      mpc
                    ``mpc_mse_threshold`` and |air_temp error| <=
                    ``large_error``
irrigator           predicted temperature trend > ``trend_threshold``   fuzzy
                    and air humidity < ``humidity_crossover``
any                 otherwise                                           pid
=================== =================================================== ========

PID is the total fallback, so every actuator always gets exactly one strategy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..plant import ACTUATORS, ActuatorCommand

STRATEGIES = ("pid", "mpc", "fuzzy")
MPC_ACTUATORS = ("heater", "ventilator")


@dataclass(frozen=True)
class SupervisorConfig:
    mpc_mse_threshold: float = 0.05
    large_error: float = 5.0
    trend_threshold: float = 0.0
    # low/medium crossover of the default humidity terms
    humidity_crossover: float = 31.25


@dataclass(frozen=True)
class SupervisorContext:
    prediction_mse: float | None = None
    planner_available: bool = False
    errors: Mapping[str, float] = field(default_factory=dict)
    predicted_trend: float | None = None
    humidity: float | None = None

    def __post_init__(self):
        for name in ("prediction_mse", "predicted_trend", "humidity"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        for ch, v in self.errors.items():
            if not math.isfinite(v):
                raise ValueError(f"error for {ch} must be finite")


@dataclass(frozen=True)
class Selection:
    strategy: str
    rationale: str


@dataclass(frozen=True)
class ControlDecision:
    """Commands issued by one strategy in one tick, with the reason it was chosen."""

    commands: tuple[ActuatorCommand, ...]
    strategy: str
    rationale: str

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        names = [c.actuator for c in self.commands]
        if len(names) != len(set(names)):
            raise ValueError("one command per actuator per decision")


def supervisor_select(
    ctx: SupervisorContext,
    cfg: SupervisorConfig = SupervisorConfig(),
    actuators: Sequence[str] = ACTUATORS,
) -> dict[str, Selection]:
    out: dict[str, Selection] = {}
    temp_err = abs(ctx.errors.get("air_temp", 0.0))
    confident = ctx.prediction_mse is not None and ctx.prediction_mse <= cfg.mpc_mse_threshold
    for act in actuators:
        if act in MPC_ACTUATORS:
            if not ctx.planner_available:
                out[act] = Selection("pid", "planner unavailable")
            elif not confident:
                out[act] = Selection("pid", f"prediction MSE {ctx.prediction_mse} above {cfg.mpc_mse_threshold}")
            elif temp_err > cfg.large_error:
                out[act] = Selection("pid", f"air_temp error {temp_err:.3g} exceeds {cfg.large_error}")
            else:
                out[act] = Selection("mpc", f"prediction MSE {ctx.prediction_mse:.3g} within threshold")
        elif act == "irrigator":
            rising = ctx.predicted_trend is not None and ctx.predicted_trend > cfg.trend_threshold
            dry = ctx.humidity is not None and ctx.humidity < cfg.humidity_crossover
            if rising and dry:
                out[act] = Selection(
                    "fuzzy", f"temperature rising ({ctx.predicted_trend:.3g}/tick) and humidity low ({ctx.humidity:.3g})"
                )
            else:
                out[act] = Selection("pid", "fuzzy irrigation rule not active")
        else:
            out[act] = Selection("pid", "default")
    return out


__all__ = ["ControlDecision", "MPC_ACTUATORS", "STRATEGIES", "Selection", "SupervisorConfig", "SupervisorContext", "supervisor_select"]
