"""Receding-horizon planner over a discrete command grid.

The planner minimises, over every sequence of ``horizon`` grid commands,

    sum_k  weight_tracking * sum_i (x_{k+1,i} - setpoint_i)^2
         + weight_effort   * sum_j u_{k,j}^2

and returns the first command of the best sequence. Search is exact
branch-and-bound: sequences are visited in lexicographic order and a branch
is abandoned once its partial cost reaches the best complete cost, so the
answer equals exhaustive enumeration, ties going to the lexicographically
smallest sequence. Linear models run on the compiled kernel when available.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np

from .. import kernels
from ..plant import ACTUATORS, LinearModel, PlantParams, WeatherSample, thermal_model

PREDICTION_SOURCES = ("plant_model", "rnn")


class PlannerUnavailable(RuntimeError):
    """The prediction model failed; callers fall back to PID."""


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 6
    candidate_levels: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    weight_tracking: float = 1.0
    weight_effort: float = 0.05
    prediction_source: str = "plant_model"
    # actuator pairs that may not both be non-zero in the same tick
    exclusive: tuple[tuple[str, str], ...] = (("heater", "ventilator"),)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.candidate_levels:
            raise ValueError("candidate_levels must be non-empty")
        if any(not 0.0 <= lv <= 1.0 for lv in self.candidate_levels):
            raise ValueError("candidate_levels must lie in [0, 1]")
        if self.weight_tracking < 0 or self.weight_effort < 0:
            raise ValueError("weights must be >= 0")
        if self.prediction_source not in PREDICTION_SOURCES:
            raise ValueError(f"unknown prediction_source {self.prediction_source!r}")
        object.__setattr__(self, "candidate_levels", tuple(sorted(set(self.candidate_levels))))
        object.__setattr__(self, "exclusive", tuple(tuple(p) for p in self.exclusive))


class PredictionModel(Protocol):
    states: Sequence[str]
    inputs: Sequence[str]

    def predict(self, x: Sequence[float], u: Sequence[float], k: int) -> Sequence[float]: ...


def candidate_grid(
    inputs: Sequence[str], levels: Sequence[float], exclusive: Sequence[tuple[str, str]] = ()
) -> list[tuple[float, ...]]:
    """Per-stage command vectors, lexicographically sorted."""
    levels = sorted(set(levels))
    pos = {name: i for i, name in enumerate(inputs)}
    pairs = [(pos[a], pos[b]) for a, b in exclusive if a in pos and b in pos]
    grid = [
        u for u in itertools.product(levels, repeat=len(inputs))
        if not any(u[i] != 0.0 and u[j] != 0.0 for i, j in pairs)
    ]
    return sorted(grid)


@dataclass(frozen=True)
class MpcResult:
    commands: Mapping[str, float]
    sequence: tuple[tuple[float, ...], ...]
    trajectory: tuple[tuple[float, ...], ...]
    cost: float
    nodes: int = 0
    inputs: tuple[str, ...] = field(default=())


def simulate_linear(model: LinearModel, x0: Sequence[float], seq: Sequence[Sequence[float]]):
    """Roll ``seq`` through ``model`` with the planner's arithmetic order."""
    n = len(x0)
    xs = []
    x = [float(v) for v in x0]
    for k, u in enumerate(seq):
        xn = []
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc = acc + float(model.A[i][j]) * x[j]
            bu = 0.0
            for j in range(len(u)):
                bu = bu + float(model.B[i][j]) * float(u[j])
            xn.append((acc + bu) + float(model.d[k][i]))
        xs.append(tuple(xn))
        x = xn
    return xs


def _search_generic(model: PredictionModel, x0, setpoint, wtrack, cands, w_effort, horizon):
    """Same branch-and-bound as the kernel, for arbitrary prediction models."""
    eff = []
    for u in cands:
        e = 0.0
        for v in u:
            e = e + v * v
        eff.append(w_effort * e)
    best = math.inf
    best_seq = [0] * horizon
    idx = [-1] * horizon
    xs: list = [list(x0)] + [None] * horizon
    partial = [0.0] * (horizon + 1)
    nodes = 0
    k = 0
    while k >= 0:
        idx[k] += 1
        c = idx[k]
        if c >= len(cands):
            k -= 1
            continue
        nodes += 1
        try:
            xn = [float(v) for v in model.predict(xs[k], cands[c], k)]
        except Exception as exc:  # any predictor failure disables the planner
            raise PlannerUnavailable(f"prediction failed at stage {k}: {exc}") from exc
        if not all(math.isfinite(v) for v in xn):
            raise PlannerUnavailable(f"non-finite prediction at stage {k}")
        track = 0.0
        for i in range(len(xn)):
            e = xn[i] - setpoint[i]
            track = track + wtrack[i] * e * e
        cost = partial[k] + (track + eff[c])
        if cost >= best:
            continue
        if k == horizon - 1:
            best = cost
            best_seq = idx[:]
            continue
        xs[k + 1] = xn
        partial[k + 1] = cost
        k += 1
        idx[k] = -1
    return best_seq, best, nodes


def mpc_plan(
    cfg: MpcConfig,
    current,
    setpoints: Mapping[str, float],
    model: LinearModel | PlantParams | PredictionModel,
    forecast: Sequence[WeatherSample] | None = None,
) -> MpcResult:
    """Plan ``cfg.horizon`` steps ahead and return the first command.

    ``model`` may be a :class:`LinearModel`, :class:`PlantParams` (the
    thermal model is then built from ``forecast``), or any object with
    ``states``, ``inputs`` and ``predict(x, u, k)``. ``current`` is an
    :class:`EnvState` or a mapping from state name to value. Channels in
    ``model.states`` without a setpoint are not tracked.
    """
    if isinstance(model, PlantParams):
        if forecast is None or len(forecast) < cfg.horizon:
            raise PlannerUnavailable("thermal model needs a weather forecast covering the horizon")
        model = thermal_model(model, forecast[: cfg.horizon])
    states = tuple(model.states)
    inputs = tuple(model.inputs)
    x0 = [float(current[s]) for s in states]
    setpoint = [float(setpoints.get(s, 0.0)) for s in states]
    wtrack = [cfg.weight_tracking if s in setpoints else 0.0 for s in states]
    cands = candidate_grid(inputs, cfg.candidate_levels, cfg.exclusive)

    if isinstance(model, LinearModel):
        if len(model.d) < cfg.horizon:
            raise PlannerUnavailable("linear model disturbance shorter than horizon")
        d = [list(row) for row in model.d[: cfg.horizon]]
        seq_idx, cost, nodes = kernels.mpc_search(
            np.asarray(model.A, dtype=float),
            np.asarray(model.B, dtype=float),
            np.asarray(d, dtype=float),
            np.asarray(x0),
            np.asarray(setpoint),
            np.asarray(wtrack),
            np.asarray(cands, dtype=float),
            float(cfg.weight_effort),
        )
        seq = tuple(cands[i] for i in seq_idx)
        traj = tuple(simulate_linear(model, x0, seq))
    else:
        seq_idx, cost, nodes = _search_generic(
            model, x0, setpoint, wtrack, cands, cfg.weight_effort, cfg.horizon
        )
        seq = tuple(cands[i] for i in seq_idx)
        traj = []
        x = x0
        for k, u in enumerate(seq):
            x = [float(v) for v in model.predict(x, u, k)]
            traj.append(tuple(x))
        traj = tuple(traj)
    first = dict(zip(inputs, seq[0]))
    return MpcResult(first, seq, traj, float(cost), nodes, inputs)


def sequence_cost(
    cfg: MpcConfig,
    model: LinearModel,
    x0: Sequence[float],
    setpoint: Sequence[float],
    wtrack: Sequence[float],
    seq: Sequence[Sequence[float]],
) -> float:
    """Cost of one command sequence, summed stage by stage."""
    total = 0.0
    for x, u in zip(simulate_linear(model, x0, seq), seq):
        track = 0.0
        for i in range(len(x)):
            e = x[i] - setpoint[i]
            track = track + wtrack[i] * e * e
        effort = 0.0
        for v in u:
            effort = effort + v * v
        total = total + (track + cfg.weight_effort * effort)
    return total


__all__ = [
    "ACTUATORS",
    "MpcConfig",
    "MpcResult",
    "PlannerUnavailable",
    "PREDICTION_SOURCES",
    "candidate_grid",
    "mpc_plan",
    "sequence_cost",
    "simulate_linear",
]
