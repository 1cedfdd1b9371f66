"""Closed-loop orchestration of one scenario.

Per tick ``t``::

    weather -> sensing -> telemetry frames -> gateway store -> stream cleaning
    -> predictor (after warm-up) -> supervisor + controllers
    -> health check, failover, command routing -> resource accounting
    -> plant step -> log row

Warm-up: for the first ``predictor.bptt_window`` ticks the predictor has no
full input window, so every actuator runs on PID.

Prediction confidence is the RNN's normalized one-step MSE. Before the run
the RNN is pre-trained on an identification run of
``predictor.history_ticks`` ticks of the same plant: the thermal command is
a random level in ``[-excitation, excitation]`` held for ``excitation_hold``
ticks (so the model sees the full heater/ventilator response) while the
other loops run on PID. Its validation MSE is the confidence
until 10 online one-step errors exist; from then on it is the rolling mean
of the last ``predictor.online_window`` online errors.

Commands reach the plant through the active member of each actuator's
redundancy group. A member inside an outage window does not actuate; an
exhausted group leaves its actuator at 0 and the decision notes the last
command it would have held.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .control.fuzzy import FuzzyRuleBase, default_rule_base, fuzzy_eval, load_rule_base
from .control.mpc import MpcConfig, PlannerUnavailable, mpc_plan
from .control.pid import PidState, pid_step
from .control.supervisor import ControlDecision, SupervisorContext, supervisor_select
from .core import CHANNELS, EnvState, Tick
from .pipeline import NormParams, StreamCleaner, apply_norm
from .plant import ACTUATORS, ActuatorCommand, WeatherSample, step, weather_forecast, weather_profile
from .predictor import (
    RnnModel,
    TrainConfig,
    TrainingDivergedError,
    build_dataset,
    chronological_split,
    mse,
    predict_horizon,
    train,
)
from .reliability import AlertLog, ComponentHealth, HealthThresholds, RedundancyGroup, SwitchEvent, failover, heartbeat_check
from .resources import energy_demand, fertilization_rate, irrigation_demand
from .scenario import ScenarioConfig
from .sensing import SensorArray, SensorSpec
from .telemetry.frames import SensorFrame
from .telemetry.gateway import (
    DeviceLink,
    Gateway,
    LiveGateway,
    OutlierHook,
    RecordStore,
    loopback_connect,
    resolve_port,
    tcp_connect,
)

FEATURES = (
    "air_temp",
    "air_humidity",
    "soil_moisture",
    "outdoor_temp",
    "outdoor_light",
    "heater",
    "ventilator",
    "irrigator",
)
CONTROLLED = ("air_temp", "soil_moisture", "light", "soil_ph")
MIN_ONLINE_SAMPLES = 10


class SimulationError(RuntimeError):
    def __init__(self, tick: int, module: str, cause: BaseException):
        self.tick, self.module, self.cause = tick, module, cause
        super().__init__(f"tick {tick}, module {module}: {type(cause).__name__}: {cause}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def runlog_columns() -> tuple[str, ...]:
    cols = ["tick", "warmup"]
    cols += [f"truth.{c}" for c in CHANNELS]
    cols += [f"meas.{c}" for c in CHANNELS]
    cols += [f"clean.{c}" for c in CHANNELS]
    cols += [f"flag.{c}" for c in CHANNELS]
    cols += ["outdoor.temp", "outdoor.light", "outdoor.wind"]
    cols += ["pred.air_temp", "pred.trend", "pred.mse"]
    cols += [f"sp.{c}" for c in CONTROLLED]
    cols += [f"inband.{c}" for c in CONTROLLED]
    cols += [f"strategy.{a}" for a in ACTUATORS]
    cols += [f"cmd.{a}" for a in ACTUATORS]
    cols += [f"active.{a}" for a in ACTUATORS]
    cols += [f"why.{a}" for a in ACTUATORS]
    cols += ["energy", "water", "fertilizer", "alerts", "events"]
    return tuple(cols)


@dataclass
class RunLog:
    """Per-tick rows of already-formatted text cells (floats as ``repr``)."""

    columns: tuple[str, ...] = field(default_factory=runlog_columns)
    rows: list[list[str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, values: dict) -> None:
        missing = set(self.columns) - set(values)
        extra = set(values) - set(self.columns)
        if missing or extra:
            raise ValueError(f"log row schema mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
        self.rows.append([_fmt(values[c]) for c in self.columns])

    def column(self, name: str) -> list[str]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def floats(self, name: str) -> list[float | None]:
        return [float(v) if v != "" else None for v in self.column(name)]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            w.writerows(self.rows)

    @classmethod
    def read_csv(cls, path: str | Path) -> "RunLog":
        with open(path, encoding="utf-8", newline="") as fh:
            r = csv.reader(fh)
            header = tuple(next(r))
            rows = [list(row) for row in r]
        for i, row in enumerate(rows):
            if len(row) != len(header):
                raise ValueError(f"{path}: row {i + 1} has {len(row)} cells, header has {len(header)}")
        return cls(header, rows)


# ---------------------------------------------------------------------------
# control stack


class ControlStack:
    """PID loops for every controlled channel plus the MPC and fuzzy paths."""

    def __init__(self, cfg: ScenarioConfig, rule_base: FuzzyRuleBase):
        self.cfg = cfg
        self.rb = rule_base
        self.dt = cfg.seconds_per_tick
        self.pid: dict[str, PidState] = {}
        for ch, g in cfg.controllers.items():
            self.pid[ch] = PidState(
                g.kp, g.ki, g.kd, g.output_limits, g.integral_limits, reverse=(ch == "soil_ph")
            )

    def photoperiod(self, t: int) -> bool:
        hour = math.fmod(t * self.dt, 86400.0) / 3600.0
        on, off = self.cfg.photoperiod_hours
        return on <= hour < off

    def setpoints(self, t: int) -> dict[str, float | None]:
        target = self.cfg.crop.target
        sp: dict[str, float | None] = {ch: target.get(ch) for ch in CONTROLLED}
        if sp["light"] is not None and not self.photoperiod(t):
            sp["light"] = 0.0
        return sp

    def pid_commands(self, t: int, clean: dict[str, float], sp: dict[str, float | None]) -> dict[str, float]:
        out = dict.fromkeys(ACTUATORS, 0.0)
        for ch, act in (("air_temp", None), ("soil_moisture", "irrigator"), ("light", "lamp"), ("soil_ph", "fertilizer_doser")):
            if sp[ch] is None or ch not in self.pid:
                continue
            if ch == "light" and sp[ch] == 0.0:
                self.pid[ch] = self.pid[ch].reset()
                continue
            u, self.pid[ch] = pid_step(self.pid[ch], sp[ch], clean[ch], self.dt)
            if act is None:
                out["heater"], out["ventilator"] = max(u, 0.0), max(-u, 0.0)
            else:
                out[act] = min(max(u, 0.0), 1.0)
        return out

    def decide(
        self,
        t: int,
        clean: dict[str, float],
        forecast: Sequence[WeatherSample],
        prediction_mse: float | None,
        trend: float | None,
        advanced: bool,
    ) -> tuple[dict[str, float], list[ControlDecision], dict[str, str]]:
        sp = self.setpoints(t)
        pid = self.pid_commands(t, clean, sp)
        errors = {ch: sp[ch] - clean[ch] for ch in CONTROLLED if sp[ch] is not None}
        ctx = SupervisorContext(
            prediction_mse=prediction_mse if advanced else None,
            planner_available=advanced and sp["air_temp"] is not None,
            errors=errors,
            predicted_trend=trend if advanced else None,
            humidity=clean["air_humidity"],
        )
        sel = supervisor_select(ctx, self.cfg.supervisor)
        cmds = dict(pid)
        strategy = {a: s.strategy for a, s in sel.items()}
        why = {a: s.rationale for a, s in sel.items()}

        if strategy["heater"] == "mpc" or strategy["ventilator"] == "mpc":
            try:
                res = mpc_plan(self.cfg.mpc, clean, {"air_temp": sp["air_temp"]}, self.cfg.plant, forecast)
                for a in ("heater", "ventilator"):
                    if strategy[a] == "mpc":
                        cmds[a] = res.commands[a]
            except PlannerUnavailable as exc:
                for a in ("heater", "ventilator"):
                    strategy[a], why[a] = "pid", f"planner unavailable: {exc}"
        if strategy["irrigator"] == "fuzzy":
            r = fuzzy_eval(self.rb, {"temp_trend": trend, "humidity": clean["air_humidity"]})
            if r.fired["irrigation"]:
                cmds["irrigator"] = r.outputs["irrigation"]
            else:
                strategy["irrigator"], why["irrigator"] = "pid", "no fuzzy rule fired"

        decisions = []
        for s in ("pid", "mpc", "fuzzy"):
            acts = [a for a in ACTUATORS if strategy[a] == s]
            if acts:
                decisions.append(
                    ControlDecision(
                        tuple(ActuatorCommand(a, cmds[a], t) for a in acts),
                        s,
                        "; ".join(f"{a}: {why[a]}" for a in acts),
                    )
                )
        return cmds, decisions, why


# ---------------------------------------------------------------------------
# predictor


@dataclass
class Predictor:
    model: RnnModel
    input_norms: tuple[NormParams, ...]
    target_norms: tuple[NormParams, ...]
    val_mse: float
    window: int
    online: deque = field(default_factory=deque)

    @property
    def scale(self) -> float:
        n = self.target_norms[0]
        return n.b - n.a if n.kind == "minmax" else n.b

    def confidence(self) -> float:
        if len(self.online) >= MIN_ONLINE_SAMPLES:
            return math.fsum(self.online) / len(self.online)
        return self.val_mse

    def normalize(self, row: Sequence[float]) -> np.ndarray:
        return np.array([apply_norm(float(v), n) for v, n in zip(row, self.input_norms)])


def _feature_row(clean: dict[str, float], w: WeatherSample, u: dict[str, float]) -> list[float]:
    return [
        clean["air_temp"],
        clean["air_humidity"],
        clean["soil_moisture"],
        w.outdoor_temp,
        w.outdoor_light,
        u["heater"],
        u["ventilator"],
        u["irrigator"],
    ]


def _strip_faults(specs: Sequence[SensorSpec]) -> list[SensorSpec]:
    return [SensorSpec(s.id, s.channel, s.noise_sd, s.bias, s.resolution) for s in specs]


def simulate_history(cfg: ScenarioConfig, rule_base: FuzzyRuleBase) -> np.ndarray:
    """Identification rollout; returns the ``(T, F)`` feature series."""
    pc = cfg.predictor
    seed = cfg.rng_seed + 1
    rng = np.random.default_rng(seed)
    stack = ControlStack(cfg, rule_base)
    sensors = SensorArray(_strip_faults(cfg.sensors), seed)
    cleaner = StreamCleaner()
    state = cfg.initial_state
    rows = []
    level = 0.0
    for t in range(pc.history_ticks):
        if t % max(1, pc.excitation_hold) == 0:
            level = float(rng.uniform(-pc.excitation, pc.excitation))
        w = weather_profile(cfg.weather_profile, Tick(t, cfg.seconds_per_tick), seed, cfg.weather)
        meas = {r.channel: r.value for r in sensors.read(state, t) if r.quality != "failed"}
        clean = {ch: _clean_value(cleaner, ch, t, meas.get(ch), state) for ch in CHANNELS}
        u = stack.pid_commands(t, clean, stack.setpoints(t))
        u["heater"], u["ventilator"] = max(level, 0.0), max(-level, 0.0)
        rows.append(_feature_row(clean, w, u))
        state = step(state, [ActuatorCommand(a, u[a], t) for a in ACTUATORS], w, cfg.plant)
    return np.asarray(rows, dtype=np.float64)


def pretrain_predictor(cfg: ScenarioConfig, rule_base: FuzzyRuleBase) -> Predictor | None:
    pc = cfg.predictor
    if not pc.enabled:
        return None
    series = simulate_history(cfg, rule_base)
    data = build_dataset(series, [0], window=pc.bptt_window, horizon=1, stride=pc.stride)
    model = RnnModel.init(pc.hidden_size, len(FEATURES), 1, cfg.rng_seed)
    tc = TrainConfig(
        learning_rate=pc.learning_rate,
        epochs=pc.epochs,
        bptt_window=pc.bptt_window,
        l2_lambda=pc.l2_lambda,
        l1_lambda=pc.l1_lambda,
        dropout_rate=pc.dropout_rate,
        seed=cfg.rng_seed,
    )
    try:
        model, _ = train(model, data, tc)
    except TrainingDivergedError:
        return None
    _, val = chronological_split(data)
    return Predictor(
        model, data.input_norms, data.target_norms, mse(model, val), pc.bptt_window, deque(maxlen=pc.online_window)
    )


def _clean_value(cleaner: StreamCleaner, ch: str, t: int, value: float | None, fallback: EnvState) -> float:
    cleaned, _ = cleaner.push(ch, t, value)
    return fallback[ch] if cleaned is None else cleaned


# ---------------------------------------------------------------------------
# run


@dataclass
class RunResult:
    log: RunLog
    store: RecordStore
    alerts: list
    events: list[SwitchEvent]
    decisions: list[tuple[int, ControlDecision]]
    predictor: Predictor | None
    warmup_ticks: int

    def in_band_fraction(self, channel: str = "air_temp") -> float:
        vals = [v for v, w in zip(self.log.column(f"inband.{channel}"), self.log.column("warmup")) if w == "0" and v != ""]
        return sum(v == "1" for v in vals) / len(vals) if vals else float("nan")


def _read_fixture(path: Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for i, row in enumerate(rows):
        for k in row:
            if k != "row" and k not in CHANNELS:
                raise ValueError(f"{path}: unknown column {k!r}")
    return rows


class _Health:
    def __init__(self, cfg: ScenarioConfig, alert_log: AlertLog):
        rc = cfg.reliability
        self.th = HealthThresholds(rc.degraded_after, rc.failed_after)
        self.groups = {g.role: RedundancyGroup(g.role, g.primary, g.backups) for g in rc.groups}
        self.registry = {m: ComponentHealth(m, "actuator") for g in self.groups.values() for m in g.members}
        self.outages = rc.outages
        self.alert_log = alert_log
        self.events: list[SwitchEvent] = []

    def in_outage(self, cid: str, t: int) -> str | None:
        for o in self.outages:
            if o.component == cid and o.start_tick <= t < o.end_tick:
                return o.mode
        return None

    def tick(self, t: int) -> tuple[int, list[str]]:
        for cid, h in self.registry.items():
            mode = self.in_outage(cid, t)
            if mode is None:
                h = h.clear_fault().heartbeat(t)
            elif mode == "fault":
                h = h.report_fault()
            self.registry[cid] = h
        reg, alerts = heartbeat_check(list(self.registry.values()), t, self.th)
        self.registry = {h.component_id: h for h in reg}
        notes = []
        for role, g in self.groups.items():
            g2, ev = failover(g, self.registry, t)
            self.groups[role] = g2
            if isinstance(ev, SwitchEvent):
                self.events.append(ev)
                notes.append(f"{role}: {ev.from_id}->{ev.to_id} ({ev.reason})")
            elif ev is not None:
                alerts.append(ev)
                notes.append(f"{role}: exhausted")
        self.alert_log.extend(alerts)
        return len(alerts), notes

    def route(self, act: str, t: int) -> tuple[bool, str]:
        g = self.groups.get(act)
        if g is None:
            return True, "direct"
        if g.exhausted:
            return False, "none"
        return self.in_outage(g.active_id, t) is None, g.active_id


def run(
    cfg: ScenarioConfig,
    out_dir: str | Path | None = None,
    live_gateway: bool = False,
    port: int | None = None,
) -> RunResult:
    """Run ``cfg`` to completion. With ``out_dir``, the run log, store and
    alert files are written there (the report is separate, see :mod:`greentwin.report`)."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    rb = load_rule_base(cfg.resolve(cfg.fuzzy_rules)) if cfg.fuzzy_rules else default_rule_base()

    replay_rows = None
    if cfg.replay is not None:
        replay_rows = _read_fixture(cfg.resolve(cfg.replay.fixture))
        if len(replay_rows) != cfg.duration_ticks:
            raise SimulationError(0, "cli", ValueError(
                f"replay fixture has {len(replay_rows)} rows, duration_ticks is {cfg.duration_ticks}"
            ))

    try:
        predictor = pretrain_predictor(cfg, rb) if replay_rows is None else None
    except Exception as exc:
        raise SimulationError(0, "predictor", exc) from exc

    now = [0]
    store = RecordStore(out)
    gateway = Gateway(store, OutlierHook(), clock=lambda: now[0])
    server = None
    if live_gateway:
        server = LiveGateway(gateway, port=port).start()
        link = DeviceLink(tcp_connect)
        host, gw_port = "127.0.0.1", server.port
    else:
        link = DeviceLink(loopback_connect(gateway))
        host, gw_port = "127.0.0.1", resolve_port(port)
    device = cfg.replay.device_id if cfg.replay is not None else cfg.telemetry.device_id

    alert_log = AlertLog(out / "alerts.jsonl" if out is not None else None)
    log = RunLog()
    stack = ControlStack(cfg, rb)
    health = _Health(cfg, alert_log)
    sensors = SensorArray(cfg.sensors, cfg.rng_seed)
    cleaner = StreamCleaner()
    state = cfg.initial_state
    warmup = cfg.predictor.bptt_window
    features: deque = deque(maxlen=warmup)
    decisions: list[tuple[int, ControlDecision]] = []
    last_applied = dict.fromkeys(ACTUATORS, 0.0)
    module = "telemetry"
    t = 0
    try:
        link.handshake(host, gw_port)
        for t in range(cfg.duration_ticks):
            now[0] = t
            tick = Tick(t, cfg.seconds_per_tick)

            module = "plant"
            w = weather_profile(cfg.weather_profile, tick, cfg.rng_seed, cfg.weather)
            forecast = weather_forecast(cfg.weather_profile, tick, cfg.mpc.horizon, cfg.rng_seed, cfg.weather)

            module = "sensing"
            if replay_rows is not None:
                row = replay_rows[t]
                texts = {ch: v for ch, v in row.items() if ch != "row"}
                state = state.with_values(**{ch: float(v) for ch, v in texts.items()})
                frames = [SensorFrame(device, t, ch, v) for ch, v in texts.items()]
            else:
                frames = [
                    SensorFrame(device, t, r.channel, repr(r.value))
                    for r in sensors.read(state, t)
                    if r.quality != "failed" and math.isfinite(r.value)
                ]

            module = "telemetry"
            before = len(store.records)
            for f in frames:
                link.send_frame(f)
            if server is not None and not store.wait_for(before + len(frames), timeout=10.0):
                raise TimeoutError("gateway did not store every frame")
            meas: dict[str, float] = {}
            for rec in store.records[before:]:
                meas.setdefault(rec.channel, float(rec.value))

            module = "pipeline"
            clean, flags = {}, {}
            for ch in CHANNELS:
                v, flagged = cleaner.push(ch, t, meas.get(ch))
                # a channel that never reported falls back to the configured initial value
                clean[ch] = cfg.initial_state[ch] if v is None else v
                flags[ch] = flagged

            module = "predictor"
            advanced = predictor is not None and t >= warmup
            trend = conf = pred_now = None
            if advanced:
                window = [predictor.normalize(r) for r in features]
                steps = max(2, cfg.mpc.horizon)
                preds = predict_horizon(
                    predictor.model, window, steps + 1, predictor.input_norms, predictor.target_norms, (0,)
                )
                # preds[0] estimates the current tick, preds[k] tick t + k
                pred_now = float(preds[0][0])
                trend = (float(preds[steps][0]) - pred_now) / steps
                err = (pred_now - clean["air_temp"]) / predictor.scale
                predictor.online.append(err * err)
                conf = predictor.confidence()

            module = "control"
            cmds, decs, why = stack.decide(t, clean, forecast, conf, trend, advanced)
            strategies = {a: "pid" for a in ACTUATORS}
            for d in decs:
                decisions.append((t, d))
                for c in d.commands:
                    strategies[c.actuator] = d.strategy

            module = "reliability"
            n_alerts, notes = health.tick(t)
            applied, active = {}, {}
            for a in ACTUATORS:
                ok, active[a] = health.route(a, t)
                applied[a] = cmds[a] if ok else 0.0
                if not ok:
                    why[a] = f"{why[a]}; actuator unavailable, holding {last_applied[a]!r}"
                else:
                    last_applied[a] = applied[a]

            module = "resources"
            sp = stack.setpoints(t)
            r = cfg.resources
            energy = energy_demand(
                r.energy, state.air_temp - w.outdoor_temp, cfg.plant.gain("lamp") * applied["lamp"], w.wind
            )
            deficit = (sp["soil_moisture"] - clean["soil_moisture"]) if sp["soil_moisture"] is not None else 0.0
            water = irrigation_demand(r.irrigation, deficit, cfg.crop.water_requirement)
            fert = fertilization_rate(r.fertilization, cfg.crop.growth_value, cfg.crop.nutrient_demand)

            module = "plant"
            row_vals = {
                "tick": t,
                "warmup": t < warmup,
                "outdoor.temp": w.outdoor_temp,
                "outdoor.light": w.outdoor_light,
                "outdoor.wind": w.wind,
                "pred.air_temp": pred_now,
                "pred.trend": trend,
                "pred.mse": conf,
                "energy": energy,
                "water": water,
                "fertilizer": fert,
                "alerts": n_alerts,
                "events": "; ".join(notes),
            }
            for ch in CHANNELS:
                row_vals[f"truth.{ch}"] = state[ch]
                row_vals[f"meas.{ch}"] = meas.get(ch)
                row_vals[f"clean.{ch}"] = clean[ch]
                row_vals[f"flag.{ch}"] = flags[ch]
            for ch in CONTROLLED:
                row_vals[f"sp.{ch}"] = sp[ch]
                band = cfg.crop.tolerance_band.get(ch)
                row_vals[f"inband.{ch}"] = None if sp[ch] is None or band is None else abs(state[ch] - sp[ch]) <= band
            for a in ACTUATORS:
                row_vals[f"strategy.{a}"] = strategies[a]
                row_vals[f"cmd.{a}"] = applied[a]
                row_vals[f"active.{a}"] = active[a]
                row_vals[f"why.{a}"] = why[a]
            log.append(row_vals)

            features.append(_feature_row(clean, w, applied))
            if replay_rows is None:
                state = step(state, [ActuatorCommand(a, applied[a], t) for a in ACTUATORS], w, cfg.plant)
    except SimulationError:
        raise
    except Exception as exc:
        raise SimulationError(t, module, exc) from exc
    finally:
        close = getattr(link._send, "close", None)
        if close is not None:
            close()
        if server is not None:
            server.stop()
        store.close()
        alert_log.close()

    if out is not None:
        log.write_csv(out / "runlog.csv")
    return RunResult(log, store, alert_log.alerts, health.events, decisions, predictor, warmup)


__all__ = [
    "CONTROLLED",
    "ControlStack",
    "FEATURES",
    "Predictor",
    "RunLog",
    "RunResult",
    "SimulationError",
    "pretrain_predictor",
    "run",
    "runlog_columns",
    "simulate_history",
]
