"""Scenario files: JSON in, fully validated :class:`ScenarioConfig` out.

Required keys: ``duration_ticks``, ``rng_seed`` and ``crop`` with ``name``
and ``target``. Everything else has a default. Unknown keys are rejected at
every level, and errors name the dotted path of the offending field (for
example ``controllers.air_temp.Kp``). The full schema is in
``docs/scenario_schema.md``.

``dump_scenario(load_scenario(f))`` loads back to an equal config.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .control.mpc import MpcConfig
from .control.supervisor import SupervisorConfig
from .core import CHANNELS, GROWTH_STAGES, LIMITS, ConfigError, CropProfile, EnvState, require_finite
from .plant import ACTUATORS, DEFAULT_GAINS, WEATHER_PROFILES, PlantParams, WeatherParams
from .resources import ResourceModels
from .sensing import FaultWindow, SensorSpec

DATA_DIR = Path(__file__).resolve().parent / "data"
PID_CHANNELS = ("air_temp", "soil_moisture", "light", "soil_ph")


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    output_limits: tuple[float, float] = (0.0, 1.0)
    integral_limits: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        for key, v in (("Kp", self.kp), ("Ki", self.ki), ("Kd", self.kd)):
            require_finite(key, v)


DEFAULT_PID: dict[str, PidGains] = {
    # output in [-1, 1]: positive drives the heater, negative the ventilator
    "air_temp": PidGains(0.5, 0.0005, 0.0, (-1.0, 1.0), (-2000.0, 2000.0)),
    "soil_moisture": PidGains(0.01, 1e-5, 0.0, (0.0, 1.0), (-1e5, 1e5)),
    # the lamp acts on light within one tick, so integral action alone suffices
    "light": PidGains(0.0, 5e-7, 0.0, (0.0, 1.0), (0.0, 2e6)),
    # reverse acting: dosing lowers pH
    "soil_ph": PidGains(1.0, 1e-4, 0.0, (0.0, 1.0), (-1e4, 1e4)),
}


@dataclass(frozen=True)
class PredictorConfig:
    enabled: bool = True
    hidden_size: int = 8
    history_ticks: int = 720
    epochs: int = 400
    learning_rate: float = 0.3
    bptt_window: int = 24
    stride: int = 2
    l2_lambda: float = 0.0
    l1_lambda: float = 0.0
    dropout_rate: float = 0.0
    excitation: float = 1.0
    excitation_hold: int = 30
    online_window: int = 60


@dataclass(frozen=True)
class Outage:
    component: str
    start_tick: int
    end_tick: int
    mode: str = "fault"  # "fault": explicit report; "silent": heartbeats stop


@dataclass(frozen=True)
class GroupSpec:
    role: str
    primary: str
    backups: tuple[str, ...] = ()


def default_groups() -> tuple[GroupSpec, ...]:
    return tuple(GroupSpec(a, f"{a}_a", (f"{a}_b",)) for a in ACTUATORS)


@dataclass(frozen=True)
class ReliabilityConfig:
    degraded_after: int = 3
    failed_after: int = 5
    groups: tuple[GroupSpec, ...] = field(default_factory=default_groups)
    outages: tuple[Outage, ...] = ()


@dataclass(frozen=True)
class TelemetryConfig:
    device_id: str = "gh01"


@dataclass(frozen=True)
class ReplayConfig:
    fixture: str
    device_id: str = "gh01"


def default_sensors() -> tuple[SensorSpec, ...]:
    return (
        SensorSpec("air_temp_1", "air_temp", 0.2, 0.0, 0.1),
        SensorSpec("air_humidity_1", "air_humidity", 0.8, 0.0, 0.1),
        SensorSpec("soil_temp_1", "soil_temp", 0.1, 0.0, 0.0625),
        SensorSpec("soil_moisture_1", "soil_moisture", 1.0, 0.0, 0.1),
        SensorSpec("co2_1", "co2", 2.0, 0.0, 1.0),
        SensorSpec("light_1", "light", 200.0, 0.0, 10.0),
        SensorSpec("wind_1", "wind", 0.05, 0.0, 0.1),
        SensorSpec("air_pressure_1", "air_pressure", 0.1, 0.0, 0.1),
        SensorSpec("soil_ph_1", "soil_ph", 0.01, 0.0, 0.01),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    duration_ticks: int
    rng_seed: int
    crop: CropProfile
    name: str = "scenario"
    seconds_per_tick: float = 60.0
    initial_state: EnvState = field(default_factory=EnvState)
    plant: PlantParams = field(default_factory=PlantParams)
    weather_profile: str = "diurnal"
    weather: WeatherParams = field(default_factory=WeatherParams)
    sensors: tuple[SensorSpec, ...] = field(default_factory=default_sensors)
    controllers: Mapping[str, PidGains] = field(default_factory=lambda: dict(DEFAULT_PID))
    mpc: MpcConfig = field(default_factory=MpcConfig)
    supervisor: SupervisorConfig = field(default_factory=SupervisorConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    resources: ResourceModels = field(default_factory=ResourceModels)
    reliability: ReliabilityConfig = field(default_factory=ReliabilityConfig)
    telemetry: TelemetryConfig = field(default_factory=TelemetryConfig)
    photoperiod_hours: tuple[float, float] = (6.0, 22.0)
    fuzzy_rules: str | None = None
    replay: ReplayConfig | None = None
    # directory relative paths are resolved against; not serialized
    base_dir: str = field(default=".", compare=False)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if p.is_absolute():
            return p
        local = Path(self.base_dir) / p
        return local if local.exists() else DATA_DIR / p


# ---------------------------------------------------------------------------
# parsing


def _obj(d: Any, path: str, allowed: set[str], required: set[str] = frozenset()) -> Mapping:
    if not isinstance(d, Mapping):
        raise ConfigError(path or "<root>", f"expected an object, got {type(d).__name__}")
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}" if path else k, "unknown key")
    for k in sorted(required):
        if k not in d:
            raise ConfigError(f"{path}.{k}" if path else k, "required key missing")
    return d


def _num(v: Any, path: str) -> float:
    require_finite(path, v)
    return float(v)


def _int(v: Any, path: str, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise ConfigError(path, f"must be an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {v}")
    return v


def _pair(v: Any, path: str, allow_inf: bool = False) -> tuple[float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(path, "expected a [lo, hi] pair")
    out = []
    for i, x in enumerate(v):
        if allow_inf and isinstance(x, (int, float)) and not isinstance(x, bool) and math.isinf(x):
            out.append(float(x))
        else:
            out.append(_num(x, f"{path}[{i}]"))
    if not out[0] < out[1]:
        raise ConfigError(path, "must satisfy lo < hi")
    return out[0], out[1]


def _channel_map(d: Any, path: str) -> dict[str, float]:
    _obj(d, path, set(CHANNELS))
    return {k: _num(v, f"{path}.{k}") for k, v in d.items()}


def _flat(cls, d: Any, path: str, converters: Mapping[str, Any] | None = None):
    """Build a flat dataclass whose JSON keys equal its field names."""
    converters = converters or {}
    names = {f.name for f in fields(cls)}
    _obj(d, path, names)
    kwargs = {}
    defaults = cls()
    for k, v in d.items():
        p = f"{path}.{k}"
        if k in converters:
            kwargs[k] = converters[k](v, p)
        else:
            ref = getattr(defaults, k)
            if isinstance(ref, bool):
                if not isinstance(v, bool):
                    raise ConfigError(p, "must be true or false")
                kwargs[k] = v
            elif isinstance(ref, int):
                kwargs[k] = _int(v, p)
            elif isinstance(ref, float):
                kwargs[k] = _num(v, p)
            else:
                kwargs[k] = v
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def _crop(d: Any) -> CropProfile:
    allowed = {"name", "target", "tolerance_band", "growth_stage", "stage_values", "water_requirement", "nutrient_demand"}
    _obj(d, "crop", allowed, {"name", "target"})
    target = _channel_map(d["target"], "crop.target")
    band = _channel_map(d.get("tolerance_band", {}), "crop.tolerance_band")
    for ch in target:
        # a band defaults to 5% of the channel's physical span
        lo, hi = LIMITS[ch]
        band.setdefault(ch, 0.05 * (hi - lo))
    kwargs = dict(name=str(d["name"]), target=target, tolerance_band=band)
    if "growth_stage" in d:
        kwargs["growth_stage"] = d["growth_stage"]
    if "stage_values" in d:
        _obj(d["stage_values"], "crop.stage_values", set(d["stage_values"]))
        kwargs["stage_values"] = {k: _num(v, f"crop.stage_values.{k}") for k, v in d["stage_values"].items()}
    for k in ("water_requirement", "nutrient_demand"):
        if k in d:
            kwargs[k] = _num(d[k], f"crop.{k}")
    return CropProfile(**kwargs)


def _plant(d: Any) -> PlantParams:
    def gains(v, p):
        _obj(v, p, set(ACTUATORS))
        g = dict(DEFAULT_GAINS)
        g.update({k: _num(x, f"{p}.{k}") for k, x in v.items()})
        return g

    return _flat(PlantParams, d, "plant", {"actuator_gains": gains})


def _sensors(d: Any) -> tuple[SensorSpec, ...]:
    if not isinstance(d, list):
        raise ConfigError("sensors", "expected a list")
    out = []
    for i, s in enumerate(d):
        p = f"sensors[{i}]"
        _obj(s, p, {"id", "channel", "noise_sd", "bias", "resolution", "faults"}, {"id", "channel"})
        faults = []
        for j, f in enumerate(s.get("faults", [])):
            fp = f"{p}.faults[{j}]"
            _obj(f, fp, {"start_tick", "end_tick", "kind", "parameter"}, {"start_tick", "end_tick", "kind"})
            faults.append(
                FaultWindow(
                    _int(f["start_tick"], f"{fp}.start_tick", 0),
                    _int(f["end_tick"], f"{fp}.end_tick", 0),
                    f["kind"],
                    _num(f.get("parameter", 0.0), f"{fp}.parameter"),
                )
            )
        out.append(
            SensorSpec(
                s["id"],
                s["channel"],
                _num(s.get("noise_sd", 0.0), f"{p}.noise_sd"),
                _num(s.get("bias", 0.0), f"{p}.bias"),
                _num(s.get("resolution", 0.1), f"{p}.resolution"),
                tuple(faults),
            )
        )
    ids = [s.id for s in out]
    if len(set(ids)) != len(ids):
        raise ConfigError("sensors", "duplicate sensor ids")
    return tuple(out)


def _controllers(d: Any) -> dict[str, PidGains]:
    _obj(d, "controllers", set(PID_CHANNELS))
    out = dict(DEFAULT_PID)
    for ch, g in d.items():
        p = f"controllers.{ch}"
        _obj(g, p, {"Kp", "Ki", "Kd", "output_limits", "integral_limits"})
        base = DEFAULT_PID[ch]
        out[ch] = PidGains(
            _num(g.get("Kp", base.kp), f"{p}.Kp"),
            _num(g.get("Ki", base.ki), f"{p}.Ki"),
            _num(g.get("Kd", base.kd), f"{p}.Kd"),
            _pair(g["output_limits"], f"{p}.output_limits") if "output_limits" in g else base.output_limits,
            _pair(g["integral_limits"], f"{p}.integral_limits", True) if "integral_limits" in g else base.integral_limits,
        )
    return out


def _mpc(d: Any) -> MpcConfig:
    def levels(v, p):
        if not isinstance(v, list) or not v:
            raise ConfigError(p, "expected a non-empty list")
        return tuple(_num(x, f"{p}[{i}]") for i, x in enumerate(v))

    def exclusive(v, p):
        if not isinstance(v, list) or any(not isinstance(x, list) or len(x) != 2 for x in v):
            raise ConfigError(p, "expected a list of actuator pairs")
        return tuple(tuple(x) for x in v)

    return _flat(MpcConfig, d, "mpc", {"candidate_levels": levels, "exclusive": exclusive})


def _resources(d: Any) -> ResourceModels:
    _obj(d, "resources", {f"K{i}" for i in range(1, 8)})
    return ResourceModels.from_k({k: _num(v, f"resources.{k}") for k, v in d.items()})


def _reliability(d: Any) -> ReliabilityConfig:
    _obj(d, "reliability", {"degraded_after", "failed_after", "groups", "outages"})
    kwargs: dict[str, Any] = {}
    for k in ("degraded_after", "failed_after"):
        if k in d:
            kwargs[k] = _int(d[k], f"reliability.{k}", 0)
    if "groups" in d:
        groups = []
        for i, g in enumerate(d["groups"]):
            p = f"reliability.groups[{i}]"
            _obj(g, p, {"role", "primary", "backups"}, {"role", "primary"})
            if g["role"] not in ACTUATORS:
                raise ConfigError(f"{p}.role", f"unknown actuator {g['role']!r}")
            groups.append(GroupSpec(g["role"], g["primary"], tuple(g.get("backups", ()))))
        kwargs["groups"] = tuple(groups)
    if "outages" in d:
        outs = []
        for i, o in enumerate(d["outages"]):
            p = f"reliability.outages[{i}]"
            _obj(o, p, {"component", "start_tick", "end_tick", "mode"}, {"component", "start_tick", "end_tick"})
            mode = o.get("mode", "fault")
            if mode not in ("fault", "silent"):
                raise ConfigError(f"{p}.mode", f"unknown outage mode {mode!r}")
            outs.append(
                Outage(o["component"], _int(o["start_tick"], f"{p}.start_tick", 0), _int(o["end_tick"], f"{p}.end_tick", 0), mode)
            )
        kwargs["outages"] = tuple(outs)
    cfg = ReliabilityConfig(**kwargs)
    if not cfg.degraded_after < cfg.failed_after:
        raise ConfigError("reliability.failed_after", "must exceed degraded_after")
    members = [m for g in cfg.groups for m in (g.primary,) + g.backups]
    if len(set(members)) != len(members):
        raise ConfigError("reliability.groups", "a component may belong to one group only")
    for i, o in enumerate(cfg.outages):
        if o.component not in members:
            raise ConfigError(f"reliability.outages[{i}].component", f"unknown component {o.component!r}")
    return cfg


TOP_KEYS = {
    "name", "duration_ticks", "rng_seed", "seconds_per_tick", "crop", "initial_state", "plant",
    "weather_profile", "weather", "sensors", "controllers", "mpc", "supervisor", "predictor",
    "resources", "reliability", "telemetry", "photoperiod_hours", "fuzzy_rules", "replay",
}


def scenario_from_dict(d: Any, base_dir: str | Path = ".") -> ScenarioConfig:
    _obj(d, "", TOP_KEYS, {"duration_ticks", "rng_seed", "crop"})
    kw: dict[str, Any] = {
        "duration_ticks": _int(d["duration_ticks"], "duration_ticks", 1),
        "rng_seed": _int(d["rng_seed"], "rng_seed", 0),
        "crop": _crop(d["crop"]),
        "base_dir": str(base_dir),
    }
    if "name" in d:
        kw["name"] = str(d["name"])
    if "seconds_per_tick" in d:
        kw["seconds_per_tick"] = _num(d["seconds_per_tick"], "seconds_per_tick")
        if kw["seconds_per_tick"] <= 0:
            raise ConfigError("seconds_per_tick", "must be > 0")
    if "initial_state" in d:
        try:
            kw["initial_state"] = EnvState(**_channel_map(d["initial_state"], "initial_state"))
        except ConfigError as exc:
            raise ConfigError(f"initial_state.{exc.field_path}", str(exc)) from None
    if "plant" in d:
        kw["plant"] = _plant(d["plant"])
    if "weather_profile" in d:
        if d["weather_profile"] not in WEATHER_PROFILES:
            raise ConfigError("weather_profile", f"expected one of {WEATHER_PROFILES}")
        kw["weather_profile"] = d["weather_profile"]
    if "weather" in d:
        kw["weather"] = _flat(WeatherParams, d["weather"], "weather")
    if "sensors" in d:
        kw["sensors"] = _sensors(d["sensors"])
    if "controllers" in d:
        kw["controllers"] = _controllers(d["controllers"])
    if "mpc" in d:
        kw["mpc"] = _mpc(d["mpc"])
    if "supervisor" in d:
        kw["supervisor"] = _flat(SupervisorConfig, d["supervisor"], "supervisor")
    if "predictor" in d:
        kw["predictor"] = _flat(PredictorConfig, d["predictor"], "predictor")
    if "resources" in d:
        kw["resources"] = _resources(d["resources"])
    if "reliability" in d:
        kw["reliability"] = _reliability(d["reliability"])
    if "telemetry" in d:
        kw["telemetry"] = _flat(TelemetryConfig, d["telemetry"], "telemetry")
    if "photoperiod_hours" in d:
        kw["photoperiod_hours"] = _pair(d["photoperiod_hours"], "photoperiod_hours")
    if d.get("fuzzy_rules") is not None:
        kw["fuzzy_rules"] = str(d["fuzzy_rules"])
    if d.get("replay") is not None:
        r = _obj(d["replay"], "replay", {"fixture", "device_id"}, {"fixture"})
        kw["replay"] = ReplayConfig(str(r["fixture"]), str(r.get("device_id", "gh01")))
    return ScenarioConfig(**kw)


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path}: not valid JSON ({exc})") from None
    return scenario_from_dict(d, path.parent)


# ---------------------------------------------------------------------------
# serialization


def _fields_dict(obj) -> dict:
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else dict(v) if isinstance(v, Mapping) else v
    return out


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    def pid(g: PidGains) -> dict:
        return {
            "Kp": g.kp,
            "Ki": g.ki,
            "Kd": g.kd,
            "output_limits": list(g.output_limits),
            "integral_limits": list(g.integral_limits),
        }

    c = cfg.crop
    mpc = _fields_dict(cfg.mpc)
    mpc["exclusive"] = [list(p) for p in cfg.mpc.exclusive]
    rel = cfg.reliability
    out = {
        "name": cfg.name,
        "duration_ticks": cfg.duration_ticks,
        "rng_seed": cfg.rng_seed,
        "seconds_per_tick": cfg.seconds_per_tick,
        "crop": {
            "name": c.name,
            "target": dict(c.target),
            "tolerance_band": dict(c.tolerance_band),
            "growth_stage": c.growth_stage,
            "stage_values": dict(c.stage_values),
            "water_requirement": c.water_requirement,
            "nutrient_demand": c.nutrient_demand,
        },
        "initial_state": cfg.initial_state.as_dict(),
        "plant": _fields_dict(cfg.plant),
        "weather_profile": cfg.weather_profile,
        "weather": _fields_dict(cfg.weather),
        "sensors": [
            {
                "id": s.id,
                "channel": s.channel,
                "noise_sd": s.noise_sd,
                "bias": s.bias,
                "resolution": s.resolution,
                "faults": [
                    {"start_tick": f.start_tick, "end_tick": f.end_tick, "kind": f.kind, "parameter": f.parameter}
                    for f in s.fault_schedule
                ],
            }
            for s in cfg.sensors
        ],
        "controllers": {ch: pid(g) for ch, g in cfg.controllers.items()},
        "mpc": mpc,
        "supervisor": _fields_dict(cfg.supervisor),
        "predictor": _fields_dict(cfg.predictor),
        "resources": cfg.resources.to_k(),
        "reliability": {
            "degraded_after": rel.degraded_after,
            "failed_after": rel.failed_after,
            "groups": [{"role": g.role, "primary": g.primary, "backups": list(g.backups)} for g in rel.groups],
            "outages": [
                {"component": o.component, "start_tick": o.start_tick, "end_tick": o.end_tick, "mode": o.mode}
                for o in rel.outages
            ],
        },
        "telemetry": _fields_dict(cfg.telemetry),
        "photoperiod_hours": list(cfg.photoperiod_hours),
        "fuzzy_rules": cfg.fuzzy_rules,
        "replay": None if cfg.replay is None else {"fixture": cfg.replay.fixture, "device_id": cfg.replay.device_id},
    }
    return out


def dump_scenario(cfg: ScenarioConfig, path: str | Path | None = None) -> str:
    """JSON text of ``cfg`` (infinite integral limits are written as ``Infinity``)."""
    text = json.dumps(scenario_to_dict(cfg), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def builtin_scenario(name: str) -> Path:
    return DATA_DIR / "scenarios" / f"{name}.json"


__all__ = [
    "DEFAULT_PID",
    "GROWTH_STAGES",
    "GroupSpec",
    "Outage",
    "PID_CHANNELS",
    "PidGains",
    "PredictorConfig",
    "ReliabilityConfig",
    "ReplayConfig",
    "ScenarioConfig",
    "TelemetryConfig",
    "builtin_scenario",
    "default_groups",
    "default_sensors",
    "dump_scenario",
    "load_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
]
