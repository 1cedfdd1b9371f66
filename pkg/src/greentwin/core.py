"""Shared domain types: the simulation clock, the environment vector and crop profiles.

Units are fixed per field and never converted:

============== ======================= ==================
field          unit                    physical clamp
============== ======================= ==================
air_temp       degC                    [-40, 60]
air_humidity   %RH                     [0, 100]
soil_temp      degC                    [-20, 60]
soil_moisture  raw ADC counts          [0, 4095]
co2            ppm                     [0, 5000]
light          lux                     [0, 200000]
wind           m/s                     [0, 60]
air_pressure   hPa                     [800, 1100]
soil_ph        pH                      [0, 14]
============== ======================= ==================

Soil moisture is kept on the raw count scale (~3000 in the measured tables),
not converted to a percentage.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping


class ConfigError(ValueError):
    """A scenario or component configuration failed validation.

    The message always starts with the dotted path of the offending field.
    """

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


CHANNELS: tuple[str, ...] = (
    "air_temp",
    "air_humidity",
    "soil_temp",
    "soil_moisture",
    "co2",
    "light",
    "wind",
    "air_pressure",
    "soil_ph",
)

LIMITS: dict[str, tuple[float, float]] = {
    "air_temp": (-40.0, 60.0),
    "air_humidity": (0.0, 100.0),
    "soil_temp": (-20.0, 60.0),
    "soil_moisture": (0.0, 4095.0),
    "co2": (0.0, 5000.0),
    "light": (0.0, 200000.0),
    "wind": (0.0, 60.0),
    "air_pressure": (800.0, 1100.0),
    "soil_ph": (0.0, 14.0),
}


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def require_finite(path: str, value: float) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ConfigError(path, f"must be a finite number, got {value!r}")


@dataclass(frozen=True)
class Tick:
    """Logical simulation time. ``index`` advances by one per plant step."""

    index: int
    seconds_per_tick: float = 60.0

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"tick index must be >= 0, got {self.index}")
        if not self.seconds_per_tick > 0:
            raise ValueError(f"seconds_per_tick must be > 0, got {self.seconds_per_tick}")

    @property
    def seconds(self) -> float:
        return self.index * self.seconds_per_tick

    @property
    def ticks_per_day(self) -> float:
        return 86400.0 / self.seconds_per_tick

    def next(self) -> "Tick":
        return Tick(self.index + 1, self.seconds_per_tick)


@dataclass(frozen=True)
class EnvState:
    """Ground-truth greenhouse environment at one tick."""

    air_temp: float = 20.0
    air_humidity: float = 60.0
    soil_temp: float = 18.0
    soil_moisture: float = 3000.0
    co2: float = 420.0
    light: float = 0.0
    wind: float = 0.0
    air_pressure: float = 1013.25
    soil_ph: float = 6.5

    def __post_init__(self):
        for name in CHANNELS:
            v = getattr(self, name)
            require_finite(name, v)
            lo, hi = LIMITS[name]
            if not lo <= v <= hi:
                raise ConfigError(name, f"{v} outside [{lo}, {hi}]")

    def __getitem__(self, channel: str) -> float:
        if channel not in LIMITS:
            raise KeyError(f"unknown channel {channel!r}")
        return getattr(self, channel)

    @classmethod
    def clamped(cls, **values: float) -> "EnvState":
        """Build a state, clamping every field to its physical limits."""
        out = {}
        for name, v in values.items():
            lo, hi = LIMITS[name]
            out[name] = clamp(float(v), lo, hi)
        return cls(**out)

    def with_values(self, **values: float) -> "EnvState":
        return replace(self, **values)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in CHANNELS}


GROWTH_STAGES: dict[str, float] = {"seedling": 0.2, "vegetative": 0.5, "fruiting": 0.9}


@dataclass(frozen=True)
class CropProfile:
    """Per-crop setpoints and demand figures.

    ``target`` and ``tolerance_band`` map channel names to values in the
    channel's own units; every targeted channel needs a positive band.
    ``growth_stage`` is one of :data:`GROWTH_STAGES` unless ``stage_values``
    overrides the stage-to-G mapping.
    """

    name: str
    target: Mapping[str, float]
    tolerance_band: Mapping[str, float] = field(default_factory=dict)
    growth_stage: str = "vegetative"
    stage_values: Mapping[str, float] = field(default_factory=lambda: dict(GROWTH_STAGES))
    water_requirement: float = 1.0
    nutrient_demand: float = 1.0

    def __post_init__(self):
        if not self.name:
            raise ConfigError("crop.name", "must be non-empty")
        for ch, v in self.target.items():
            if ch not in LIMITS:
                raise ConfigError(f"crop.target.{ch}", "unknown channel")
            require_finite(f"crop.target.{ch}", v)
        for ch in self.target:
            band = self.tolerance_band.get(ch)
            if band is None:
                raise ConfigError(f"crop.tolerance_band.{ch}", "missing band for targeted channel")
        for ch, band in self.tolerance_band.items():
            require_finite(f"crop.tolerance_band.{ch}", band)
            if band <= 0:
                raise ConfigError(f"crop.tolerance_band.{ch}", "must be > 0")
        if self.growth_stage not in self.stage_values:
            raise ConfigError("crop.growth_stage", f"unknown stage {self.growth_stage!r}")
        for stage, g in self.stage_values.items():
            require_finite(f"crop.stage_values.{stage}", g)
            if not 0.0 <= g <= 1.0:
                raise ConfigError(f"crop.stage_values.{stage}", "must lie in [0, 1]")
        require_finite("crop.water_requirement", self.water_requirement)
        require_finite("crop.nutrient_demand", self.nutrient_demand)
        if self.water_requirement < 0:
            raise ConfigError("crop.water_requirement", "must be >= 0")
        if self.nutrient_demand < 0:
            raise ConfigError("crop.nutrient_demand", "must be >= 0")

    @property
    def growth_value(self) -> float:
        """Growth stage G in [0, 1]."""
        return self.stage_values[self.growth_stage]

    def in_band(self, channel: str, value: float) -> bool:
        return abs(value - self.target[channel]) <= self.tolerance_band[channel]


def dataclass_to_dict(obj) -> dict:
    """JSON-ready dict of a (nested) dataclass; tuples become lists."""
    def conv(v):
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [conv(x) for x in v]
        return v
    return conv(asdict(obj))


__all__ = [
    "CHANNELS",
    "LIMITS",
    "GROWTH_STAGES",
    "ConfigError",
    "Tick",
    "EnvState",
    "CropProfile",
    "clamp",
    "dataclass_to_dict",
]
