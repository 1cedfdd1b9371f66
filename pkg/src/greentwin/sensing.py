"""Virtual sensors: bias, Gaussian noise, quantization and scheduled faults.

Fault semantics (``parameter`` in channel units unless noted):

* ``stuck``   - reading is ``parameter`` regardless of truth; quality ``suspect``.
* ``spike``   - the quantized reading is pushed away from truth by
  ``parameter * noise_sd`` rounded up to a whole number of resolution steps
  (``parameter`` is a multiple of the noise level); quality ``suspect``.
* ``drift``   - adds ``parameter * (tick - start_tick)``; quality ``suspect``.
* ``dropout`` - no measurement; quality ``failed`` and the value is the
  last good value (NaN when there is none).

Consumers must key off ``quality`` and never off particular values.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Mapping, Sequence

import numpy as np

from .core import LIMITS, ConfigError, EnvState, Tick, require_finite

FAULT_KINDS = ("stuck", "spike", "dropout", "drift")
QUALITIES = ("ok", "suspect", "failed")


@dataclass(frozen=True)
class FaultWindow:
    """Fault active for ticks in ``[start_tick, end_tick)``."""

    start_tick: int
    end_tick: int
    kind: str
    parameter: float = 0.0

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ConfigError("fault.kind", f"unknown fault kind {self.kind!r}")
        require_finite("fault.parameter", self.parameter)
        if self.end_tick < self.start_tick:
            raise ConfigError("fault.end_tick", "must be >= start_tick")

    def active(self, tick: int) -> bool:
        return self.start_tick <= tick < self.end_tick


@dataclass(frozen=True)
class SensorSpec:
    id: str
    channel: str
    noise_sd: float = 0.0
    bias: float = 0.0
    resolution: float = 0.1
    fault_schedule: Sequence[FaultWindow] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.id or "," in self.id:
            raise ConfigError("sensor.id", f"invalid sensor id {self.id!r}")
        if self.channel not in LIMITS:
            raise ConfigError(f"sensor.{self.id}.channel", f"unknown channel {self.channel!r}")
        require_finite(f"sensor.{self.id}.noise_sd", self.noise_sd)
        require_finite(f"sensor.{self.id}.bias", self.bias)
        require_finite(f"sensor.{self.id}.resolution", self.resolution)
        if self.noise_sd < 0:
            raise ConfigError(f"sensor.{self.id}.noise_sd", "must be >= 0")
        if self.resolution <= 0:
            raise ConfigError(f"sensor.{self.id}.resolution", "must be > 0")
        object.__setattr__(self, "fault_schedule", tuple(self.fault_schedule))

    def active_fault(self, tick: int) -> FaultWindow | None:
        for f in self.fault_schedule:
            if f.active(tick):
                return f
        return None


@dataclass(frozen=True)
class SensorReading:
    sensor_id: str
    tick: int
    channel: str
    value: float
    quality: str = "ok"


def _decimals(resolution: float) -> int:
    exp = Decimal(repr(resolution)).normalize().as_tuple().exponent
    return max(0, -exp)


def quantize(x: float, resolution: float) -> float:
    """Round to the nearest multiple of ``resolution``.

    The result is re-rounded to the resolution's decimal places so that,
    e.g., ``quantize(21.34, 0.1)`` is exactly the float ``21.3``.
    """
    return round(round(x / resolution) * resolution, _decimals(resolution))


def sensor_stream(seed: int, sensor_id: str, tick: int) -> np.random.Generator:
    """Independent RNG substream for one (seed, sensor, tick) draw."""
    return np.random.default_rng([seed & 0xFFFFFFFF, zlib.crc32(sensor_id.encode()), tick])


def sample(
    truth: EnvState,
    spec: SensorSpec,
    tick: Tick | int,
    rng_stream: np.random.Generator,
    last_good: float | None = None,
) -> SensorReading:
    if spec.channel not in LIMITS:
        raise KeyError(f"unknown channel {spec.channel!r}")
    t = tick.index if isinstance(tick, Tick) else int(tick)
    noise = float(rng_stream.normal(0.0, spec.noise_sd)) if spec.noise_sd > 0 else 0.0
    true_value = truth[spec.channel]
    fault = spec.active_fault(t)

    if fault is None:
        return SensorReading(spec.id, t, spec.channel, quantize(true_value + spec.bias + noise, spec.resolution))
    if fault.kind == "stuck":
        return SensorReading(spec.id, t, spec.channel, fault.parameter, "suspect")
    if fault.kind == "dropout":
        sentinel = math.nan if last_good is None else last_good
        return SensorReading(spec.id, t, spec.channel, sentinel, "failed")
    if fault.kind == "drift":
        drifted = true_value + spec.bias + noise + fault.parameter * (t - fault.start_tick)
        return SensorReading(spec.id, t, spec.channel, quantize(drifted, spec.resolution), "suspect")
    # spike
    q = quantize(true_value + spec.bias + noise, spec.resolution)
    steps = math.ceil(abs(fault.parameter) * spec.noise_sd / spec.resolution - 1e-9)
    offset = steps * spec.resolution
    direction = 1.0 if q >= true_value else -1.0
    value = round(q + direction * offset, _decimals(spec.resolution))
    return SensorReading(spec.id, t, spec.channel, value, "suspect")


def sensor_suite(
    specs: Sequence[SensorSpec],
    truth: EnvState,
    tick: Tick | int,
    seed: int,
    last_good: Mapping[str, float] | None = None,
) -> list[SensorReading]:
    """One reading per spec, ordered by sensor id.

    Each sensor draws from its own substream (:func:`sensor_stream`), so
    adding or removing a sensor never changes another sensor's noise.
    """
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate sensor ids: {dupes}")
    t = tick.index if isinstance(tick, Tick) else int(tick)
    last_good = last_good or {}
    return [
        sample(truth, s, t, sensor_stream(seed, s.id, t), last_good.get(s.id))
        for s in sorted(specs, key=lambda s: s.id)
    ]


class SensorArray:
    """Stateful wrapper that remembers each sensor's last good value."""

    def __init__(self, specs: Sequence[SensorSpec], seed: int):
        self.specs = list(specs)
        self.seed = seed
        self.last_good: dict[str, float] = {}

    def read(self, truth: EnvState, tick: Tick | int) -> list[SensorReading]:
        readings = sensor_suite(self.specs, truth, tick, self.seed, self.last_good)
        for r in readings:
            if r.quality != "failed":
                self.last_good[r.sensor_id] = r.value
        return readings


# Device-family presets for the sensors named in the hardware design.
PRESETS: dict[str, dict[str, float]] = {
    "ds18b20": {"noise_sd": 0.1, "resolution": 0.0625},
    "dht22_temp": {"noise_sd": 0.2, "resolution": 0.1},
    "dht22_humidity": {"noise_sd": 0.8, "resolution": 0.1},
    "photoresistor": {"noise_sd": 200.0, "resolution": 10.0},
}


__all__ = [
    "FAULT_KINDS",
    "QUALITIES",
    "PRESETS",
    "FaultWindow",
    "SensorSpec",
    "SensorReading",
    "SensorArray",
    "quantize",
    "sample",
    "sensor_stream",
    "sensor_suite",
]
