"""Discrete-time greenhouse surrogate: first-order linear mixing per channel.

One call to :func:`step` advances the ground truth by one tick. With
``u_*`` the actuator magnitudes in [0, 1], ``g_*`` the matching entries of
``actuator_gains`` and ``w`` the weather sample::

    air_temp'      = T + (g_heater*u_heater - g_ventilator*u_ventilator
                          - envelope_loss_coeff*(T - w.outdoor_temp)
                          + solar_gain*w.outdoor_light/1000) / thermal_inertia
    air_humidity'  = H - humidity_decay*(H - ambient_humidity)
                       + irrigation_humidity_gain*u_irrigator
                       - vent_humidity_gain*u_ventilator
    soil_temp'     = S + (T - S) / soil_thermal_inertia
    soil_moisture' = M - soil_drying_rate*(M - soil_moisture_floor)
                       + g_irrigator*u_irrigator
    co2'           = C - (co2_infiltration + vent_co2_exchange*u_ventilator)*(C - outdoor_co2)
                       - co2_consumption_rate*light/1000
    light'         = light_transmittance*w.outdoor_light + g_lamp*u_lamp
    wind'          = wind_coupling*w.wind + vent_airflow*u_ventilator
    air_pressure'  = w.pressure
    soil_ph'       = P + ph_buffer*(ph_baseline - P) - g_fertilizer_doser*u_fertilizer_doser

Every result is clamped to the limits in :mod:`greentwin.core` rather than
rejected, so a misbehaving controller cannot crash a long run.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import LIMITS, ConfigError, EnvState, Tick, clamp, require_finite

ACTUATORS: tuple[str, ...] = ("heater", "ventilator", "irrigator", "fertilizer_doser", "lamp")

DEFAULT_GAINS = {
    "heater": 12.0,
    "ventilator": 8.0,
    "irrigator": 40.0,
    "fertilizer_doser": 0.01,
    "lamp": 15000.0,
}


@dataclass(frozen=True)
class PlantParams:
    thermal_inertia: float = 20.0
    envelope_loss_coeff: float = 0.6
    humidity_decay: float = 0.02
    actuator_gains: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_GAINS))
    co2_consumption_rate: float = 0.5
    solar_gain: float = 0.04
    ambient_humidity: float = 65.0
    irrigation_humidity_gain: float = 0.5
    vent_humidity_gain: float = 0.8
    soil_thermal_inertia: float = 60.0
    soil_drying_rate: float = 0.002
    soil_moisture_floor: float = 2400.0
    outdoor_co2: float = 420.0
    co2_infiltration: float = 0.01
    vent_co2_exchange: float = 0.2
    light_transmittance: float = 0.7
    wind_coupling: float = 0.1
    vent_airflow: float = 1.5
    ph_baseline: float = 7.0
    ph_buffer: float = 0.001

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if name == "actuator_gains":
                continue
            require_finite(f"plant.{name}", value)
            if value < 0:
                raise ConfigError(f"plant.{name}", "must be >= 0")
        if self.thermal_inertia < 1:
            raise ConfigError("plant.thermal_inertia", "must be >= 1")
        if self.soil_thermal_inertia < 1:
            raise ConfigError("plant.soil_thermal_inertia", "must be >= 1")
        for name, value in self.actuator_gains.items():
            if name not in ACTUATORS:
                raise ConfigError(f"plant.actuator_gains.{name}", "unknown actuator")
            require_finite(f"plant.actuator_gains.{name}", value)
            if value < 0:
                raise ConfigError(f"plant.actuator_gains.{name}", "must be >= 0")

    def gain(self, actuator: str) -> float:
        return self.actuator_gains.get(actuator, 0.0)


@dataclass(frozen=True)
class WeatherSample:
    outdoor_temp: float
    outdoor_light: float
    wind: float
    pressure: float

    def __post_init__(self):
        for name in ("outdoor_temp", "outdoor_light", "wind", "pressure"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"weather {name} is not finite")
        if self.wind < 0:
            raise ValueError("weather wind must be >= 0")


@dataclass(frozen=True)
class ActuatorCommand:
    actuator: str
    magnitude: float
    tick: int = 0

    def __post_init__(self):
        if self.actuator not in ACTUATORS:
            raise ValueError(f"unknown actuator {self.actuator!r}")
        m = float(self.magnitude)
        if math.isnan(m):
            m = 0.0
        object.__setattr__(self, "magnitude", clamp(m, 0.0, 1.0))


def command_levels(commands: Iterable[ActuatorCommand]) -> dict[str, float]:
    """Collapse a command set to one magnitude per actuator (max wins)."""
    u = dict.fromkeys(ACTUATORS, 0.0)
    for c in commands:
        if c.magnitude > u[c.actuator]:
            u[c.actuator] = c.magnitude
    return u


def step(
    state: EnvState,
    commands: Iterable[ActuatorCommand],
    weather: WeatherSample,
    params: PlantParams,
) -> EnvState:
    """Advance the plant by one tick. Pure and deterministic."""
    u = command_levels(commands)
    p = params
    T, H, M, C = state.air_temp, state.air_humidity, state.soil_moisture, state.co2

    heat = p.gain("heater") * u["heater"] - p.gain("ventilator") * u["ventilator"]
    loss = p.envelope_loss_coeff * (T - weather.outdoor_temp)
    solar = p.solar_gain * weather.outdoor_light / 1000.0
    air_temp = T + (heat - loss + solar) / p.thermal_inertia

    air_humidity = (
        H
        - p.humidity_decay * (H - p.ambient_humidity)
        + p.irrigation_humidity_gain * u["irrigator"]
        - p.vent_humidity_gain * u["ventilator"]
    )
    soil_temp = state.soil_temp + (T - state.soil_temp) / p.soil_thermal_inertia
    soil_moisture = (
        M - p.soil_drying_rate * (M - p.soil_moisture_floor) + p.gain("irrigator") * u["irrigator"]
    )
    exchange = p.co2_infiltration + p.vent_co2_exchange * u["ventilator"]
    co2 = C - exchange * (C - p.outdoor_co2) - p.co2_consumption_rate * state.light / 1000.0
    light = p.light_transmittance * weather.outdoor_light + p.gain("lamp") * u["lamp"]
    wind = p.wind_coupling * weather.wind + p.vent_airflow * u["ventilator"]
    soil_ph = (
        state.soil_ph
        + p.ph_buffer * (p.ph_baseline - state.soil_ph)
        - p.gain("fertilizer_doser") * u["fertilizer_doser"]
    )
    return EnvState.clamped(
        air_temp=air_temp,
        air_humidity=air_humidity,
        soil_temp=soil_temp,
        soil_moisture=soil_moisture,
        co2=co2,
        light=light,
        wind=wind,
        air_pressure=weather.pressure,
        soil_ph=soil_ph,
    )


# ---------------------------------------------------------------------------
# weather


WEATHER_PROFILES = ("constant", "diurnal", "heatwave")


@dataclass(frozen=True)
class WeatherParams:
    """Shape of the exogenous weather. Hours are local solar time."""

    mean_temp: float = 16.0
    temp_amplitude: float = 6.0
    peak_hour: float = 14.0
    peak_light: float = 60000.0
    constant_light: float = 20000.0
    wind_mean: float = 2.5
    wind_amplitude: float = 1.0
    pressure: float = 1013.25
    heatwave_offset: float = 8.0
    heatwave_start_tick: int = 1440
    heatwave_end_tick: int = 2880

    def __post_init__(self):
        for name, value in self.__dict__.items():
            require_finite(f"weather.{name}", value)
        if self.wind_amplitude > self.wind_mean:
            raise ConfigError("weather.wind_amplitude", "must not exceed wind_mean (wind >= 0)")
        if self.peak_light < 0 or self.constant_light < 0:
            raise ConfigError("weather.peak_light", "light must be >= 0")
        if self.heatwave_end_tick < self.heatwave_start_tick:
            raise ConfigError("weather.heatwave_end_tick", "must be >= heatwave_start_tick")


def _seed_phase(seed: int) -> float:
    return random.Random(seed).uniform(0.0, 2.0 * math.pi)


def weather_profile(
    profile: str, tick: Tick, seed: int, params: WeatherParams = WeatherParams()
) -> WeatherSample:
    """Deterministic outdoor weather for ``(profile, tick, seed)``.

    ``diurnal`` repeats exactly every 24 h of ticks; the seed only shifts the
    phase of the wind oscillation. ``heatwave`` is ``diurnal`` plus
    ``heatwave_offset`` degC for ticks in ``[heatwave_start_tick, heatwave_end_tick)``.
    """
    if profile not in WEATHER_PROFILES:
        raise ValueError(f"unknown weather profile {profile!r}; expected one of {WEATHER_PROFILES}")
    p = params
    if profile == "constant":
        return WeatherSample(p.mean_temp, p.constant_light, p.wind_mean, p.pressure)

    # reduce to time-of-day first so that t and t + 24h give identical floats
    day_fraction = math.fmod(tick.index * tick.seconds_per_tick, 86400.0) / 86400.0
    angle = 2.0 * math.pi * day_fraction
    temp = p.mean_temp + p.temp_amplitude * math.cos(angle - 2.0 * math.pi * p.peak_hour / 24.0)
    light = p.peak_light * max(0.0, -math.cos(angle))
    wind = p.wind_mean + p.wind_amplitude * math.sin(angle + _seed_phase(seed))
    if profile == "heatwave" and p.heatwave_start_tick <= tick.index < p.heatwave_end_tick:
        temp += p.heatwave_offset
    return WeatherSample(temp, light, max(0.0, wind), p.pressure)


def weather_forecast(
    profile: str, start: Tick, steps: int, seed: int, params: WeatherParams = WeatherParams()
) -> list[WeatherSample]:
    """Samples for ticks ``start, start+1, ..., start+steps-1``."""
    return [
        weather_profile(profile, Tick(start.index + k, start.seconds_per_tick), seed, params)
        for k in range(steps)
    ]


# ---------------------------------------------------------------------------
# linear model of the thermal channel, used by the MPC planner


@dataclass(frozen=True)
class LinearModel:
    """``x[k+1] = A x[k] + B u[k] + d[k]`` over ``states`` and ``inputs``."""

    A: Sequence[Sequence[float]]
    B: Sequence[Sequence[float]]
    d: Sequence[Sequence[float]]
    states: tuple[str, ...]
    inputs: tuple[str, ...]


def thermal_model(params: PlantParams, forecast: Sequence[WeatherSample]) -> LinearModel:
    """Air-temperature dynamics of :func:`step` as a linear model.

    Exact up to floating-point association and the physical clamps.
    """
    tau = params.thermal_inertia
    a = 1.0 - params.envelope_loss_coeff / tau
    b = [params.gain("heater") / tau, -params.gain("ventilator") / tau]
    d = [
        [(params.envelope_loss_coeff * w.outdoor_temp + params.solar_gain * w.outdoor_light / 1000.0) / tau]
        for w in forecast
    ]
    return LinearModel(A=[[a]], B=[b], d=d, states=("air_temp",), inputs=("heater", "ventilator"))


__all__ = [
    "ACTUATORS",
    "LIMITS",
    "PlantParams",
    "WeatherSample",
    "WeatherParams",
    "ActuatorCommand",
    "LinearModel",
    "WEATHER_PROFILES",
    "command_levels",
    "step",
    "weather_profile",
    "weather_forecast",
    "thermal_model",
]
