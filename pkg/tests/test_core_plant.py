import math

import pytest

from greentwin.core import CHANNELS, LIMITS, ConfigError, CropProfile, EnvState, Tick
from greentwin.plant import (
    ACTUATORS,
    ActuatorCommand,
    PlantParams,
    WeatherParams,
    WeatherSample,
    command_levels,
    step,
    thermal_model,
    weather_forecast,
    weather_profile,
)

CALM = WeatherSample(outdoor_temp=20.0, outdoor_light=0.0, wind=0.0, pressure=1013.25)


def test_tick_clock():
    t = Tick(10, 60.0)
    assert t.seconds == 600.0
    assert t.ticks_per_day == 1440.0
    assert t.next().index == 11
    with pytest.raises(ValueError):
        Tick(-1)


def test_envstate_rejects_out_of_range_and_nan():
    with pytest.raises(ConfigError, match="air_temp"):
        EnvState(air_temp=99.0)
    with pytest.raises(ConfigError, match="co2"):
        EnvState(co2=math.nan)


def test_envstate_clamped_and_indexing():
    s = EnvState.clamped(air_temp=1e6, soil_moisture=-5.0)
    assert s.air_temp == LIMITS["air_temp"][1]
    assert s.soil_moisture == 0.0
    assert set(s.as_dict()) == set(CHANNELS)
    with pytest.raises(KeyError):
        s["nope"]


def test_crop_profile_validation():
    crop = CropProfile("tomato", {"air_temp": 22.0}, {"air_temp": 2.0}, growth_stage="fruiting")
    assert crop.growth_value == 0.9
    assert crop.in_band("air_temp", 24.0) and not crop.in_band("air_temp", 24.01)
    with pytest.raises(ConfigError, match="tolerance_band.air_temp"):
        CropProfile("x", {"air_temp": 22.0}, {})
    with pytest.raises(ConfigError, match="growth_stage"):
        CropProfile("x", {}, {}, growth_stage="flowering")


def test_actuator_command_clamps():
    assert ActuatorCommand("heater", 3.0).magnitude == 1.0
    assert ActuatorCommand("heater", -1.0).magnitude == 0.0
    assert ActuatorCommand("heater", math.nan).magnitude == 0.0
    with pytest.raises(ValueError):
        ActuatorCommand("sprinkler", 0.5)


def test_command_levels_max_wins():
    u = command_levels([ActuatorCommand("lamp", 0.2), ActuatorCommand("lamp", 0.7)])
    assert u["lamp"] == 0.7 and u["heater"] == 0.0
    assert set(u) == set(ACTUATORS)


def test_equilibrium_without_commands():
    p = PlantParams()
    s = EnvState(air_temp=20.0, soil_temp=20.0, air_humidity=p.ambient_humidity, co2=p.outdoor_co2,
                 soil_moisture=p.soil_moisture_floor, soil_ph=p.ph_baseline)
    nxt = step(s, [], CALM, p)
    assert nxt.air_temp == s.air_temp
    assert nxt.air_humidity == s.air_humidity
    assert nxt.co2 == s.co2
    assert nxt.soil_moisture == s.soil_moisture


def test_heater_warms_ventilator_cools():
    p = PlantParams()
    s = EnvState(air_temp=20.0)
    hot = step(s, [ActuatorCommand("heater", 1.0)], CALM, p)
    cold = step(s, [ActuatorCommand("ventilator", 1.0)], CALM, p)
    assert hot.air_temp == pytest.approx(20.0 + 12.0 / 20.0)
    assert cold.air_temp < 20.0 < hot.air_temp


def test_step_is_pure_and_clamps():
    p = PlantParams()
    s = EnvState(air_temp=59.9)
    a = step(s, [ActuatorCommand("heater", 1.0)], CALM, p)
    b = step(s, [ActuatorCommand("heater", 1.0)], CALM, p)
    assert a == b
    assert a.air_temp <= 60.0


def test_thermal_model_matches_step():
    p = PlantParams()
    w = [WeatherSample(12.0, 30000.0, 2.0, 1010.0)]
    m = thermal_model(p, w)
    s = EnvState(air_temp=18.0)
    u = (0.5, 0.0)
    lin = m.A[0][0] * 18.0 + m.B[0][0] * u[0] + m.B[0][1] * u[1] + m.d[0][0]
    assert lin == pytest.approx(step(s, [ActuatorCommand("heater", 0.5)], w[0], p).air_temp, abs=1e-12)


def test_weather_deterministic_and_profiles():
    wp = WeatherParams()
    a = [weather_profile("diurnal", Tick(t), 3, wp) for t in range(100)]
    b = [weather_profile("diurnal", Tick(t), 3, wp) for t in range(100)]
    assert a == b
    day = int(Tick(0).ticks_per_day)
    assert weather_profile("diurnal", Tick(5 + day), 3, wp).outdoor_temp == pytest.approx(a[5].outdoor_temp)
    const = {weather_profile("constant", Tick(t), 3, wp) for t in range(5)}
    assert len(const) == 1
    fc = weather_forecast("diurnal", Tick(90), 6, 3, wp)
    assert fc[0] == a[90] and len(fc) == 6
    with pytest.raises(ValueError):
        weather_profile("monsoon", Tick(0), 3, wp)


def test_plant_params_reject_negative():
    with pytest.raises(ConfigError, match="plant.humidity_decay"):
        PlantParams(humidity_decay=-1.0)


def test_insulated_heater_closed_form():
    p = PlantParams(envelope_loss_coeff=0.0)
    s = EnvState(air_temp=10.0)
    for _ in range(7):
        s = step(s, [ActuatorCommand("heater", 1.0)], CALM, p)
    assert s.air_temp == pytest.approx(10.0 + 7 * p.gain("heater") / p.thermal_inertia, abs=1e-12)


def test_ventilation_lowers_co2_above_ambient():
    p = PlantParams()
    s = EnvState(co2=900.0)
    assert step(s, [ActuatorCommand("ventilator", 1.0)], CALM, p).co2 < 900.0


def test_heatwave_offset():
    wp = WeatherParams()
    t = Tick((wp.heatwave_start_tick + wp.heatwave_end_tick) // 2)
    hot = weather_profile("heatwave", t, 0, wp).outdoor_temp
    normal = weather_profile("diurnal", t, 0, wp).outdoor_temp
    assert hot - normal == pytest.approx(wp.heatwave_offset)
