import math

import numpy as np
import pytest

from greentwin.core import ConfigError, EnvState
from greentwin.sensing import (
    FaultWindow,
    SensorArray,
    SensorSpec,
    quantize,
    sample,
    sensor_stream,
    sensor_suite,
)

TRUTH = EnvState(air_temp=21.34, soil_moisture=3000.0)


def test_quantize_is_exact_decimal():
    assert quantize(21.34, 0.1) == 21.3
    assert quantize(21.35001, 0.1) == 21.4
    assert quantize(17.03, 0.0625) == 17.0
    assert quantize(2999.96, 0.1) == 3000.0


def test_noise_free_reading_is_quantized_truth():
    spec = SensorSpec("t1", "air_temp", noise_sd=0.0, resolution=0.1)
    r = sample(TRUTH, spec, 0, sensor_stream(0, "t1", 0))
    assert r.value == 21.3 and r.quality == "ok"


def test_substreams_are_independent_of_other_sensors():
    a = SensorSpec("a", "air_temp", noise_sd=0.5)
    b = SensorSpec("b", "air_temp", noise_sd=0.5)
    alone = sensor_suite([a], TRUTH, 7, seed=1)
    both = sensor_suite([b, a], TRUTH, 7, seed=1)
    assert both[0] == alone[0]  # ordered by id, "a" first
    assert [r.sensor_id for r in both] == ["a", "b"]


def test_duplicate_ids_rejected():
    a = SensorSpec("a", "air_temp")
    with pytest.raises(ValueError, match="duplicate"):
        sensor_suite([a, a], TRUTH, 0, seed=0)


def test_stuck_fault():
    spec = SensorSpec("t", "air_temp", 0.2, fault_schedule=[FaultWindow(5, 10, "stuck", 99.0)])
    r = sample(TRUTH, spec, 6, sensor_stream(0, "t", 6))
    assert (r.value, r.quality) == (99.0, "suspect")
    assert sample(TRUTH, spec, 10, sensor_stream(0, "t", 10)).quality == "ok"


def test_spike_fault_offsets_by_multiple_of_sigma():
    spec = SensorSpec("t", "air_temp", 0.2, resolution=0.1, fault_schedule=[FaultWindow(0, 1, "spike", 10.0)])
    r = sample(TRUTH, spec, 0, sensor_stream(0, "t", 0))
    assert r.quality == "suspect"
    assert abs(r.value - TRUTH.air_temp) >= 10 * 0.2 - 0.05


def test_drift_fault_grows_linearly():
    spec = SensorSpec("t", "air_temp", 0.0, resolution=0.1, fault_schedule=[FaultWindow(0, 100, "drift", 0.1)])
    r0 = sample(TRUTH, spec, 0, sensor_stream(0, "t", 0))
    r50 = sample(TRUTH, spec, 50, sensor_stream(0, "t", 50))
    assert r50.value - r0.value == pytest.approx(5.0)


def test_dropout_uses_last_good_or_nan():
    spec = SensorSpec("m", "soil_moisture", 1.0, fault_schedule=[FaultWindow(3, 5, "dropout")])
    r = sample(TRUTH, spec, 3, sensor_stream(0, "m", 3))
    assert r.quality == "failed" and math.isnan(r.value)
    arr = SensorArray([spec], seed=0)
    good = [arr.read(TRUTH, t)[0] for t in range(3)]
    dropped = arr.read(TRUTH, 3)[0]
    assert dropped.quality == "failed" and dropped.value == good[-1].value


def test_noise_statistics():
    spec = SensorSpec("t", "air_temp", noise_sd=0.5, resolution=0.001)
    vals = np.array([sample(TRUTH, spec, t, sensor_stream(9, "t", t)).value for t in range(4000)])
    assert abs(vals.mean() - TRUTH.air_temp) < 0.05
    assert abs(vals.std() - 0.5) < 0.05


def test_spec_validation():
    with pytest.raises(ConfigError, match="noise_sd"):
        SensorSpec("t", "air_temp", noise_sd=-1.0)
    with pytest.raises(ConfigError, match="channel"):
        SensorSpec("t", "nitrogen")
    with pytest.raises(ConfigError, match="kind"):
        FaultWindow(0, 1, "melt")


def test_empty_suite_and_bias_deltas():
    assert sensor_suite([], TRUTH, 0, seed=0) == []
    specs = [SensorSpec(f"t{i}", "air_temp", 0.0, bias=b, resolution=0.1) for i, b in enumerate((0.0, 0.5, -1.2))]
    vals = [r.value for r in sensor_suite(specs, EnvState(air_temp=21.3), 0, seed=0)]
    assert vals[1] - vals[0] == pytest.approx(0.5) and vals[2] - vals[0] == pytest.approx(-1.2)


def test_stuck_at_25():
    spec = SensorSpec("t", "air_temp", 0.2, fault_schedule=[FaultWindow(0, 5, "stuck", 25.0)])
    assert sample(EnvState(air_temp=3.0), spec, 1, sensor_stream(0, "t", 1)).value == 25.0
