import math

import pytest

from greentwin.core import ConfigError
from greentwin.resources import (
    EnergyModel,
    FertilizationModel,
    IrrigationModel,
    ResourceModels,
    energy_demand,
    fertilization_rate,
    irrigation_demand,
)


def test_energy_examples():
    assert energy_demand(EnergyModel(1, 1, 1), 2.0, 3.0, 4.0) == 9.0
    assert energy_demand(EnergyModel(), 50.0, 1e5, 20.0) == 0.0
    assert energy_demand(EnergyModel(1, 0, 0), -5.0, 0.0, 0.0) == 0.0


def test_irrigation_examples():
    assert irrigation_demand(IrrigationModel(), 500.0, 2.0) == 0.0
    assert irrigation_demand(IrrigationModel(0.001, 1.0), 500.0, 2.0) == 2.5
    assert irrigation_demand(IrrigationModel(0.001, 1.0), -3000.0, 0.1) == 0.0


def test_fertilization_examples():
    assert fertilization_rate(FertilizationModel(), 0.5, 10.0) == 0.0
    assert fertilization_rate(FertilizationModel(2.0, 0.0), 0.5, 3.0) == 1.0
    with pytest.raises(ValueError):
        fertilization_rate(FertilizationModel(1, 1), 1.5, 0.0)
    with pytest.raises(ValueError):
        fertilization_rate(FertilizationModel(1, 1), 0.5, -1.0)


def test_coefficients_must_be_non_negative_and_finite():
    with pytest.raises(ConfigError, match="K1"):
        EnergyModel(-1.0, 0, 0)
    with pytest.raises(ConfigError, match="K5"):
        IrrigationModel(0.0, math.nan)
    with pytest.raises(ValueError):
        energy_demand(EnergyModel(1, 1, 1), math.inf, 0, 0)


def test_k_mapping_round_trip():
    k = {"K1": 0.05, "K2": 1e-5, "K3": 0.02, "K4": 0.002, "K5": 1.0, "K6": 0.5, "K7": 0.1}
    assert ResourceModels.from_k(k).to_k() == k
    assert ResourceModels.from_k({}).to_k() == dict.fromkeys(k, 0.0)
    with pytest.raises(ConfigError, match="K8"):
        ResourceModels.from_k({"K8": 1.0})
