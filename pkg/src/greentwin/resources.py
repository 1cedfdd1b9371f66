"""Linear resource models: energy, irrigation water and fertilizer.

Each model is ``max(0, linear form)``. The linear forms can go negative
(indoor colder than outdoor, saturated soil) and a negative demand has no
physical meaning, hence the clamp. Coefficients must be finite and >= 0.

Units: energy per tick, liters per tick, application rate per tick. The
coefficient units follow from the inputs (per °C, per lux, per m/s, per
soil-moisture count, per liter).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .core import ConfigError


def _check_coeffs(obj, prefix: str) -> None:
    for f in fields(obj):
        v = getattr(obj, f.name)
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{prefix}.{f.name.upper()}", f"must be finite, got {v!r}")
        if v < 0:
            raise ConfigError(f"{prefix}.{f.name.upper()}", f"must be >= 0, got {v!r}")
        object.__setattr__(obj, f.name, float(v))


@dataclass(frozen=True)
class EnergyModel:
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0

    def __post_init__(self):
        _check_coeffs(self, "resources")


@dataclass(frozen=True)
class IrrigationModel:
    k4: float = 0.0
    k5: float = 0.0

    def __post_init__(self):
        _check_coeffs(self, "resources")


@dataclass(frozen=True)
class FertilizationModel:
    k6: float = 0.0
    k7: float = 0.0

    def __post_init__(self):
        _check_coeffs(self, "resources")


def _finite(*vals: float) -> None:
    for v in vals:
        if not math.isfinite(v):
            raise ValueError(f"resource model input must be finite, got {v!r}")


def energy_demand(m: EnergyModel, delta_t: float, light: float, wind: float) -> float:
    """``max(0, k1*dT + k2*L + k3*W)`` with dT = indoor - outdoor."""
    _finite(delta_t, light, wind)
    return max(0.0, m.k1 * delta_t + m.k2 * light + m.k3 * wind)


def irrigation_demand(m: IrrigationModel, soil_moisture_deficit: float, crop_water_req: float) -> float:
    """``max(0, k4*dM + k5*C)``; dM = target - current, positive when dry."""
    _finite(soil_moisture_deficit, crop_water_req)
    return max(0.0, m.k4 * soil_moisture_deficit + m.k5 * crop_water_req)


def fertilization_rate(m: FertilizationModel, growth_stage_g: float, soil_nutrient_n: float) -> float:
    """``max(0, k6*G + k7*N)``.

    The rate grows with soil nutrient N, although cutting fertilizer on
    already rich soil would be the usual intent. The sign is kept as given.
    """
    _finite(growth_stage_g, soil_nutrient_n)
    if not 0.0 <= growth_stage_g <= 1.0:
        raise ValueError(f"growth stage must lie in [0, 1], got {growth_stage_g}")
    if soil_nutrient_n < 0:
        raise ValueError(f"soil nutrient must be >= 0, got {soil_nutrient_n}")
    return max(0.0, m.k6 * growth_stage_g + m.k7 * soil_nutrient_n)


@dataclass(frozen=True)
class ResourceModels:
    energy: EnergyModel = EnergyModel()
    irrigation: IrrigationModel = IrrigationModel()
    fertilization: FertilizationModel = FertilizationModel()

    @classmethod
    def from_k(cls, k: dict) -> "ResourceModels":
        """Build from a ``{"K1": .., ..., "K7": ..}`` mapping; missing keys are 0."""
        unknown = set(k) - {f"K{i}" for i in range(1, 8)}
        if unknown:
            raise ConfigError(f"resources.{sorted(unknown)[0]}", "unknown coefficient")
        g = {i: k.get(f"K{i}", 0.0) for i in range(1, 8)}
        return cls(
            EnergyModel(g[1], g[2], g[3]),
            IrrigationModel(g[4], g[5]),
            FertilizationModel(g[6], g[7]),
        )

    def to_k(self) -> dict:
        e, i, f = self.energy, self.irrigation, self.fertilization
        return {"K1": e.k1, "K2": e.k2, "K3": e.k3, "K4": i.k4, "K5": i.k5, "K6": f.k6, "K7": f.k7}


__all__ = [
    "EnergyModel",
    "FertilizationModel",
    "IrrigationModel",
    "ResourceModels",
    "energy_demand",
    "fertilization_rate",
    "irrigation_demand",
]
