from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..core import clamp


@dataclass(frozen=True)
class PidState:
    """Gains, limits and memory of one PID loop.

    ``integral`` accumulates error*seconds. ``prev_error`` is ``None`` until
    the first step, which makes the first derivative term zero.
    """

    kp: float
    ki: float = 0.0
    kd: float = 0.0
    output_limits: tuple[float, float] = (-math.inf, math.inf)
    integral_limits: tuple[float, float] = (-math.inf, math.inf)
    integral: float = 0.0
    prev_error: float | None = None
    reverse: bool = False

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        for name in ("output_limits", "integral_limits"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy lo < hi, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        lo, hi = self.integral_limits
        if not lo <= self.integral <= hi:
            raise ValueError("integral starts outside integral_limits")

    def reset(self) -> "PidState":
        return replace(self, integral=0.0, prev_error=None)


def pid_step(s: PidState, setpoint: float, measured: float, dt: float) -> tuple[float, PidState]:
    """One update of ``kp*e + ki*integral(e dt) + kd*de/dt``.

    Anti-windup is conditional integration: when the unclamped output is
    saturated and the error would push it further out, the integral keeps
    its previous value. ``reverse=True`` flips the error sign for
    actuators that lower the controlled quantity.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    e = (measured - setpoint) if s.reverse else (setpoint - measured)
    lo, hi = s.output_limits
    ilo, ihi = s.integral_limits
    derivative = 0.0 if s.prev_error is None else (e - s.prev_error) / dt

    integral = clamp(s.integral + e * dt, ilo, ihi)
    raw = s.kp * e + s.ki * integral + s.kd * derivative
    if (raw > hi and e > 0) or (raw < lo and e < 0):
        integral = s.integral
        raw = s.kp * e + s.ki * integral + s.kd * derivative
    return clamp(raw, lo, hi), replace(s, integral=integral, prev_error=e)
