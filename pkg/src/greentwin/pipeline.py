"""Outlier detection, repair and normalization for per-channel series.

Conventions used everywhere in this module:

* standard deviation is the population form (divide by n);
* z-score deviations are compared in absolute value, default threshold 3.0;
* quartiles interpolate linearly between order statistics at zero-based
  positions ``0.25*(n-1)`` and ``0.75*(n-1)``;
* boxplot fences are ``Q1 - 1.5*IQR`` and ``Q3 + 1.5*IQR``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_Z_THRESHOLD = 3.0
IQR_FACTOR = 1.5
REPAIR_POLICIES = ("interpolate", "hold_last", "drop")


class DegenerateStatisticsError(ValueError):
    """Normalization parameters cannot be fitted on a constant window."""


@dataclass(frozen=True)
class SeriesWindow:
    channel: str
    values: tuple[float, ...]
    ticks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "ticks", tuple(int(t) for t in self.ticks))
        if len(self.values) != len(self.ticks):
            raise ValueError("values and ticks must have equal length")
        if any(b <= a for a, b in zip(self.ticks, self.ticks[1:])):
            raise ValueError("ticks must be strictly increasing")

    @classmethod
    def of(cls, values: Sequence[float], channel: str = "x", start: int = 0) -> "SeriesWindow":
        return cls(channel, tuple(values), tuple(range(start, start + len(values))))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class OutlierFlags:
    flags: tuple[bool, ...]
    method: str
    threshold_used: float

    def __len__(self) -> int:
        return len(self.flags)

    @property
    def indices(self) -> list[int]:
        return [i for i, f in enumerate(self.flags) if f]


@dataclass(frozen=True)
class NormParams:
    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind == "minmax":
            if not self.b > self.a:
                raise ValueError("minmax NormParams need b > a")
        elif self.kind == "zscore":
            if not self.b > 0:
                raise ValueError("zscore NormParams need b > 0")
        else:
            raise ValueError(f"unknown normalization kind {self.kind!r}")


def population_stats(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    return mean, float(np.sqrt(np.mean((arr - mean) ** 2)))


def detect_outliers_zscore(w: SeriesWindow, threshold: float = DEFAULT_Z_THRESHOLD) -> OutlierFlags:
    if len(w) < 2:
        raise ValueError("z-score detection needs at least 2 points")
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    arr = np.asarray(w.values)
    mean, sd = population_stats(arr)
    if sd == 0.0:
        return OutlierFlags((False,) * len(w), "zscore", threshold)
    flags = np.abs((arr - mean) / sd) > threshold
    return OutlierFlags(tuple(bool(f) for f in flags), "zscore", threshold)


def quartiles(values: Sequence[float]) -> tuple[float, float]:
    s = sorted(values)
    n = len(s)

    def at(q: float) -> float:
        pos = q * (n - 1)
        lo = math.floor(pos)
        hi = min(lo + 1, n - 1)
        frac = pos - lo
        return s[lo] + (s[hi] - s[lo]) * frac

    return at(0.25), at(0.75)


def detect_outliers_iqr(w: SeriesWindow) -> OutlierFlags:
    if len(w) < 4:
        raise ValueError("IQR detection needs at least 4 points")
    q1, q3 = quartiles(w.values)
    iqr = q3 - q1
    upper = q3 + IQR_FACTOR * iqr
    lower = q1 - IQR_FACTOR * iqr
    return OutlierFlags(tuple(v > upper or v < lower for v in w.values), "iqr", IQR_FACTOR)


def repair(w: SeriesWindow, flags: OutlierFlags, policy: str = "interpolate") -> SeriesWindow:
    """Replace or remove flagged points.

    ``interpolate`` draws a straight line (in tick space) between the nearest
    unflagged neighbours; runs touching either end copy the nearest
    unflagged value. ``hold_last`` repeats the previous unflagged value
    (leading runs take the first unflagged value). ``drop`` removes the points.
    """
    if policy not in REPAIR_POLICIES:
        raise ValueError(f"unknown repair policy {policy!r}")
    if len(flags) != len(w):
        raise ValueError("flags are not aligned with the window")
    good = [i for i, f in enumerate(flags.flags) if not f]
    if not good:
        raise ValueError("every point is flagged; nothing to anchor the repair")
    if len(good) == len(w):
        return w
    if policy == "drop":
        return SeriesWindow(w.channel, tuple(w.values[i] for i in good), tuple(w.ticks[i] for i in good))

    values = list(w.values)
    if policy == "hold_last":
        last = w.values[good[0]]
        for i, flagged in enumerate(flags.flags):
            if flagged:
                values[i] = last
            else:
                last = values[i]
        return SeriesWindow(w.channel, tuple(values), w.ticks)

    prev = None
    for i, flagged in enumerate(flags.flags):
        if not flagged:
            prev = i
            continue
        nxt = next((j for j in good if j > i), None)
        if prev is None:
            values[i] = w.values[nxt]
        elif nxt is None:
            values[i] = w.values[prev]
        else:
            t0, t1 = w.ticks[prev], w.ticks[nxt]
            frac = (w.ticks[i] - t0) / (t1 - t0)
            values[i] = w.values[prev] + (w.values[nxt] - w.values[prev]) * frac
    return SeriesWindow(w.channel, tuple(values), w.ticks)


def fit_norm(w: SeriesWindow | Sequence[float], kind: str) -> NormParams:
    values = w.values if isinstance(w, SeriesWindow) else tuple(w)
    if len(values) < 2:
        raise ValueError("need at least 2 points to fit normalization")
    if kind == "minmax":
        lo, hi = min(values), max(values)
        if not hi > lo:
            raise DegenerateStatisticsError("constant window: max == min")
        return NormParams("minmax", lo, hi)
    if kind == "zscore":
        mean, sd = population_stats(values)
        if not sd > 0:
            raise DegenerateStatisticsError("constant window: standard deviation is 0")
        return NormParams("zscore", mean, sd)
    raise ValueError(f"unknown normalization kind {kind!r}")


def apply_norm(x, p: NormParams):
    """Normalize ``x`` (scalar or array). Out-of-range inputs are not clamped."""
    if p.kind == "minmax":
        return (x - p.a) / (p.b - p.a)
    return (x - p.a) / p.b


def invert_norm(y, p: NormParams):
    if p.kind == "minmax":
        return y * (p.b - p.a) + p.a
    return y * p.b + p.a


class StreamCleaner:
    """Rolling per-channel cleaner used on the live data path.

    Each new value is tested against the trailing window with the z-score
    detector; a flagged value is replaced by the last accepted value. The
    window keeps accepted (cleaned) values only. After ``max_hold``
    consecutive flags the value is accepted anyway: a persistent jump is a
    real change in the environment, not a glitch.
    """

    def __init__(
        self,
        window: int = 30,
        threshold: float = DEFAULT_Z_THRESHOLD,
        min_points: int = 8,
        max_hold: int = 3,
    ):
        self.window = window
        self.threshold = threshold
        self.min_points = min_points
        self.max_hold = max_hold
        self._hist: dict[str, deque] = {}
        self._held: dict[str, int] = {}

    def history(self, channel: str) -> list[float]:
        return list(self._hist.get(channel, ()))

    def is_outlier(self, channel: str, value: float) -> bool:
        hist = self._hist.get(channel)
        if hist is None or len(hist) < self.min_points:
            return False
        w = SeriesWindow.of(list(hist) + [value], channel)
        return detect_outliers_zscore(w, self.threshold).flags[-1]

    def push(self, channel: str, tick: int, value: float | None) -> tuple[float | None, bool]:
        """Returns ``(cleaned value, flagged)``; ``value=None`` means missing."""
        hist = self._hist.setdefault(channel, deque(maxlen=self.window))
        if value is None or not math.isfinite(value):
            return (hist[-1] if hist else None), False
        if self.is_outlier(channel, value):
            held = self._held.get(channel, 0) + 1
            if held <= self.max_hold:
                self._held[channel] = held
                return hist[-1], True
        self._held[channel] = 0
        hist.append(value)
        return value, False


__all__ = [
    "DEFAULT_Z_THRESHOLD",
    "IQR_FACTOR",
    "REPAIR_POLICIES",
    "DegenerateStatisticsError",
    "SeriesWindow",
    "OutlierFlags",
    "NormParams",
    "StreamCleaner",
    "apply_norm",
    "invert_norm",
    "detect_outliers_iqr",
    "detect_outliers_zscore",
    "fit_norm",
    "population_stats",
    "quartiles",
    "repair",
]
