"""Mamdani inference with triangular sets and centroid defuzzification.

Antecedent conjunction is ``min``, implication clips the consequent set at
the rule strength (``min``), aggregation is ``max``. The aggregated set is
piecewise linear; its centroid is integrated exactly on a node set made of
a 1001-point uniform grid over the output universe plus every breakpoint of
the aggregate (triangle vertices, clip points and crossings between rule
outputs). Between consecutive nodes the aggregate is linear, so the
trapezoid/moment formulas below are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

GRID_POINTS = 1001


@dataclass(frozen=True)
class Triangle:
    """Triangular set with feet ``a``, ``c`` and peak ``b``.

    ``a == b`` or ``b == c`` gives a shoulder (membership 1 at that end).
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not self.a <= self.b <= self.c:
            raise ValueError(f"triangle vertices must satisfy a <= b <= c, got {(self.a, self.b, self.c)}")
        if self.a == self.c:
            raise ValueError("degenerate triangle with zero width")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, b, c = self.a, self.b, self.c
        out = np.zeros_like(x)
        if b > a:
            rising = (x >= a) & (x <= b)
            out = np.where(rising, (x - a) / (b - a), out)
        if c > b:
            falling = (x >= b) & (x <= c)
            out = np.where(falling, (c - x) / (c - b), out)
        out = np.where(x == b, 1.0, out)
        return out if out.ndim else float(out)

    def clipped_breakpoints(self, alpha: float) -> list[float]:
        a, b, c = self.a, self.b, self.c
        return [a, a + alpha * (b - a), b, c - alpha * (c - b), c]


@dataclass(frozen=True)
class Variable:
    name: str
    universe: tuple[float, float]
    terms: Mapping[str, Triangle]

    def __post_init__(self):
        lo, hi = self.universe
        if not lo < hi:
            raise ValueError(f"{self.name}: universe must satisfy lo < hi")
        if not self.terms:
            raise ValueError(f"{self.name}: no terms")
        for term, t in self.terms.items():
            # a shoulder is a jump; only allowed where the universe ends
            if (t.a == t.b and t.a > lo) or (t.b == t.c and t.c < hi):
                raise ValueError(f"{self.name}.{term}: shoulder inside the universe")
        object.__setattr__(self, "universe", (float(lo), float(hi)))

    def breakpoints(self) -> list[float]:
        lo, hi = self.universe
        pts = {lo, hi}
        for t in self.terms.values():
            pts.update(p for p in (t.a, t.b, t.c) if lo <= p <= hi)
        return sorted(pts)

    def check_coverage(self) -> None:
        # membership is piecewise linear, so zero stretches are detected at
        # breakpoints or at midpoints between consecutive breakpoints
        pts = self.breakpoints()
        probes = pts + [(p + q) / 2.0 for p, q in zip(pts, pts[1:])]
        for x in probes:
            if max(float(t(x)) for t in self.terms.values()) <= 0.0:
                raise ValueError(f"{self.name}: no term covers x={x}")

    def clamp(self, x: float) -> float:
        lo, hi = self.universe
        return min(max(float(x), lo), hi)


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[tuple[str, str], ...]
    consequent: tuple[str, str]


@dataclass(frozen=True)
class FuzzyRuleBase:
    inputs: Mapping[str, Variable]
    outputs: Mapping[str, Variable]
    rules: tuple[Rule, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for var in list(self.inputs.values()) + list(self.outputs.values()):
            var.check_coverage()
        for r in self.rules:
            for name, term in r.antecedent:
                if name not in self.inputs or term not in self.inputs[name].terms:
                    raise ValueError(f"rule references undeclared input term {name}.{term}")
            name, term = r.consequent
            if name not in self.outputs or term not in self.outputs[name].terms:
                raise ValueError(f"rule references undeclared output term {name}.{term}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "FuzzyRuleBase":
        def var(name, spec):
            return Variable(
                name,
                tuple(spec["universe"]),
                {t: Triangle(*v) for t, v in spec["terms"].items()},
            )

        rules = []
        for r in d["rules"]:
            ants = tuple((k, v) for k, v in r["if"].items())
            ((out, term),) = r["then"].items()
            rules.append(Rule(ants, (out, term)))
        return cls(
            inputs={k: var(k, v) for k, v in d["inputs"].items()},
            outputs={k: var(k, v) for k, v in d["outputs"].items()},
            rules=tuple(rules),
        )

    def to_dict(self) -> dict:
        def var(v: Variable):
            return {
                "universe": list(v.universe),
                "terms": {t: [tri.a, tri.b, tri.c] for t, tri in v.terms.items()},
            }

        return {
            "inputs": {k: var(v) for k, v in self.inputs.items()},
            "outputs": {k: var(v) for k, v in self.outputs.items()},
            "rules": [
                {"if": dict(r.antecedent), "then": {r.consequent[0]: r.consequent[1]}} for r in self.rules
            ],
        }


def load_rule_base(path: str | Path) -> FuzzyRuleBase:
    return FuzzyRuleBase.from_dict(json.loads(Path(path).read_text()))


def default_rule_base() -> FuzzyRuleBase:
    """Nine rules over temperature trend x humidity -> irrigation."""
    return load_rule_base(Path(__file__).resolve().parent.parent / "data" / "fuzzy_rules.json")


@dataclass(frozen=True)
class FuzzyResult:
    outputs: Mapping[str, float]
    fired: Mapping[str, bool]
    strengths: tuple[float, ...] = ()


def _crossings(f: Sequence[tuple[float, float]], g: Sequence[tuple[float, float]]) -> list[float]:
    """x positions where two piecewise-linear functions (given by nodes) cross."""
    xs = sorted({x for x, _ in f} | {x for x, _ in g})
    fx = np.interp(xs, [p[0] for p in f], [p[1] for p in f], left=0.0, right=0.0)
    gx = np.interp(xs, [p[0] for p in g], [p[1] for p in g], left=0.0, right=0.0)
    diff = fx - gx
    out = []
    for i in range(len(xs) - 1):
        d0, d1 = diff[i], diff[i + 1]
        if d0 * d1 < 0.0:
            out.append(xs[i] + (xs[i + 1] - xs[i]) * d0 / (d0 - d1))
    return out


def _clipped_nodes(tri: Triangle, alpha: float) -> list[tuple[float, float]]:
    pts = sorted(set(tri.clipped_breakpoints(alpha)))
    return [(x, min(alpha, float(tri(x)))) for x in pts]


def aggregate(var: Variable, clipped: Sequence[tuple[Triangle, float]], xs) -> np.ndarray:
    mu = np.zeros(len(xs))
    for tri, alpha in clipped:
        mu = np.maximum(mu, np.minimum(alpha, tri(xs)))
    return mu


def centroid(var: Variable, clipped: Sequence[tuple[Triangle, float]], grid_points: int = GRID_POINTS) -> float | None:
    """Exact centroid of ``max_r min(alpha_r, set_r)`` over the universe."""
    lo, hi = var.universe
    nodes = set(np.linspace(lo, hi, grid_points).tolist())
    shapes = []
    for tri, alpha in clipped:
        nodes.update(tri.clipped_breakpoints(alpha))
        shapes.append(_clipped_nodes(tri, alpha))
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            nodes.update(_crossings(shapes[i], shapes[j]))
    xs = np.array(sorted(x for x in nodes if lo <= x <= hi))
    mu = aggregate(var, clipped, xs)
    x0, x1 = xs[:-1], xs[1:]
    m0, m1 = mu[:-1], mu[1:]
    h = x1 - x0
    area = float(np.sum(h * (m0 + m1) / 2.0))
    if area <= 0.0:
        return None
    moment = float(np.sum(h * (x0 * (2.0 * m0 + m1) + x1 * (m0 + 2.0 * m1)) / 6.0))
    return moment / area


def fuzzy_eval(rb: FuzzyRuleBase, inputs: Mapping[str, float]) -> FuzzyResult:
    """Crisp outputs for crisp inputs (clamped to each input's universe).

    An output no rule fires for gets its universe midpoint and
    ``fired[name] = False``.
    """
    crisp = {name: var.clamp(inputs[name]) for name, var in rb.inputs.items() if name in inputs}
    clipped: dict[str, list[tuple[Triangle, float]]] = {name: [] for name in rb.outputs}
    strengths = []
    for rule in rb.rules:
        degrees = []
        for name, term in rule.antecedent:
            if name not in crisp:
                raise KeyError(f"missing crisp input {name!r}")
            degrees.append(float(rb.inputs[name].terms[term](crisp[name])))
        alpha = min(degrees) if degrees else 0.0
        strengths.append(alpha)
        if alpha > 0.0:
            out, term = rule.consequent
            clipped[out].append((rb.outputs[out].terms[term], alpha))

    outputs, fired = {}, {}
    for name, var in rb.outputs.items():
        value = centroid(var, clipped[name]) if clipped[name] else None
        if value is None:
            lo, hi = var.universe
            outputs[name], fired[name] = (lo + hi) / 2.0, False
        else:
            outputs[name], fired[name] = value, True
    return FuzzyResult(outputs, fired, tuple(strengths))


def crossover(var: Variable, left: str, right: str) -> float:
    """Point between the peaks of two terms where their memberships are equal."""
    t1, t2 = var.terms[left], var.terms[right]
    xs = np.linspace(t1.b, t2.b, 100001)
    diff = t1(xs) - t2(xs)
    i = int(np.argmax(diff <= 0.0))
    if i == 0:
        return float(xs[0])
    x0, x1, d0, d1 = xs[i - 1], xs[i], diff[i - 1], diff[i]
    return float(x0 + (x1 - x0) * d0 / (d0 - d1))


__all__ = [
    "GRID_POINTS",
    "FuzzyResult",
    "FuzzyRuleBase",
    "Rule",
    "Triangle",
    "Variable",
    "aggregate",
    "centroid",
    "crossover",
    "default_rule_base",
    "fuzzy_eval",
    "load_rule_base",
]
