"""Shared fixtures-as-functions for the test suites."""

from __future__ import annotations

import numpy as np

from greentwin.plant import LinearModel
from greentwin.predictor import RnnModel, WindowedDataset


def random_model(rng: np.random.Generator, hidden: int, inputs: int, outputs: int, scale: float = 0.6) -> RnnModel:
    return RnnModel(
        W=rng.normal(0, scale, (hidden, hidden)),
        U=rng.normal(0, scale, (hidden, inputs)),
        V=rng.normal(0, scale, (outputs, hidden)),
        b_h=rng.normal(0, scale, hidden),
        b_y=rng.normal(0, scale, outputs),
    )


def random_batch(rng: np.random.Generator, batch: int, window: int, inputs: int, outputs: int) -> WindowedDataset:
    return WindowedDataset(X=rng.normal(size=(batch, window, inputs)), Y=rng.normal(size=(batch, window, outputs)))


def random_linear_instance(rng: np.random.Generator, max_nodes: int = 10**5):
    """A random plant with ``|candidates| ** horizon <= max_nodes``."""
    while True:
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 3))
        levels = sorted(set(np.round(rng.uniform(0, 1, int(rng.integers(2, 5))), 2).tolist()) | {0.0})
        horizon = int(rng.integers(1, 7))
        if (len(levels) ** m) ** horizon <= max_nodes:
            break
    A = rng.uniform(-0.6, 1.0, (n, n))
    B = rng.uniform(-2.0, 2.0, (n, m))
    d = rng.uniform(-1.0, 1.0, (horizon, n))
    x0 = rng.uniform(-5, 5, n)
    setpoint = rng.uniform(-5, 5, n)
    wtrack = rng.uniform(0, 2, n)
    w_effort = float(rng.uniform(0, 0.5))
    states = tuple(f"x{i}" for i in range(n))
    inputs = tuple(f"u{j}" for j in range(m))
    model = LinearModel(A.tolist(), B.tolist(), d.tolist(), states, inputs)
    return model, x0, setpoint, wtrack, levels, horizon, w_effort


def sine_track(ticks: int = 500, period: float = 96.0, seed: int = 0) -> np.ndarray:
    """Synthetic daily temperature track: 20 degC +- 5 with 0.1 degC sensor noise."""
    t = np.arange(ticks)
    rng = np.random.default_rng(seed)
    return 20.0 + 5.0 * np.sin(2 * np.pi * t / period) + rng.normal(0.0, 0.1, ticks)


def random_variable_spec(rng: np.random.Generator, lo: float, hi: float) -> dict:
    """Triangular partition of ``[lo, hi]`` with jittered peaks and feet."""
    k = int(rng.integers(2, 6))
    inner = np.sort(rng.uniform(lo, hi, k - 2)).tolist()
    peaks = [lo] + inner + [hi]
    terms = {}
    for i, b in enumerate(peaks):
        a = lo if i == 0 else max(lo, peaks[i - 1] - rng.uniform(0, 0.3) * (hi - lo))
        c = hi if i == k - 1 else min(hi, peaks[i + 1] + rng.uniform(0, 0.3) * (hi - lo))
        terms[f"t{i}"] = [a, b, c]
    return {"universe": [lo, hi], "terms": terms}


def random_rule_base_dict(rng: np.random.Generator) -> dict:
    inputs = {}
    for name in ("p", "q"):
        lo = float(rng.uniform(-50, 50))
        inputs[name] = random_variable_spec(rng, lo, lo + float(rng.uniform(0.5, 100)))
    lo = float(rng.uniform(-5, 5))
    outputs = {"y": random_variable_spec(rng, lo, lo + float(rng.uniform(0.1, 10)))}
    rules = []
    for _ in range(int(rng.integers(1, 9))):
        names = ["p", "q"] if rng.random() < 0.7 else [str(rng.choice(["p", "q"]))]
        ants = {n: str(rng.choice(list(inputs[n]["terms"]))) for n in names}
        rules.append({"if": ants, "then": {"y": str(rng.choice(list(outputs["y"]["terms"])))}})
    return {"inputs": inputs, "outputs": outputs, "rules": rules}


def random_crisp(rng: np.random.Generator, rb: dict) -> dict:
    out = {}
    for name, spec in rb["inputs"].items():
        lo, hi = spec["universe"]
        pad = 0.05 * (hi - lo)
        out[name] = float(rng.uniform(lo - pad, hi + pad))
    return out


def oracle_rules(rb: dict) -> list:
    return [(list(r["if"].items()), next(iter(r["then"].items()))) for r in rb["rules"]]


def random_alive_schedule(rng: np.random.Generator, members: int, ticks: int) -> np.ndarray:
    """``alive[t, i]`` with random outage intervals and at least one member alive each tick."""
    alive = np.ones((ticks, members), dtype=bool)
    for i in range(members):
        for _ in range(int(rng.integers(0, 6))):
            start = int(rng.integers(0, ticks))
            alive[start : start + int(rng.integers(1, 30)), i] = False
    for t in range(ticks):
        if not alive[t].any():
            alive[t, int(rng.integers(0, members))] = True
    return alive


def failover_trial(alive: np.ndarray):
    """Drive one redundancy group through ``alive`` with fault reports.

    Returns ``(gap_ticks, max_latency, alerts, transitions, switches)`` where
    ``gap_ticks`` counts ticks whose active member is down after failover,
    ``max_latency`` is the longest run of such ticks, and ``transitions``
    counts status changes implied by the schedule alone.
    """
    from greentwin.reliability import ComponentHealth, RedundancyGroup, failover, heartbeat_check

    ticks, members = alive.shape
    ids = [f"m{i}" for i in range(members)]
    registry = [ComponentHealth(c) for c in ids]
    group = RedundancyGroup("heater", ids[0], tuple(ids[1:]))
    gap = run = max_latency = alerts = switches = 0
    for t in range(ticks):
        registry = [
            h.clear_fault().heartbeat(t) if alive[t, i] else h.report_fault() for i, h in enumerate(registry)
        ]
        registry, new = heartbeat_check(registry, t)
        alerts += len(new)
        group, ev = failover(group, registry, t)
        if ev is not None and hasattr(ev, "to_id"):
            switches += 1
        if not alive[t, ids.index(group.active_id)]:
            gap += 1
            run += 1
            max_latency = max(max_latency, run)
        else:
            run = 0
    prev = np.vstack([np.ones((1, members), dtype=bool), alive[:-1]])
    transitions = int(np.sum(prev != alive))
    return gap, max_latency, alerts, transitions, switches


AT_JUNK = b"AT+GMR\r\n"


def enumerate_at_paths(alphabet, depth: int):
    """Every command sequence of length <= ``depth`` from Idle that ends in Transparent.

    Transitions are taken from the real ``at_handle`` and cached by
    ``(state, command)``; session fields other than the state never affect
    which command is accepted.
    """
    from greentwin.telemetry.at import AtSession, at_handle

    cache: dict = {}

    def nxt(state, cmd):
        key = (state, cmd)
        if key not in cache:
            _, s = at_handle(AtSession(state), cmd)
            cache[key] = s.state
        return cache[key]

    found, visited = [], 0
    stack = [("Idle", ())]
    while stack:
        state, path = stack.pop()
        if state == "Transparent":
            found.append(path)
            continue
        if len(path) == depth:
            continue
        for i, cmd in enumerate(alphabet):
            visited += 1
            stack.append((nxt(state, cmd), path + (i,)))
    return found, visited
