"""Independent reference implementations used as test oracles.

None of these import the code under test beyond plain data types; they are
deliberately naive (loops, brute force, fine grids).
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# --- outlier detection ------------------------------------------------------


def zscore_flags(values, threshold):
    n = len(values)
    mean = math.fsum(values) / n
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)
    if sd == 0.0:
        return [False] * n
    return [abs(v - mean) / sd > threshold for v in values]


def iqr_flags(values, factor=1.5):
    q1, q3 = np.percentile(values, [25, 75], method="linear")
    iqr = q3 - q1
    return [v > q3 + factor * iqr or v < q1 - factor * iqr for v in values]


# --- MPC ----------------------------------------------------------------------


def step_linear(A, B, d_k, x, u):
    n = len(x)
    out = []
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc = acc + A[i][j] * x[j]
        bu = 0.0
        for j in range(len(u)):
            bu = bu + B[i][j] * u[j]
        out.append((acc + bu) + d_k[i])
    return out


def _stage_cost(x, setpoint, wtrack, u, w_effort):
    track = 0.0
    for i in range(len(x)):
        e = x[i] - setpoint[i]
        track = track + wtrack[i] * e * e
    e2 = 0.0
    for v in u:
        e2 = e2 + v * v
    return track + w_effort * e2


def exhaustive_mpc(A, B, d, x0, setpoint, wtrack, cands, w_effort, horizon):
    """Visit every sequence (no pruning); first strict minimum in lexicographic order.

    Prefixes are shared between sequences, which changes nothing about the
    per-sequence arithmetic: costs accumulate stage by stage in order.
    """
    best = [math.inf, None]

    def visit(k, x, cost, seq):
        if k == horizon:
            if cost < best[0]:
                best[0], best[1] = cost, list(seq)
            return
        for c, u in enumerate(cands):
            xn = step_linear(A, B, d[k], x, u)
            seq.append(c)
            visit(k + 1, xn, cost + _stage_cost(xn, setpoint, wtrack, u, w_effort), seq)
            seq.pop()

    visit(0, list(x0), 0.0, [])
    return best[1], best[0]


def exhaustive_mpc_flat(A, B, d, x0, setpoint, wtrack, cands, w_effort, horizon):
    """Slow reference: roll every sequence from scratch with itertools.product."""
    best, best_seq = math.inf, None
    for seq in itertools.product(range(len(cands)), repeat=horizon):
        x = list(x0)
        cost = 0.0
        for k, c in enumerate(seq):
            x = step_linear(A, B, d[k], x, cands[c])
            cost = cost + _stage_cost(x, setpoint, wtrack, cands[c], w_effort)
        if cost < best:
            best, best_seq = cost, seq
    return list(best_seq), best


# --- fuzzy --------------------------------------------------------------------


def tri(x, a, b, c):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if b > a:
        m = (x >= a) & (x <= b)
        out[m] = (x[m] - a) / (b - a)
    if c > b:
        m = (x >= b) & (x <= c)
        out[m] = (c - x[m]) / (c - b)
    out[x == b] = 1.0
    return out


def fine_centroid(universe, clipped, points=100001):
    """Trapezoid centroid of ``max_r min(alpha_r, tri_r)`` on a uniform grid."""
    lo, hi = universe
    xs = np.linspace(lo, hi, points)
    mu = np.zeros(points)
    for (a, b, c), alpha in clipped:
        mu = np.maximum(mu, np.minimum(alpha, tri(xs, a, b, c)))
    w = np.full(points, 1.0)
    w[0] = w[-1] = 0.5
    area = np.sum(w * mu)
    if area == 0:
        return None
    return float(np.sum(w * mu * xs) / area)


def mamdani(inputs_spec, outputs_spec, rules, crisp):
    """Reference Mamdani evaluation; returns {output: centroid or None}."""
    clipped = {name: [] for name in outputs_spec}
    for ants, (out, term) in rules:
        degrees = []
        for name, t in ants:
            lo, hi = inputs_spec[name]["universe"]
            x = min(max(crisp[name], lo), hi)
            degrees.append(float(tri([x], *inputs_spec[name]["terms"][t])[0]))
        alpha = min(degrees)
        if alpha > 0:
            clipped[out].append((tuple(outputs_spec[out]["terms"][term]), alpha))
    return {
        name: (fine_centroid(tuple(spec["universe"]), clipped[name]) if clipped[name] else None)
        for name, spec in outputs_spec.items()
    }


# --- RNN ----------------------------------------------------------------------


def rnn_loss(params, X, Y):
    """Mean squared error of an Elman tanh RNN with a linear head, h0 = 0."""
    W, U, V, bh, by = (params[k] for k in ("W", "U", "V", "b_h", "b_y"))
    total = 0.0
    for s in range(X.shape[0]):
        h = np.zeros(W.shape[0])
        for t in range(X.shape[1]):
            h = np.tanh(W @ h + U @ X[s, t] + bh)
            y = V @ h + by
            total += float(np.sum((y - Y[s, t]) ** 2))
    return total / Y.size


def numeric_grad(params, X, Y, eps=1e-6):
    grads = {}
    for k, p in params.items():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + eps
            up = rnn_loss(params, X, Y)
            p[i] = old - eps
            down = rnn_loss(params, X, Y)
            p[i] = old
            g[i] = (up - down) / (2 * eps)
        grads[k] = g
    return grads


def max_component_relative_error(a: dict, b: dict, floor: float = 1e-12) -> float:
    """Largest ``|a - b| / max(|a|, |b|)`` over every gradient component."""
    worst = 0.0
    for k in a:
        x, y = np.abs(a[k].ravel()), np.abs(b[k].ravel())
        r = np.abs(a[k].ravel() - b[k].ravel()) / np.maximum(np.maximum(x, y), floor)
        worst = max(worst, float(r.max(initial=0.0)))
    return worst


def relative_error(a: dict, b: dict) -> float:
    va = np.concatenate([a[k].ravel() for k in sorted(a)])
    vb = np.concatenate([b[k].ravel() for k in sorted(a)])
    denom = max(np.linalg.norm(va) + np.linalg.norm(vb), 1e-12)
    return float(np.linalg.norm(va - vb) / denom)


# --- PID ----------------------------------------------------------------------


def first_order_plant(x, u, ambient=10.0, tau=20.0, gain=12.0, loss=0.6):
    """Same form as the air-temperature channel: dx = (gain*u - loss*(x - ambient))/tau."""
    return x + (gain * u - loss * (x - ambient)) / tau
