"""Compare the compiled kernels with the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on identical inputs under both backends. The script reports
the best wall time of N repeats, the speed-up, and whether the outputs agree
(MPC results must be bit-identical; RNN results to 1e-12).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from greentwin.kernels import available_backends


def _best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _rnn_inputs(rng, H=16, I=3, O=1, B=64, L=24):
    W = rng.normal(0, 0.3, (H, H))
    U = rng.normal(0, 0.3, (H, I))
    V = rng.normal(0, 0.3, (O, H))
    bh = rng.normal(0, 0.1, H)
    by = rng.normal(0, 0.1, O)
    X = rng.normal(0, 1, (B, L, I))
    Y = rng.normal(0, 1, (B, L, O))
    return W, U, V, bh, by, X, Y


def _mpc_inputs(rng, n=3, m=2, horizon=5, levels=(0.0, 0.5, 1.0)):
    A = rng.uniform(-0.6, 1.0, (n, n))
    B = rng.uniform(-2.0, 2.0, (n, m))
    d = rng.uniform(-1.0, 1.0, (horizon, n))
    cands = np.array([(a, b) for a in levels for b in levels], dtype=float)
    return A, B, d, rng.uniform(-5, 5, n), rng.uniform(-5, 5, n), np.ones(n), cands, 0.05


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the Python fallback is available")
    rng = np.random.default_rng(0)
    W, U, V, bh, by, X, Y = _rnn_inputs(rng)
    mpc_args = _mpc_inputs(rng)

    cases = {
        "rnn_forward": lambda k: k.rnn_forward(W, U, V, bh, by, X[0], np.zeros(W.shape[0])),
        "rnn_bptt": lambda k: k.rnn_bptt(W, U, V, bh, by, X, Y, None),
        "mpc_search": lambda k: k.mpc_search(*mpc_args),
    }
    print(f"{'kernel':<12} " + " ".join(f"{name:>12}" for name in backends) + f" {'speed-up':>9}  agree")
    for label, call in cases.items():
        times, outs = {}, {}
        for name, mod in backends.items():
            times[name], outs[name] = _best_of(lambda: call(mod), args.repeat)
        row = f"{label:<12} " + " ".join(f"{times[n] * 1e3:>10.2f}ms" for n in backends)
        if "cython" in backends:
            a, b = outs["python"], outs["cython"]
            if label == "mpc_search":
                agree = list(a[0]) == list(b[0]) and a[1] == b[1]
            else:
                agree = all(np.allclose(p, q, rtol=0, atol=1e-12) for p, q in zip(a, b))
            row += f" {times['python'] / times['cython']:>8.1f}x  {agree}"
        print(row)


if __name__ == "__main__":
    main()
