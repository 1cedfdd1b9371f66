"""Pure-Python/numpy implementations of the hot kernels.

These are the reference the compiled module is checked against. The MPC
search performs its floating-point operations in exactly the order the C
version does, so both backends return the same plan and the same cost bits.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def rnn_forward(W, U, V, bh, by, xs, h0):
    """Single-sequence forward pass. Returns ``(hs (L,H), ys (L,O))``."""
    L = xs.shape[0]
    hs = np.empty((L, W.shape[0]))
    ys = np.empty((L, V.shape[0]))
    h = h0
    for t in range(L):
        h = np.tanh(W @ h + U @ xs[t] + bh)
        hs[t] = h
        ys[t] = V @ h + by
    return hs, ys


def rnn_bptt(W, U, V, bh, by, X, Y, M):
    """Sum of squared errors and its gradient over a batch of windows.

    ``X`` is (B, L, I), ``Y`` is (B, L, O); every window starts from a zero
    hidden state. ``M`` is a (B, L, H) multiplier on the hidden units feeding
    the output head (dropout mask already scaled), or ``None``.
    Returns ``(sse, dW, dU, dV, dbh, dby)``.
    """
    B, L, _ = X.shape
    Hn = W.shape[0]
    hs = np.zeros((L + 1, B, Hn))
    hm = np.empty((L, B, Hn))
    err = np.empty((L, B, V.shape[0]))
    for t in range(L):
        hs[t + 1] = np.tanh(hs[t] @ W.T + X[:, t] @ U.T + bh)
        hm[t] = hs[t + 1] if M is None else hs[t + 1] * M[:, t]
        err[t] = hm[t] @ V.T + by - Y[:, t]
    sse = float(np.sum(err * err))

    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    dV = np.zeros_like(V)
    dbh = np.zeros_like(bh)
    dby = np.zeros_like(by)
    dh_next = np.zeros((B, Hn))
    for t in range(L - 1, -1, -1):
        dy = 2.0 * err[t]
        dV += dy.T @ hm[t]
        dby += dy.sum(axis=0)
        dh = dy @ V
        if M is not None:
            dh = dh * M[:, t]
        dh = dh + dh_next
        da = dh * (1.0 - hs[t + 1] ** 2)
        dW += da.T @ hs[t]
        dU += da.T @ X[:, t]
        dbh += da.sum(axis=0)
        dh_next = da @ W
    return sse, dW, dU, dV, dbh, dby


def mpc_search(A, B, d, x0, setpoint, wtrack, cands, w_effort):
    """Branch-and-bound over candidate command sequences of a linear model.

    Minimises ``sum_k [sum_i wtrack_i (x_{k+1,i} - s_i)^2 + w_effort |u_k|^2]``
    with ``x_{k+1} = A x_k + B u_k + d_k``. Sequences are explored in
    lexicographic candidate order and a branch is cut once its partial cost
    reaches the incumbent, so the result is the lexicographically smallest
    minimiser. Returns ``(index sequence, cost, nodes expanded)``.
    """
    A = [[float(v) for v in row] for row in np.asarray(A, dtype=float)]
    Bm = np.asarray(B, dtype=float)
    d = [[float(v) for v in row] for row in np.asarray(d, dtype=float)]
    x0 = [float(v) for v in np.asarray(x0, dtype=float)]
    s = [float(v) for v in np.asarray(setpoint, dtype=float)]
    wt = [float(v) for v in np.asarray(wtrack, dtype=float)]
    C = np.asarray(cands, dtype=float)
    H = len(d)
    n = len(x0)
    K, m = C.shape

    bu = []
    eff = []
    for c in range(K):
        row = []
        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc = acc + float(Bm[i, j]) * float(C[c, j])
            row.append(acc)
        bu.append(row)
        e = 0.0
        for j in range(m):
            e = e + float(C[c, j]) * float(C[c, j])
        eff.append(w_effort * e)

    best = float("inf")
    best_seq = [0] * H
    idx = [-1] * H
    xs = [x0] + [None] * H
    partial = [0.0] * (H + 1)
    nodes = 0
    k = 0
    while k >= 0:
        idx[k] += 1
        c = idx[k]
        if c >= K:
            k -= 1
            continue
        nodes += 1
        x = xs[k]
        dk = d[k]
        buc = bu[c]
        xn = []
        track = 0.0
        for i in range(n):
            acc = 0.0
            Ai = A[i]
            for j in range(n):
                acc = acc + Ai[j] * x[j]
            v = (acc + buc[i]) + dk[i]
            xn.append(v)
            e = v - s[i]
            track = track + wt[i] * e * e
        cost = partial[k] + (track + eff[c])
        if cost >= best:
            continue
        if k == H - 1:
            best = cost
            best_seq = idx[:]
            continue
        xs[k + 1] = xn
        partial[k + 1] = cost
        k += 1
        idx[k] = -1
    return best_seq, best, nodes
