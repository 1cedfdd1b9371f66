# cython: language_level=3
"""Compiled hot kernels. Same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, INFINITY

cnp.import_array()

BACKEND = "cython"


def rnn_forward(double[:, ::1] W, double[:, ::1] U, double[:, ::1] V,
                double[::1] bh, double[::1] by, double[:, ::1] xs, double[::1] h0):
    cdef Py_ssize_t L = xs.shape[0], Hn = W.shape[0], I = U.shape[1], O = V.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double acc
    hs_arr = np.empty((L, Hn))
    ys_arr = np.empty((L, O))
    cdef double[:, ::1] hs = hs_arr
    cdef double[:, ::1] ys = ys_arr
    cdef double[::1] prev = np.array(h0, dtype=np.float64)
    for t in range(L):
        for i in range(Hn):
            acc = 0.0
            for j in range(Hn):
                acc += W[i, j] * prev[j]
            for j in range(I):
                acc += U[i, j] * xs[t, j]
            hs[t, i] = tanh(acc + bh[i])
        for i in range(Hn):
            prev[i] = hs[t, i]
        for i in range(O):
            acc = 0.0
            for j in range(Hn):
                acc += V[i, j] * hs[t, j]
            ys[t, i] = acc + by[i]
    return hs_arr, ys_arr


def rnn_bptt(double[:, ::1] W, double[:, ::1] U, double[:, ::1] V,
             double[::1] bh, double[::1] by,
             double[:, :, ::1] X, double[:, :, ::1] Y, M):
    cdef Py_ssize_t B = X.shape[0], L = X.shape[1], I = X.shape[2]
    cdef Py_ssize_t Hn = W.shape[0], O = V.shape[0]
    cdef Py_ssize_t b, t, i, j
    cdef double acc, sse = 0.0, g
    cdef bint use_mask = M is not None
    cdef double[:, :, ::1] Mv
    if use_mask:
        Mv = np.ascontiguousarray(M, dtype=np.float64)

    dW_a = np.zeros((Hn, Hn)); dU_a = np.zeros((Hn, I)); dV_a = np.zeros((O, Hn))
    dbh_a = np.zeros(Hn); dby_a = np.zeros(O)
    cdef double[:, ::1] dW = dW_a, dU = dU_a, dV = dV_a
    cdef double[::1] dbh = dbh_a, dby = dby_a

    cdef double[:, ::1] hs = np.zeros((L + 1, Hn))
    cdef double[:, ::1] hm = np.zeros((L, Hn))
    cdef double[:, ::1] err = np.zeros((L, O))
    cdef double[::1] dh = np.zeros(Hn)
    cdef double[::1] da = np.zeros(Hn)
    cdef double[::1] dh_next = np.zeros(Hn)

    for b in range(B):
        for t in range(L):
            for i in range(Hn):
                acc = 0.0
                for j in range(Hn):
                    acc += W[i, j] * hs[t, j]
                for j in range(I):
                    acc += U[i, j] * X[b, t, j]
                hs[t + 1, i] = tanh(acc + bh[i])
                hm[t, i] = hs[t + 1, i] * Mv[b, t, i] if use_mask else hs[t + 1, i]
            for i in range(O):
                acc = 0.0
                for j in range(Hn):
                    acc += V[i, j] * hm[t, j]
                err[t, i] = acc + by[i] - Y[b, t, i]
                sse += err[t, i] * err[t, i]
        for i in range(Hn):
            dh_next[i] = 0.0
        for t in range(L - 1, -1, -1):
            for i in range(Hn):
                dh[i] = 0.0
            for i in range(O):
                g = 2.0 * err[t, i]
                dby[i] += g
                for j in range(Hn):
                    dV[i, j] += g * hm[t, j]
                    dh[j] += g * V[i, j]
            for i in range(Hn):
                if use_mask:
                    dh[i] *= Mv[b, t, i]
                da[i] = (dh[i] + dh_next[i]) * (1.0 - hs[t + 1, i] * hs[t + 1, i])
                dbh[i] += da[i]
                for j in range(Hn):
                    dW[i, j] += da[i] * hs[t, j]
                for j in range(I):
                    dU[i, j] += da[i] * X[b, t, j]
            for j in range(Hn):
                acc = 0.0
                for i in range(Hn):
                    acc += da[i] * W[i, j]
                dh_next[j] = acc
    return sse, dW_a, dU_a, dV_a, dbh_a, dby_a


def mpc_search(A, B, d, x0, setpoint, wtrack, cands, double w_effort):
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] Bv = np.ascontiguousarray(B, dtype=np.float64)
    cdef double[:, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(setpoint, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(wtrack, dtype=np.float64)
    cdef double[:, ::1] Cv = np.ascontiguousarray(cands, dtype=np.float64)
    cdef Py_ssize_t H = dv.shape[0], n = Av.shape[0], K = Cv.shape[0], m = Cv.shape[1]
    cdef Py_ssize_t c, i, j, k
    cdef double acc, v, e, track, cost, best = INFINITY
    cdef long long nodes = 0

    cdef double[:, ::1] bu = np.zeros((K, n))
    cdef double[::1] eff = np.zeros(K)
    for c in range(K):
        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc = acc + Bv[i, j] * Cv[c, j]
            bu[c, i] = acc
        e = 0.0
        for j in range(m):
            e = e + Cv[c, j] * Cv[c, j]
        eff[c] = w_effort * e

    cdef double[:, ::1] xs = np.zeros((H + 1, n))
    cdef double[::1] partial = np.zeros(H + 1)
    cdef long[::1] idx = np.full(H, -1, dtype=np.int_)
    cdef long[::1] best_seq = np.zeros(H, dtype=np.int_)
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    for i in range(n):
        xs[0, i] = x0v[i]

    k = 0
    while k >= 0:
        idx[k] += 1
        c = idx[k]
        if c >= K:
            k -= 1
            continue
        nodes += 1
        track = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc = acc + Av[i, j] * xs[k, j]
            v = (acc + bu[c, i]) + dv[k, i]
            xs[k + 1, i] = v
            e = v - sv[i]
            track = track + wv[i] * e * e
        cost = partial[k] + (track + eff[c])
        if cost >= best:
            continue
        if k == H - 1:
            best = cost
            for i in range(H):
                best_seq[i] = idx[i]
            continue
        partial[k + 1] = cost
        k += 1
        idx[k] = -1
    return [int(x) for x in best_seq], best, int(nodes)
