import numpy as np
import pytest

from greentwin import kernels
from greentwin.control.mpc import candidate_grid

from helpers import random_linear_instance, random_model

BACKENDS = kernels.available_backends()


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_forward_matches_numpy_loop(name):
    k = BACKENDS[name]
    rng = np.random.default_rng(0)
    m = random_model(rng, 5, 3, 2)
    xs = rng.normal(size=(7, 3))
    hs, ys = k.rnn_forward(m.W, m.U, m.V, m.b_h, m.b_y, xs, np.zeros(5))
    h = np.zeros(5)
    for t in range(7):
        h = np.tanh(m.W @ h + m.U @ xs[t] + m.b_h)
        assert np.allclose(hs[t], h, atol=1e-13)
        assert np.allclose(ys[t], m.V @ h + m.b_y, atol=1e-13)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_backends_agree_on_bptt():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    rng = np.random.default_rng(1)
    for trial in range(20):
        H, I, O, B, L = (int(v) for v in rng.integers(1, 6, 5))
        m = random_model(rng, H, I, O)
        X = rng.normal(size=(B, L, I))
        Y = rng.normal(size=(B, L, O))
        M = None if trial % 2 else (rng.random((B, L, H)) > 0.3) / 0.7
        a = py.rnn_bptt(m.W, m.U, m.V, m.b_h, m.b_y, X, Y, M)
        b = cy.rnn_bptt(m.W, m.U, m.V, m.b_h, m.b_y, X, Y, M)
        assert a[0] == pytest.approx(b[0], rel=1e-12)
        for ga, gb in zip(a[1:], b[1:]):
            assert np.allclose(ga, gb, rtol=1e-10, atol=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_backends_agree_bitwise_on_mpc():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    rng = np.random.default_rng(2)
    for _ in range(50):
        model, x0, sp, wt, levels, horizon, we = random_linear_instance(rng, 5000)
        cands = np.asarray(candidate_grid(model.inputs, levels), dtype=float)
        args = (np.asarray(model.A), np.asarray(model.B), np.asarray(model.d), x0, sp, wt, cands, we)
        a, b = py.mpc_search(*args), cy.mpc_search(*args)
        assert list(a[0]) == list(b[0])
        assert a[1] == b[1]
        assert a[2] == b[2]
