import math

import numpy as np
import pytest

import oracles
from greentwin.predictor import (
    RnnModel,
    TrainConfig,
    TrainingDivergedError,
    WindowedDataset,
    build_dataset,
    chronological_split,
    forward,
    load_model,
    loss_and_grad,
    mse,
    predict_horizon,
    rebalance,
    regime_labels,
    save_model,
    train,
)

from helpers import random_batch, random_model, sine_track


def test_gradient_matches_finite_differences(backend):
    rng = np.random.default_rng(3)
    cfg = TrainConfig()
    for _ in range(10):
        H, I, O = (int(v) for v in rng.integers(1, 5, 3))
        m = random_model(rng, H, I, O)
        batch = random_batch(rng, int(rng.integers(1, 4)), int(rng.integers(1, 6)), I, O)
        loss, grads = loss_and_grad(m, batch, cfg, clip=False)
        assert loss == pytest.approx(oracles.rnn_loss(m.params(), batch.X, batch.Y), rel=1e-12)
        numeric = oracles.numeric_grad({k: v.copy() for k, v in m.params().items()}, batch.X, batch.Y)
        assert oracles.relative_error(grads, numeric) < 1e-6


def test_l2_and_l1_penalties_enter_the_gradient():
    rng = np.random.default_rng(4)
    m = random_model(rng, 3, 2, 1)
    batch = random_batch(rng, 2, 4, 2, 1)
    base, g0 = loss_and_grad(m, batch, TrainConfig(), clip=False)
    l2, g2 = loss_and_grad(m, batch, TrainConfig(l2_lambda=0.1), clip=False)
    assert l2 == pytest.approx(base + 0.1 * m.sq_norm())
    assert np.allclose(g2["W"], g0["W"] + 0.2 * m.W)
    assert np.array_equal(g2["b_h"], g0["b_h"])  # biases are not penalized
    _, g1 = loss_and_grad(m, batch, TrainConfig(l1_lambda=0.1), clip=False)
    assert np.allclose(g1["U"], g0["U"] + 0.1 * np.sign(m.U))


def test_gradient_clipping_bounds_norm():
    rng = np.random.default_rng(5)
    m = random_model(rng, 4, 2, 1, scale=3.0)
    batch = random_batch(rng, 3, 5, 2, 1)
    batch = WindowedDataset(batch.X, batch.Y * 100)
    _, g = loss_and_grad(m, batch, TrainConfig(grad_clip=1.0))
    norm = math.sqrt(sum(float(np.sum(v * v)) for v in g.values()))
    assert norm <= 1.0 + 1e-12


def test_dropout_only_in_training_and_seeded():
    rng = np.random.default_rng(6)
    m = random_model(rng, 4, 2, 1)
    batch = random_batch(rng, 3, 5, 2, 1)
    cfg = TrainConfig(dropout_rate=0.5)
    a = loss_and_grad(m, batch, cfg, np.random.default_rng(1))[0]
    b = loss_and_grad(m, batch, cfg, np.random.default_rng(1))[0]
    assert a == b
    off = loss_and_grad(m, batch, cfg, train=False)[0]
    assert off == pytest.approx(mse(m, batch))


def test_frozen_parameters_get_zero_gradient():
    rng = np.random.default_rng(7)
    m = random_model(rng, 3, 2, 1)
    _, g = loss_and_grad(m, random_batch(rng, 2, 3, 2, 1), TrainConfig(frozen=("W",)))
    assert not g["W"].any()


def test_build_dataset_shapes_and_targets():
    series = np.column_stack([np.arange(50.0), np.arange(50.0) * 2 + 1])
    ds = build_dataset(series, [1], window=10, horizon=3, norm_kind="minmax", stride=5)
    assert ds.X.shape == (8, 10, 2) and ds.Y.shape == (8, 10, 1)
    # target at window position t is column 1 three ticks later
    assert ds.Y[0, 0, 0] == pytest.approx(ds.X[0, 3, 1])
    with pytest.raises(ValueError):
        build_dataset(series, [0], window=49, horizon=2)


def test_chronological_split_is_ordered():
    ds = build_dataset(np.arange(100.0)[:, None], [0], window=5)
    tr, va = chronological_split(ds)
    assert max(tr.start) < min(va.start)
    assert len(tr) == round(0.8 * len(ds))


def test_learning_on_sinusoid_is_deterministic():
    ds = build_dataset(sine_track()[:, None], [0], window=24, stride=2)
    _, val = chronological_split(ds)
    m0 = RnnModel.init(8, 1, 1, seed=0)
    cfg = TrainConfig(learning_rate=0.3, epochs=60, seed=0)
    a, hist = train(m0, ds, cfg)
    b, _ = train(m0, ds, cfg)
    assert a.equals(b)
    assert mse(a, val) < 0.5 * mse(m0, val)
    assert len(hist) == 60 and hist[-1].val_loss == pytest.approx(mse(a, val))


def test_learning_rate_halves_on_plateau():
    ds = build_dataset(sine_track()[:, None], [0], window=24, stride=4)
    _, hist = train(RnnModel.init(4, 1, 1), ds, TrainConfig(learning_rate=0.3, epochs=120))
    rates = [h.learning_rate for h in hist]
    assert rates == sorted(rates, reverse=True)
    for a, b in zip(rates, rates[1:]):
        assert b in (a, a * 0.5)


def test_divergence_raises():
    ds = build_dataset(sine_track()[:, None], [0], window=24, stride=4)
    with pytest.raises(TrainingDivergedError, match="learning rate"):
        train(RnnModel.init(4, 1, 1), ds, TrainConfig(learning_rate=1e4, epochs=20, grad_clip=1e9))


def test_checkpoint_round_trip_is_exact(tmp_path):
    m = random_model(np.random.default_rng(8), 3, 2, 2)
    save_model(m, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json").equals(m)


def test_model_rejects_bad_shapes_and_nan():
    with pytest.raises(ValueError):
        RnnModel(np.zeros((2, 2)), np.zeros((3, 1)), np.zeros((1, 2)), np.zeros(2), np.zeros(1))
    with pytest.raises(ValueError, match="non-finite"):
        RnnModel(np.full((1, 1), np.nan), np.zeros((1, 1)), np.zeros((1, 1)), np.zeros(1), np.zeros(1))


def test_forward_carries_state_and_horizon_feedback():
    rng = np.random.default_rng(9)
    m = random_model(rng, 3, 1, 1)
    xs = rng.normal(size=(6, 1))
    ys, h = forward(m, xs)
    ys2a, ha = forward(m, xs[:3])
    ys2b, _ = forward(m, xs[3:], ha)
    assert np.allclose(np.array(ys), np.array(ys2a + ys2b))
    ds = build_dataset(rng.normal(size=(40, 1)), [0], window=5)
    preds = predict_horizon(m, ds.X[0], 4, ds.input_norms, ds.target_norms, ds.feedback)
    assert len(preds) == 4 and all(p.shape == (1,) for p in preds)


def test_regime_rebalance():
    ds = build_dataset(sine_track(200)[:, None], [0], window=5)
    from dataclasses import replace

    ds = replace(ds, labels=regime_labels(ds, 0, 20.0, 2.0))
    counts = {lab: ds.labels.count(lab) for lab in set(ds.labels)}
    over = rebalance(ds, "oversample", np.random.default_rng(0))
    under = rebalance(ds, "undersample", np.random.default_rng(0))
    assert {over.labels.count(lab) for lab in counts} == {max(counts.values())}
    assert {under.labels.count(lab) for lab in counts} == {min(counts.values())}


def test_documented_forward_examples():
    zero = RnnModel.zeros(3, 2, 1)
    ys, h = forward(zero, [[1.0, -2.0], [3.0, 4.0]])
    assert not np.any(ys) and not np.any(h)
    m = RnnModel(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1)), np.zeros(1), np.zeros(1))
    ys, h = forward(m, [[0.5]])
    assert ys[0][0] == pytest.approx(math.tanh(0.5)) and h[0] == pytest.approx(0.46211715726000974)


def test_perfect_fit_has_zero_loss_and_gradient():
    m = RnnModel.zeros(2, 1, 1)
    batch = WindowedDataset(np.ones((2, 3, 1)), np.zeros((2, 3, 1)))
    loss, g = loss_and_grad(m, batch, TrainConfig())
    assert loss == 0.0 and all(not v.any() for v in g.values())


def test_dropout_changes_loss():
    rng = np.random.default_rng(12)
    m = random_model(rng, 4, 2, 1)
    batch = random_batch(rng, 3, 5, 2, 1)
    a = loss_and_grad(m, batch, TrainConfig(dropout_rate=0.0), np.random.default_rng(0))[0]
    b = loss_and_grad(m, batch, TrainConfig(dropout_rate=0.5), np.random.default_rng(0))[0]
    assert a != b and math.isfinite(b)


def test_zero_epochs_is_identity():
    m = RnnModel.init(3, 1, 1, seed=2)
    ds = build_dataset(sine_track(100)[:, None], [0], window=5)
    out, hist = train(m, ds, TrainConfig(epochs=0))
    assert out.equals(m) and hist == []


def test_predict_horizon_hand_rolled():
    from greentwin.pipeline import NormParams

    # scalar model y = 0.5 * tanh(x) fed back as next input
    m = RnnModel(np.zeros((1, 1)), np.ones((1, 1)), np.full((1, 1), 0.5), np.zeros(1), np.zeros(1))
    ident = NormParams("zscore", 0.0, 1.0)
    preds = predict_horizon(m, [[1.0]], 3, (ident,), (ident,), (0,))
    x = 1.0
    for p in preds:
        x = 0.5 * math.tanh(x)
        assert p[0] == pytest.approx(x, abs=1e-15)
    ys, _ = forward(m, [[1.0]])
    assert predict_horizon(m, [[1.0]], 1, (ident,), (ident,), (0,))[0][0] == ys[-1][0]
