"""Recurrent forecaster trained from scratch with truncated BPTT.

The network is the plain Elman recurrence::

    h_t = tanh(W h_{t-1} + U x_t + b_h)
    y_t = V h_t + b_y

trained on mean squared error. Dropout, when enabled, multiplies the hidden
units that feed the output head by a Bernoulli mask scaled by ``1/(1-p)``;
the recurrent path is never masked. L1/L2 penalties apply to ``W``, ``U``
and ``V`` only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .pipeline import NormParams, apply_norm, fit_norm, invert_norm

PARAMS = ("W", "U", "V", "b_h", "b_y")
PENALIZED = ("W", "U", "V")
INIT_SCALE = 0.08
RESAMPLE_POLICIES = ("none", "oversample", "undersample")


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite or exploded; lower the learning rate."""


@dataclass
class RnnModel:
    W: np.ndarray
    U: np.ndarray
    V: np.ndarray
    b_h: np.ndarray
    b_y: np.ndarray

    def __post_init__(self):
        for name in PARAMS:
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        h, i, o = self.hidden_size, self.input_size, self.output_size
        shapes = {"W": (h, h), "U": (h, i), "V": (o, h), "b_h": (h,), "b_y": (o,)}
        for name, shape in shapes.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite weights")

    @property
    def hidden_size(self) -> int:
        return self.W.shape[0]

    @property
    def input_size(self) -> int:
        return self.U.shape[1]

    @property
    def output_size(self) -> int:
        return self.V.shape[0]

    @classmethod
    def init(cls, hidden_size: int, input_size: int, output_size: int, seed: int = 0) -> "RnnModel":
        """Uniform initialisation in ``[-0.08, 0.08]``; biases start at zero."""
        if min(hidden_size, input_size, output_size) < 1:
            raise ValueError("all model dimensions must be positive")
        rng = np.random.default_rng(seed)
        u = lambda *shape: rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)  # noqa: E731
        return cls(
            W=u(hidden_size, hidden_size),
            U=u(hidden_size, input_size),
            V=u(output_size, hidden_size),
            b_h=np.zeros(hidden_size),
            b_y=np.zeros(output_size),
        )

    @classmethod
    def zeros(cls, hidden_size: int, input_size: int, output_size: int) -> "RnnModel":
        return cls(
            np.zeros((hidden_size, hidden_size)),
            np.zeros((hidden_size, input_size)),
            np.zeros((output_size, hidden_size)),
            np.zeros(hidden_size),
            np.zeros(output_size),
        )

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMS}

    def copy(self) -> "RnnModel":
        return RnnModel(**{k: v.copy() for k, v in self.params().items()})

    def equals(self, other: "RnnModel") -> bool:
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in PARAMS)

    def sq_norm(self) -> float:
        return float(sum(np.sum(getattr(self, k) ** 2) for k in PENALIZED))

    def to_dict(self) -> dict:
        return {
            "format": "greentwin-rnn/1",
            "hidden_size": self.hidden_size,
            "input_size": self.input_size,
            "output_size": self.output_size,
            **{k: v.tolist() for k, v in self.params().items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RnnModel":
        m = cls(**{k: np.asarray(d[k], dtype=np.float64) for k in PARAMS})
        dims = (m.hidden_size, m.input_size, m.output_size)
        if dims != (d["hidden_size"], d["input_size"], d["output_size"]):
            raise ValueError("checkpoint header does not match weight shapes")
        return m


def save_model(m: RnnModel, path: str | Path) -> None:
    """Write a JSON checkpoint; floats are written with ``repr`` so loading is exact."""
    Path(path).write_text(json.dumps(m.to_dict()) + "\n")


def load_model(path: str | Path) -> RnnModel:
    return RnnModel.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    bptt_window: int = 24
    l2_lambda: float = 0.0
    l1_lambda: float = 0.0
    dropout_rate: float = 0.0
    grad_clip: float = 5.0
    seed: int = 0
    resample: str = "none"
    class_weights: Mapping[str, float] = field(default_factory=dict)
    patience: int = 5
    lr_decay: float = 0.5
    divergence_factor: float = 1e4
    frozen: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.bptt_window < 1:
            raise ValueError("bptt_window must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.l2_lambda < 0 or self.l1_lambda < 0:
            raise ValueError("regularization weights must be >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if not self.grad_clip > 0:
            raise ValueError("grad_clip must be > 0")
        if self.resample not in RESAMPLE_POLICIES:
            raise ValueError(f"unknown resample policy {self.resample!r}")
        for name in self.frozen:
            if name not in PARAMS:
                raise ValueError(f"cannot freeze unknown parameter {name!r}")
        object.__setattr__(self, "frozen", tuple(self.frozen))


@dataclass(frozen=True)
class WindowedDataset:
    """Fixed-length training windows.

    ``X[s, t]`` is the normalized feature vector at tick ``start[s] + t`` and
    ``Y[s, t]`` the normalized target at tick ``start[s] + t + horizon``.
    ``feedback`` gives, for each output, the input column holding the same
    quantity (used by closed-loop rollouts).
    """

    X: np.ndarray
    Y: np.ndarray
    horizon: int = 1
    input_norms: tuple[NormParams, ...] = ()
    target_norms: tuple[NormParams, ...] = ()
    feedback: tuple[int, ...] = ()
    labels: tuple[str, ...] = ()
    start: tuple[int, ...] = ()

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx: Sequence[int]) -> "WindowedDataset":
        idx = list(idx)
        return replace(
            self,
            X=self.X[idx],
            Y=self.Y[idx],
            labels=tuple(self.labels[i] for i in idx) if self.labels else (),
            start=tuple(self.start[i] for i in idx) if self.start else (),
        )


def build_dataset(
    features: np.ndarray,
    target_cols: Sequence[int],
    window: int,
    horizon: int = 1,
    norm_kind: str = "zscore",
    stride: int = 1,
) -> WindowedDataset:
    """Cut a raw ``(T, F)`` series into normalized training windows.

    Targets are the ``target_cols`` columns ``horizon`` ticks ahead. Each
    column gets its own normalization, fitted over the whole series.
    """
    features = np.asarray(features, dtype=np.float64)
    T, F = features.shape
    if T < window + horizon:
        raise ValueError(f"series of {T} ticks is too short for window {window} + horizon {horizon}")
    norms = []
    for c in range(F):
        try:
            norms.append(fit_norm(features[:, c].tolist(), norm_kind))
        except ValueError:
            # constant column: centre it, unit scale
            norms.append(NormParams("zscore", float(features[0, c]), 1.0))
    Z = np.column_stack([apply_norm(features[:, c], norms[c]) for c in range(F)])
    starts = list(range(0, T - window - horizon + 1, stride))
    X = np.stack([Z[s : s + window] for s in starts])
    Y = np.stack([Z[s + horizon : s + horizon + window][:, list(target_cols)] for s in starts])
    return WindowedDataset(
        X=np.ascontiguousarray(X),
        Y=np.ascontiguousarray(Y),
        horizon=horizon,
        input_norms=tuple(norms),
        target_norms=tuple(norms[c] for c in target_cols),
        feedback=tuple(target_cols),
        start=tuple(starts),
    )


def forward(m: RnnModel, window, h0=None) -> tuple[list[np.ndarray], np.ndarray]:
    """Run the recurrence over ``window`` (sequence of input vectors)."""
    xs = np.ascontiguousarray(np.atleast_2d(np.asarray(window, dtype=np.float64)))
    if len(window) == 0:
        return [], np.zeros(m.hidden_size) if h0 is None else np.asarray(h0, dtype=np.float64)
    if xs.shape[1] != m.input_size:
        raise ValueError(f"input vectors have length {xs.shape[1]}, model expects {m.input_size}")
    h0 = np.zeros(m.hidden_size) if h0 is None else np.ascontiguousarray(h0, dtype=np.float64)
    if h0.shape != (m.hidden_size,):
        raise ValueError(f"h0 has length {h0.shape}, model expects {m.hidden_size}")
    hs, ys = kernels.rnn_forward(m.W, m.U, m.V, m.b_h, m.b_y, xs, h0)
    return list(ys), hs[-1].copy()


def _dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray | None:
    if rate <= 0.0:
        return None
    keep = rng.random(shape) >= rate
    return np.ascontiguousarray(keep / (1.0 - rate))


def _raw_loss_grad(m: RnnModel, X, Y, mask):
    sse, dW, dU, dV, dbh, dby = kernels.rnn_bptt(
        m.W, m.U, m.V, m.b_h, m.b_y, np.ascontiguousarray(X), np.ascontiguousarray(Y), mask
    )
    return sse, {"W": dW, "U": dU, "V": dV, "b_h": dbh, "b_y": dby}


def loss_and_grad(
    m: RnnModel,
    batch: WindowedDataset,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
    train: bool = True,
    clip: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """Regularized MSE over the batch and its gradient by BPTT.

    The gradient is clipped to ``cfg.grad_clip`` by global norm unless
    ``clip=False``. Dropout is active only when ``train`` is true.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    mask = None
    if train and cfg.dropout_rate > 0:
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        mask = _dropout_mask((len(batch), batch.X.shape[1], m.hidden_size), cfg.dropout_rate, rng)

    per_window = batch.Y.shape[1] * batch.Y.shape[2]
    if cfg.class_weights and batch.labels:
        # weighted mean over regimes; unlisted regimes weigh 1
        total = 0.0
        norm = 0.0
        grads = {k: np.zeros_like(v) for k, v in m.params().items()}
        for label in sorted(set(batch.labels)):
            idx = [i for i, lab in enumerate(batch.labels) if lab == label]
            w = float(cfg.class_weights.get(label, 1.0))
            sub_mask = None if mask is None else np.ascontiguousarray(mask[idx])
            sse, g = _raw_loss_grad(m, batch.X[idx], batch.Y[idx], sub_mask)
            total += w * sse
            norm += w * len(idx) * per_window
            for k in grads:
                grads[k] += w * g[k]
        loss = total / norm
        grads = {k: v / norm for k, v in grads.items()}
    else:
        sse, grads = _raw_loss_grad(m, batch.X, batch.Y, mask)
        count = len(batch) * per_window
        loss = sse / count
        grads = {k: v / count for k, v in grads.items()}

    for k in PENALIZED:
        theta = getattr(m, k)
        if cfg.l2_lambda:
            loss += cfg.l2_lambda * float(np.sum(theta * theta))
            grads[k] = grads[k] + 2.0 * cfg.l2_lambda * theta
        if cfg.l1_lambda:
            loss += cfg.l1_lambda * float(np.sum(np.abs(theta)))
            grads[k] = grads[k] + cfg.l1_lambda * np.sign(theta)
    for k in cfg.frozen:
        grads[k] = np.zeros_like(grads[k])

    if clip:
        norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        if norm > cfg.grad_clip:
            scale = cfg.grad_clip / norm
            grads = {k: g * scale for k, g in grads.items()}
    return float(loss), grads


def mse(m: RnnModel, data: WindowedDataset) -> float:
    """Plain mean squared error in normalized units (no dropout, no penalty)."""
    sse, _ = _raw_loss_grad(m, data.X, data.Y, None)
    return sse / data.Y.size


def chronological_split(data: WindowedDataset, train_fraction: float = 0.8):
    n_train = int(round(len(data) * train_fraction))
    if n_train < 1 or n_train >= len(data):
        raise ValueError(f"cannot split {len(data)} windows {train_fraction:.0%}/{1 - train_fraction:.0%}")
    return data.subset(range(n_train)), data.subset(range(n_train, len(data)))


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    learning_rate: float


def train(m: RnnModel, data: WindowedDataset, cfg: TrainConfig) -> tuple[RnnModel, list[EpochRecord]]:
    """Full-batch gradient descent with plateau-halving learning rate.

    Windows are split chronologically 80/20; resampling, if configured, is
    applied to the training part only. The learning rate is multiplied by
    ``lr_decay`` whenever validation loss has not improved for ``patience``
    epochs. Returns a trained copy and one record per epoch.
    """
    model = m.copy()
    if cfg.epochs == 0:
        return model, []
    rng = np.random.default_rng(cfg.seed)
    train_set, val_set = chronological_split(data)
    if cfg.resample != "none":
        train_set = rebalance(train_set, cfg.resample, rng)

    lr = cfg.learning_rate
    best_val = math.inf
    stale = 0
    history: list[EpochRecord] = []
    initial = mse(model, train_set)
    for epoch in range(cfg.epochs):
        loss, grads = loss_and_grad(model, train_set, cfg, rng)
        if not math.isfinite(loss) or loss > cfg.divergence_factor * max(initial, 1e-12):
            raise TrainingDivergedError(f"loss {loss!r} at epoch {epoch} with learning rate {lr}")
        for k, g in grads.items():
            setattr(model, k, getattr(model, k) - lr * g)
        train_loss = mse(model, train_set)
        val_loss = mse(model, val_set)
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise TrainingDivergedError(f"non-finite loss after epoch {epoch} with learning rate {lr}")
        if train_loss > cfg.divergence_factor * max(initial, 1e-12):
            raise TrainingDivergedError(f"loss {train_loss!r} after epoch {epoch} with learning rate {lr}")
        history.append(EpochRecord(epoch, train_loss, val_loss, lr))
        if val_loss < best_val:
            best_val = val_loss
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                lr *= cfg.lr_decay
                stale = 0
    return model, history


def predict_horizon(
    m: RnnModel,
    recent_window,
    steps: int,
    input_norms: Sequence[NormParams],
    target_norms: Sequence[NormParams],
    feedback: Sequence[int],
) -> list[np.ndarray]:
    """Closed-loop rollout of ``steps`` predictions in physical units.

    ``recent_window`` holds normalized input vectors. Each prediction is
    denormalized, re-normalized with the matching input column's parameters
    and written into ``feedback`` columns of the next input; every other
    column keeps its last known value.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if len(recent_window) < 1:
        raise ValueError("recent_window must hold at least one input vector")
    outputs, h = forward(m, recent_window)
    x = np.array(recent_window[-1], dtype=np.float64)
    y = outputs[-1]
    preds = []
    for k in range(steps):
        phys = np.array([invert_norm(y[j], target_norms[j]) for j in range(len(y))])
        preds.append(phys)
        if k == steps - 1:
            break
        x = x.copy()
        for j, col in enumerate(feedback):
            x[col] = apply_norm(phys[j], input_norms[col])
        (y,), h = forward(m, [x], h)
    return preds


def regime_labels(
    data: WindowedDataset, output_index: int, setpoint: float, band: float
) -> tuple[str, ...]:
    """Label each window ``below``, ``in_band`` or ``above`` by its final target."""
    norm = data.target_norms[output_index]
    labels = []
    for s in range(len(data)):
        v = invert_norm(float(data.Y[s, -1, output_index]), norm)
        labels.append("above" if v > setpoint + band else "below" if v < setpoint - band else "in_band")
    return tuple(labels)


def rebalance(
    data: WindowedDataset,
    policy: str,
    rng: np.random.Generator,
    regimes: Sequence[str] | None = None,
) -> WindowedDataset:
    """Equalize regime counts by duplication or random dropping.

    ``regimes`` names the regimes that must be represented (default: the
    labels present). Output keeps chronological order, duplicates adjacent.
    """
    if policy not in RESAMPLE_POLICIES:
        raise ValueError(f"unknown resample policy {policy!r}")
    if policy == "none":
        return data
    if not data.labels:
        raise ValueError("dataset has no regime labels; see regime_labels()")
    groups: dict[str, list[int]] = {}
    for i, lab in enumerate(data.labels):
        groups.setdefault(lab, []).append(i)
    names = sorted(set(regimes) if regimes is not None else groups)
    if policy == "oversample":
        empty = [r for r in names if not groups.get(r)]
        if empty:
            raise ValueError(f"cannot oversample regimes with zero samples: {empty}")
        target = max(len(groups[r]) for r in names)
        chosen = []
        for r in names:
            idx = groups[r]
            extra = rng.choice(idx, size=target - len(idx), replace=True).tolist() if target > len(idx) else []
            chosen.extend(idx + extra)
    else:
        present = [r for r in names if groups.get(r)]
        target = min(len(groups[r]) for r in present)
        chosen = []
        for r in present:
            idx = groups[r]
            keep = idx if len(idx) == target else rng.choice(idx, size=target, replace=False).tolist()
            chosen.extend(keep)
    return data.subset(sorted(chosen))


__all__ = [
    "PARAMS",
    "RESAMPLE_POLICIES",
    "EpochRecord",
    "RnnModel",
    "TrainConfig",
    "TrainingDivergedError",
    "WindowedDataset",
    "build_dataset",
    "chronological_split",
    "forward",
    "load_model",
    "loss_and_grad",
    "mse",
    "predict_horizon",
    "rebalance",
    "regime_labels",
    "save_model",
    "train",
]
