"""Training loop, adaptive-moment optimizer, RMSE evaluation, metrics export."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DatasetManifest
from .layers import mse_loss
from .network import Model, predict


class TrainingError(RuntimeError):
    pass


class TrainingDiverged(TrainingError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    eval_every: int = 1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        # lr = 0 is allowed: it freezes the parameters, which is useful for
        # no-op baselines and determinism tests.
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")


@dataclass(frozen=True)
class MetricsRow:
    epoch: int
    train_loss: float
    test_loss: float
    test_rmse_m: float


class Adam:
    """Adaptive-moment gradient descent with bias correction."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params            # list of (param, grad) pairs
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p, _ in params]
        self.v = [np.zeros_like(p) for p, _ in params]

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for (p, g), m, v in zip(self.params, self.m, self.v):
            m[...] = self.beta1 * m + (1.0 - self.beta1) * g
            v[...] = self.beta2 * v + (1.0 - self.beta2) * g * g
            p -= (self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)).astype(p.dtype)


def _batched_eval_loss(model: Model, data: Dataset, batch_size: int) -> float:
    total = 0.0
    for start in range(0, len(data), batch_size):
        xb = data.inputs[start:start + batch_size]
        yb = data.labels[start:start + batch_size]
        loss, _ = mse_loss(model.forward(xb, train=False), yb)
        total += loss * xb.shape[0]
    return total / len(data)


def evaluate_rmse(model: Model, test: Dataset, manifest: DatasetManifest,
                  batch_size: int = 256) -> float:
    """Root mean square 3D Euclidean position error in meters."""
    if len(test) == 0:
        raise TrainingError("empty test set")
    sq_sum = 0.0
    for start in range(0, len(test), batch_size):
        xb = test.inputs[start:start + batch_size]
        yb = manifest.denormalize_label(test.labels[start:start + batch_size]
                                        .astype(np.float64))
        pred = predict(model, xb, manifest)
        sq_sum += float(((pred - yb) ** 2).sum())
    return float(np.sqrt(sq_sum / len(test)))


def train(model: Model, train_set: Dataset, test_set: Dataset,
          manifest: DatasetManifest, config: TrainConfig):
    """Minibatch MSE training; returns (model, per-epoch metrics history)."""
    if len(train_set) == 0:
        raise TrainingError("empty training set")
    opt = Adam(model.parameters(), lr=config.learning_rate,
               beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(len(train_set))
        loss_sum, n_seen = 0.0, 0
        for start in range(0, len(train_set), config.batch_size):
            idx = perm[start:start + config.batch_size]
            xb, yb = train_set.inputs[idx], train_set.labels[idx]
            out = model.forward(xb, train=True)
            loss, dout = mse_loss(out, yb)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite train loss at epoch {epoch}, step {start // config.batch_size}")
            model.zero_grad()
            model.backward(dout)
            opt.step()
            loss_sum += loss * xb.shape[0]
            n_seen += xb.shape[0]
        train_loss = loss_sum / n_seen
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            test_loss = _batched_eval_loss(model, test_set, 256)
            rmse = evaluate_rmse(model, test_set, manifest)
            history.append(MetricsRow(epoch, train_loss, test_loss, rmse))
    return model, history


def export_metrics(history, path) -> None:
    """CSV with full float precision: epoch,train_loss,test_loss,test_rmse_m."""
    if not history:
        raise TrainingError("empty metrics history")
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch,train_loss,test_loss,test_rmse_m\n")
        for row in history:
            f.write(f"{row.epoch},{row.train_loss!r},{row.test_loss!r},"
                    f"{row.test_rmse_m!r}\n")
