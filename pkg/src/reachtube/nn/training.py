"""Training loop, optimizer, and error metric for the operator networks."""

from __future__ import annotations

import csv
import time

import numpy as np

from . import tensor as T
from .models import OperatorModel

__all__ = ["Adam", "TrainingError", "rel_l2", "mse_loss", "train"]


class TrainingError(RuntimeError):
    """Raised when the loss stops being finite; carries diagnostics."""

    def __init__(self, message: str, epoch: int, batch: int, param_norms: dict):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.param_norms = param_norms


def rel_l2(prediction, truth) -> float:
    """Relative L2 error ``||prediction - truth|| / ||truth||``."""
    prediction = np.asarray(prediction, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if prediction.shape != truth.shape:
        raise ValueError(f"shape mismatch {prediction.shape} vs {truth.shape}")
    denom = np.linalg.norm(truth)
    if denom == 0.0:
        raise ValueError("reference field has zero norm")
    return float(np.linalg.norm(prediction - truth) / denom)


def mse_loss(prediction: T.Tensor, target: np.ndarray) -> T.Tensor:
    diff = T.sub(prediction, np.asarray(target, dtype=prediction.data.dtype))
    return T.mean(T.mul(diff, diff))


def _mean_rel_l2(model: OperatorModel, x: np.ndarray, y: np.ndarray) -> float:
    """Dataset-mean relative L2, skipping zero-norm targets; NaN if all are."""
    values = []
    for i in range(len(x)):
        if np.linalg.norm(y[i]) == 0.0:
            continue
        values.append(rel_l2(model.predict(x[i]), y[i]))
    return float(np.mean(values)) if values else float("nan")


class Adam:
    """Adam optimizer over a named parameter dict."""

    def __init__(self, params: dict, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {name: np.zeros_like(t.data) for name, t in params.items()}
        self._v = {name: np.zeros_like(t.data) for name, t in params.items()}

    def step(self) -> None:
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        correction1 = 1.0 - b1**self.step_count
        correction2 = 1.0 - b2**self.step_count
        for name, t in self.params.items():
            if t.grad is None:
                continue
            g = t.grad
            m = self._m[name] = b1 * self._m[name] + (1.0 - b1) * g
            v = self._v[name] = b2 * self._v[name] + (1.0 - b2) * g * g
            update = (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            t.data = t.data - (self.lr * update).astype(t.data.dtype, copy=False)


def train(
    model: OperatorModel,
    x_train: np.ndarray,
    y_train: np.ndarray,
    *,
    epochs: int,
    batch_size: int = 10,
    lr: float = 1e-3,
    seed: int = 0,
    x_test: np.ndarray | None = None,
    y_test: np.ndarray | None = None,
    log_path=None,
    verbose: bool = False,
) -> list:
    """Train ``model`` on ``(x_train, y_train)`` with Adam and batch-mean MSE.

    ``x_train`` is ``(N, n1, n2, C_in)`` and ``y_train`` is
    ``(N, n1, n2, C_out)``.  Batch gradients are accumulated one sample
    at a time, each scaled by ``1/batch``, which is exact for the MSE of
    the batch and keeps peak memory at one sample's graph.  Returns a
    list of per-epoch records with train MSE, train/test relative L2,
    and wall time; optionally mirrors them to ``log_path`` as CSV.
    """
    x_train = np.asarray(x_train)
    y_train = np.asarray(y_train)
    if x_train.shape[0] != y_train.shape[0]:
        raise ValueError("input and target sample counts differ")
    n_samples = x_train.shape[0]
    if n_samples == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(seed)
    optimizer = Adam(model.params, lr=lr)
    history = []

    writer = None
    log_file = None
    if log_path is not None:
        log_file = open(log_path, "w", newline="")
        writer = csv.writer(log_file)
        writer.writerow(["epoch", "train_mse", "train_rel_l2", "test_rel_l2", "seconds"])

    try:
        for epoch in range(epochs):
            start = time.perf_counter()
            order = rng.permutation(n_samples)
            mse_sum = 0.0
            for batch_start in range(0, n_samples, batch_size):
                batch = order[batch_start:batch_start + batch_size]
                model.zero_grad()
                for idx in batch:
                    out = model.forward(x_train[idx])
                    loss = mse_loss(out, y_train[idx])
                    value = loss.item()
                    if not np.isfinite(value):
                        norms = {name: float(np.linalg.norm(t.data))
                                 for name, t in model.params.items()}
                        raise TrainingError(
                            f"non-finite loss {value} at epoch {epoch}, sample {int(idx)}",
                            epoch, batch_start // batch_size, norms,
                        )
                    mse_sum += value
                    T.mul(loss, 1.0 / len(batch)).backward()
                optimizer.step()
            train_rel = _mean_rel_l2(model, x_train, y_train)
            record = {
                "epoch": epoch,
                "train_mse": mse_sum / n_samples,
                "train_rel_l2": train_rel,
                "seconds": time.perf_counter() - start,
            }
            if x_test is not None and y_test is not None:
                record["test_rel_l2"] = _mean_rel_l2(model, x_test, y_test)
            history.append(record)
            if writer is not None:
                writer.writerow([
                    record["epoch"],
                    f"{record['train_mse']:.8e}",
                    f"{record['train_rel_l2']:.8e}",
                    f"{record.get('test_rel_l2', float('nan')):.8e}",
                    f"{record['seconds']:.3f}",
                ])
                log_file.flush()
            if verbose:
                test_part = (
                    f" test_rel={record['test_rel_l2']:.4f}" if "test_rel_l2" in record else ""
                )
                print(
                    f"epoch {epoch:3d}  mse={record['train_mse']:.6e}  "
                    f"train_rel={train_rel:.4f}{test_part}  ({record['seconds']:.1f}s)"
                )
    finally:
        if log_file is not None:
            log_file.close()
    return history
