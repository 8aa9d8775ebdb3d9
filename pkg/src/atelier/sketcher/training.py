"""Training loop, fine-tuning, and gradient verification.

Optimization is Adam with global gradient-norm clipping. Runs are fully
reproducible: parameter initialization and batch shuffling both derive
from the config seed, and all math is plain numpy.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import EmptyDataset, NumericError
from . import checkpoint as ckpt
from .model import (
    ModelParams,
    SketcherConfig,
    batch_from_rows,
    init_params,
    loss_and_grads,
)

FINE_TUNE_LR_FACTOR = 0.1


class EpochStats(NamedTuple):
    epoch: int
    train_nll: float
    val_nll: float | None  # None when no validation split was supplied


@dataclass
class TrainResult:
    params: ModelParams
    curve: list[EpochStats]
    offset_scale: float = 1.0


class _Adam:
    def __init__(self, params: ModelParams, lr: float):
        self.lr = lr
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.t = 0
        self.m = [np.zeros_like(a) for a in params.arrays()]
        self.v = [np.zeros_like(a) for a in params.arrays()]

    def step(self, params: ModelParams, grads: ModelParams) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params.arrays(), grads.arrays(), self.m, self.v):
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def clip_gradients(grads: ModelParams, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    norm = math.sqrt(sum(float((g * g).sum()) for g in grads.arrays()))
    if norm > max_norm and norm > 0:
        factor = max_norm / norm
        for g in grads.arrays():
            g *= factor
    return norm


def _as_arrays(dataset, dtype) -> tuple[np.ndarray, np.ndarray]:
    """Accept (rows, lengths) arrays, TrainingExample lists, or row lists."""
    if isinstance(dataset, tuple) and len(dataset) == 2:
        rows, lengths = dataset
        return np.asarray(rows, dtype=dtype), np.asarray(lengths, dtype=np.int64)
    examples = list(dataset)
    if not examples:
        raise EmptyDataset("no training examples")
    first = examples[0]
    if hasattr(first, "rows") and hasattr(first, "true_len"):
        rows = np.stack([np.asarray(e.rows, dtype=dtype) for e in examples])
        lengths = np.array([e.true_len for e in examples], dtype=np.int64)
        return rows, lengths
    return batch_from_rows(examples, dtype=dtype)


def evaluate(params: ModelParams, rows: np.ndarray, lengths: np.ndarray) -> float:
    terms, _ = loss_and_grads(params, rows, lengths, compute_grads=False)
    return terms.total


def train(
    train_data,
    config: SketcherConfig,
    val_data=None,
    init: ModelParams | None = None,
    lr_scale: float = 1.0,
    checkpoint_dir: str | None = None,
    offset_scale: float = 1.0,
    dtype=np.float32,
    log=None,
) -> TrainResult:
    """Gradient-descent training over padded stroke-5 batches.

    Returns the trained parameters and a per-epoch loss curve
    (train/val mean NLL per valid step). A checkpoint is written each
    epoch when ``checkpoint_dir`` is given. A non-finite loss aborts
    with a diagnostic naming the batch.
    """
    rng = np.random.default_rng(config.seed)
    params = init.copy() if init is not None else init_params(config, dtype=dtype, rng=rng)
    rows, lengths = _as_arrays(train_data, params.dtype)
    if rows.shape[0] == 0:
        raise EmptyDataset("no training examples")
    val = _as_arrays(val_data, params.dtype) if val_data is not None else None

    optimizer = _Adam(params, config.learning_rate * lr_scale)
    curve: list[EpochStats] = []
    n = rows.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss, epoch_weight = 0.0, 0.0
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            terms, grads = loss_and_grads(params, rows[idx], lengths[idx])
            if not math.isfinite(terms.total):
                raise NumericError(
                    f"non-finite loss at epoch {epoch} batch {batch_index}",
                    detail={"epoch": epoch, "batch": batch_index},
                )
            clip_gradients(grads, config.grad_clip)
            optimizer.step(params, grads)
            valid = float(np.maximum(lengths[idx] - 1, 0).sum())
            epoch_loss += terms.total * valid
            epoch_weight += valid
        train_nll = epoch_loss / max(epoch_weight, 1.0)
        val_nll = evaluate(params, *val) if val is not None else None
        curve.append(EpochStats(epoch, train_nll, val_nll))
        if log:
            shown = "-" if val_nll is None else f"{val_nll:.4f}"
            log(f"epoch {epoch}: train nll {train_nll:.4f} val nll {shown}")
        if checkpoint_dir:
            os.makedirs(checkpoint_dir, exist_ok=True)
            ckpt.save_checkpoint(
                os.path.join(checkpoint_dir, f"epoch-{epoch:03d}.ckpt"),
                params,
                config,
                offset_scale=offset_scale,
            )
    return TrainResult(params=params, curve=curve, offset_scale=offset_scale)


def fine_tune(
    params: ModelParams,
    artist_data,
    config: SketcherConfig,
    val_data=None,
    lr_factor: float = FINE_TUNE_LR_FACTOR,
    checkpoint_dir: str | None = None,
    offset_scale: float = 1.0,
    log=None,
) -> TrainResult:
    """Continue training from trained params at a reduced learning rate."""
    return train(
        artist_data,
        config,
        val_data=val_data,
        init=params,
        lr_scale=lr_factor,
        checkpoint_dir=checkpoint_dir,
        offset_scale=offset_scale,
        log=log,
    )


def write_loss_curve(path: str, curve: Sequence[EpochStats]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "train_nll", "val_nll"])
        for row in curve:
            val = "" if row.val_nll is None else f"{row.val_nll:.6f}"
            writer.writerow([row.epoch, f"{row.train_nll:.6f}", val])


def grad_check(
    params: ModelParams, rows: np.ndarray, lengths: np.ndarray, h: float = 1e-4
) -> float:
    """Max relative error of analytic gradients vs central differences.

    The finite-difference reference evaluates the loss on a float64 copy
    of the parameters (perturbation h on each coordinate), so the
    reported error reflects the accuracy of the analytic backward pass
    in the parameters' own dtype. Relative error uses the guarded
    denominator max(|g| + |fd|, 1e-8). A batch with no valid step has no
    gradient and returns 0.
    """
    rows = np.asarray(rows)
    lengths = np.asarray(lengths)
    _, grads = loss_and_grads(params, rows, lengths)
    analytic = grads.to_vector().astype(np.float64)
    if not analytic.any():
        valid = np.maximum(lengths - 1, 0).sum()
        if valid == 0:
            return 0.0

    ref = params.astype(np.float64)
    theta = ref.to_vector()
    fd = np.empty_like(theta)
    for i in range(len(theta)):
        theta[i] += h
        plus, _ = loss_and_grads(ref.from_vector(theta), rows, lengths, compute_grads=False)
        theta[i] -= 2 * h
        minus, _ = loss_and_grads(ref.from_vector(theta), rows, lengths, compute_grads=False)
        theta[i] += h
        fd[i] = (plus.total - minus.total) / (2 * h)

    denom = np.maximum(np.abs(analytic) + np.abs(fd), 1e-8)
    return float(np.max(np.abs(analytic - fd) / denom))
