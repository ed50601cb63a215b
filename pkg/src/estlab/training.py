"""Training loop: AdamW with decoupled decay, masked losses, gradient
clipping at a global norm, early stopping on validation error, and the best
checkpoint restored before the single test evaluation.

Determinism contract: with (data seed, model seed, train seed) fixed, a rerun
produces a bit-identical RunRecord apart from wall time. Every random choice
goes through a labeled stream derived from the run seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError
from .rng import rng_for
from .stream.tasks import TaskData, TaskSample, score
from .tensor import Tape, Tensor, backward, zero_grad


@dataclass
class TrainConfig:
    learning_rate: float
    weight_decay: float = 0.01
    batch_size: int = 10
    epochs: int = 250
    patience: int = 30
    seed: int = 0
    clip_norm: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if not 1 <= self.patience <= self.epochs:
            raise ConfigError("patience must be in [1, epochs]")


@dataclass
class RunRecord:
    task: str
    family: str
    size: str
    config_id: str
    learning_rate: float
    seed: int
    val_error: float
    test_error: float
    epochs_run: int
    wall_ms: int
    status: str = "ok"

    def key(self) -> tuple:
        return (self.task, self.family, self.size, self.config_id,
                self.learning_rate, self.seed)


class AdamW:
    """Adam moments with bias correction and decoupled weight decay:
    p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p).
    """

    def __init__(self, params, lr, weight_decay=0.01,
                 beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if p.grad is not None else 0.0
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.data -= self.lr * (update + self.weight_decay * p.data)

    def zero_grad(self):
        zero_grad(self.params)


def clip_global_norm(params, max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm."""
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    norm = math.sqrt(total)
    if norm > max_norm > 0:
        factor = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= factor
    return norm


def masked_loss_terms(pred: Tensor, sample: TaskSample) -> tuple[Tensor, int]:
    """(sum of per-position losses over masked steps, number of terms).

    Discrete: cross-entropy against one-hot targets; the target matrix is
    zero at unevaluated steps, so targets * log_softmax masks for free.
    Continuous: squared error with an explicit row mask.
    """
    if sample.kind == "discrete":
        logp = T.log_softmax_rows(pred)
        picked = T.mul(logp, Tensor(sample.targets))
        return T.scale(T.sum_all(picked), -1.0), int(sample.eval_mask.sum())
    mask = np.repeat(sample.eval_mask[:, None], sample.targets.shape[1], axis=1)
    diff = T.mul(T.sub(pred, Tensor(sample.targets)), Tensor(mask.astype(np.float64)))
    return T.sum_all(T.mul(diff, diff)), int(mask.sum())


def batch_loss(model, batch: list[TaskSample]) -> Tensor:
    """Mean masked loss over every evaluated position in the batch."""
    total = None
    count = 0
    for sample in batch:
        pred = model.forward_sequence(sample.inputs)
        term, n = masked_loss_terms(pred, sample)
        total = term if total is None else T.add(total, term)
        count += n
    return T.scale(total, 1.0 / count)


def evaluate(model, samples: list[TaskSample]) -> float:
    """Masked task error (the reported metric, not the training loss)."""
    preds = [model.forward_sequence(s.inputs).data for s in samples]
    return score(samples, preds)


def snapshot_params(params) -> list[np.ndarray]:
    return [p.data.copy() for p in params]


def restore_params(params, snap) -> None:
    for p, s in zip(params, snap):
        p.data[...] = s


def train(model, data: TaskData, cfg: TrainConfig, task: str = "",
          config_id: str = "", size: str = "") -> RunRecord:
    """Full protocol: seeded shuffling, mini-batches of whole sequences,
    clipped AdamW steps, per-epoch validation, patience-based early stop,
    best-validation restore, one test evaluation."""
    started = time.monotonic()
    params = model.parameters()
    opt = AdamW(params, lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    shuffle_rng = rng_for(cfg.seed, "shuffle")
    best_val = math.inf
    best_snap = snapshot_params(params)
    since_best = 0
    epochs_run = 0
    status = "ok"

    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(data.train))
        failed = None
        for lo in range(0, len(order), cfg.batch_size):
            batch = [data.train[i] for i in order[lo:lo + cfg.batch_size]]
            tape = Tape()
            with tape:
                loss = batch_loss(model, batch)
            if not np.isfinite(loss.data[0, 0]):
                failed = f"non-finite loss at epoch {epoch}"
                break
            opt.zero_grad()
            backward(loss, tape)
            clip_global_norm(params, cfg.clip_norm)
            opt.step()
        epochs_run = epoch + 1
        if failed:
            status = f"failed: {failed}"
            break
        val = evaluate(model, data.valid)
        if val < best_val:
            best_val = val
            best_snap = snapshot_params(params)
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    restore_params(params, best_snap)
    if status == "ok":
        test_error = evaluate(model, data.test)
        val_error = best_val
    else:
        test_error = math.nan
        val_error = best_val if math.isfinite(best_val) else math.nan
    return RunRecord(
        task=task, family=model.family, size=size, config_id=config_id,
        learning_rate=cfg.learning_rate, seed=cfg.seed,
        val_error=float(val_error), test_error=float(test_error),
        epochs_run=epochs_run, wall_ms=int(1000 * (time.monotonic() - started)),
        status=status,
    )
