"""Mini-batch training for the neural sequence heads."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Optional, Sequence

import numpy as np

from ..base import check_label_matrix, check_random_state
from ..evaluation import decide_matrix
from ..features.embeddings import EmbeddingSequence, stack_sequences


class AdamW:
    """Adam with decoupled weight decay applied before each moment step."""

    def __init__(self, params, learning_rate, *, beta1=0.9, beta2=0.999,
                 epsilon=1e-6, weight_decay=0.01):
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {learning_rate}")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        if weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {weight_decay}")
        self.params = params
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.weight_decay = float(weight_decay)
        self._moment1 = {name: np.zeros_like(p) for name, p in params.items()}
        self._moment2 = {name: np.zeros_like(p) for name, p in params.items()}
        self._step = 0

    def step(self, grads) -> None:
        if set(grads) != set(self.params):
            raise ValueError("gradient names do not match optimizer parameters")
        self._step += 1
        bias1 = 1.0 - self.beta1 ** self._step
        bias2 = 1.0 - self.beta2 ** self._step
        for name, param in self.params.items():
            grad = grads[name]
            param *= 1.0 - self.learning_rate * self.weight_decay
            m = self._moment1[name]
            v = self._moment2[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= self.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + self.epsilon)


@dataclass(frozen=True)
class SequenceBatch:
    """Stacked embedding sequences with masks and 0/1 label targets."""

    vectors: np.ndarray
    mask: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        mask = np.asarray(self.mask)
        if vectors.ndim != 3:
            raise ValueError("vectors must have shape (batch, tokens, dim)")
        if mask.shape != vectors.shape[:2] or mask.dtype != np.bool_:
            raise ValueError("mask must be boolean with shape (batch, tokens)")
        if not np.isfinite(vectors).all():
            raise ValueError("vectors must be finite")
        targets = check_label_matrix(
            np.asarray(self.targets), vectors.shape[0]
        ).astype(np.float64)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "targets", targets)

    @classmethod
    def from_sequences(cls, sequences: Sequence[EmbeddingSequence], targets):
        vectors, mask = stack_sequences(sequences)
        return cls(vectors=vectors, mask=mask, targets=np.asarray(targets))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_labels(self) -> int:
        return self.targets.shape[1]


@dataclass(frozen=True)
class TrainResult:
    model: object
    log: tuple
    best_epoch: int
    best_val_micro_f1: float


def _micro_f1(model, batch: SequenceBatch, chunk: int) -> float:
    thresholds = np.full(batch.n_labels, 0.5)
    pieces = []
    for start in range(0, len(batch), chunk):
        stop = start + chunk
        pieces.append(model.forward(batch.vectors[start:stop], batch.mask[start:stop]))
    decided = decide_matrix(np.vstack(pieces), thresholds)
    gold = batch.targets.astype(bool)
    tp = int((decided & gold).sum())
    fp = int((decided & ~gold).sum())
    fn = int((~decided & gold).sum())
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def train(model, train_batch: SequenceBatch, val_batch: SequenceBatch, *,
          num_epochs=30, batch_size=100, learning_rate=1e-4, epsilon=1e-6,
          weight_decay=0.01, seed=0,
          log_stream: Optional[IO[str]] = None) -> TrainResult:
    """Optimize with AdamW and keep the parameters of the best epoch.

    The best epoch is the one with the highest validation micro-F1 at a
    0.5 decision threshold; earlier epochs win ties.  One JSON line per
    epoch (epoch, loss, val_micro_f1) goes to ``log_stream`` when given.
    """
    if num_epochs < 1:
        raise ValueError(f"num_epochs must be >= 1, got {num_epochs}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if train_batch.n_labels != model.n_labels or val_batch.n_labels != model.n_labels:
        raise ValueError("target width does not match the model's label count")
    rng = check_random_state(seed)
    optimizer = AdamW(model.params, learning_rate, epsilon=epsilon,
                      weight_decay=weight_decay)
    best_params = model.copy_params()
    best_epoch = 0
    best_f1 = -1.0
    entries = []
    n = len(train_batch)
    for epoch in range(1, num_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        # overflow surfaces as a non-finite epoch loss, which aborts below
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, batch_size):
                idx = order[start:start + batch_size]
                loss, grads = model.forward_backward(
                    train_batch.vectors[idx], train_batch.mask[idx],
                    train_batch.targets[idx],
                )
                optimizer.step(grads)
                total += loss * len(idx)
        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            model.load_params(best_params)
            raise RuntimeError(
                f"training aborted at epoch {epoch}: non-finite loss; model "
                f"restored to last good checkpoint (epoch {best_epoch})"
            )
        val_f1 = _micro_f1(model, val_batch, batch_size)
        entry = {"epoch": epoch, "loss": float(epoch_loss),
                 "val_micro_f1": float(val_f1)}
        entries.append(entry)
        if log_stream is not None:
            log_stream.write(json.dumps(entry) + "\n")
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best_params = model.copy_params()
    model.load_params(best_params)
    return TrainResult(model=model, log=tuple(entries), best_epoch=best_epoch,
                       best_val_micro_f1=best_f1)
