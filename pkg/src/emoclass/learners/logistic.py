"""One-vs-rest logistic regression trained by SGD on sparse features.

The learning rate follows the inverse-scaling schedule eta_t = 1/(alpha*(t+t0))
with t counting samples seen and t0 chosen so that the initial step size is
of the order of the typical weight scale. Loss and gradient are exposed as a
pure function so optimization and calculus can be tested separately.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..base import (
    BaseEstimator,
    check_feature_matrix,
    check_is_fitted,
    check_label_matrix,
    check_random_state,
)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log1p_exp(z: np.ndarray) -> np.ndarray:
    """log(1 + exp(z)) without overflow."""
    out = np.where(z > 0, z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return out


def logistic_loss_and_grad(
    W: np.ndarray, b: np.ndarray, X: sp.csr_matrix, Y: np.ndarray, alpha: float
):
    """Mean multi-label logistic loss with L2(alpha) on weights (not bias).

    Returns (loss, grad_W, grad_b). The loss is averaged over examples and
    summed over labels; the L2 term is alpha/2 * ||W||^2.
    """
    n = X.shape[0]
    Z = X @ W.T + b
    Yf = Y.astype(np.float64)
    loss_data = float(np.sum(_log1p_exp(Z) - Yf * Z)) / n
    loss = loss_data + 0.5 * alpha * float(np.sum(W * W))
    R = (_sigmoid(Z) - Yf) / n
    grad_W = (X.T @ R).T + alpha * W
    grad_b = R.sum(axis=0)
    return loss, grad_W, grad_b


def _schedule_t0(alpha: float) -> float:
    """Warm-start offset making the first step size match the weight scale."""
    typical_w = np.sqrt(1.0 / np.sqrt(alpha))
    initial_dloss = 1.0 / (1.0 + np.exp(-typical_w))
    eta0 = typical_w / max(1.0, initial_dloss)
    return 1.0 / (eta0 * alpha)


class SgdLogisticRegression(BaseEstimator):
    """Multi-label logistic regression: sigmoid(X @ W.T + b) per label."""

    def __init__(
        self,
        alpha: float = 1e-4,
        epochs: int = 100,
        tolerance: float = 0.001,
        minibatch_size: int = 32,
        seed: int | None = 0,
    ):
        self.alpha = alpha
        self.epochs = epochs
        self.tolerance = tolerance
        self.minibatch_size = minibatch_size
        self.seed = seed

    def fit(self, X, Y) -> "SgdLogisticRegression":
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be >= 1")
        X = check_feature_matrix(X)
        if X.shape[0] == 0:
            raise ValueError("cannot fit on an empty dataset")
        Y = check_label_matrix(np.asarray(Y), X.shape[0])
        n, n_features = X.shape
        n_labels = Y.shape[1]
        rng = check_random_state(self.seed)

        W = np.zeros((n_labels, n_features))
        b = np.zeros(n_labels)
        # alpha=0 has no schedule; fall back to a small constant offset
        t0 = _schedule_t0(self.alpha) if self.alpha > 0 else 1.0
        t = 0.0
        Yf = Y.astype(np.float64)
        prev_loss = np.inf
        stopped_epoch = self.epochs
        # overflow here surfaces as a non-finite epoch loss, which aborts below
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(self.epochs):
                order = rng.permutation(n)
                epoch_loss = 0.0
                for start in range(0, n, self.minibatch_size):
                    idx = order[start : start + self.minibatch_size]
                    Xb = X[idx]
                    Yb = Yf[idx]
                    m = len(idx)
                    Z = Xb @ W.T + b
                    epoch_loss += float(np.sum(_log1p_exp(Z) - Yb * Z))
                    R = (_sigmoid(Z) - Yb) / m
                    eta = (
                        1.0 / (self.alpha * (t + t0))
                        if self.alpha > 0
                        else 1.0 / (t + t0)
                    )
                    if self.alpha > 0:
                        W *= 1.0 - eta * self.alpha
                    W -= eta * (Xb.T @ R).T
                    b -= eta * R.sum(axis=0)
                    t += m
                epoch_loss = epoch_loss / n + 0.5 * self.alpha * float(
                    np.sum(W * W)
                )
                if not np.isfinite(epoch_loss):
                    raise RuntimeError(
                        f"training diverged at epoch {epoch + 1}: non-finite loss "
                        f"(alpha={self.alpha}, last eta={eta:.3g})"
                    )
                if prev_loss - epoch_loss < self.tolerance:
                    stopped_epoch = epoch + 1
                    break
                prev_loss = epoch_loss

        self.coef_ = W
        self.intercept_ = b
        self.n_features_ = n_features
        self.n_labels_ = n_labels
        self.stopped_epoch_ = stopped_epoch
        self.final_loss_ = epoch_loss
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_feature_matrix(X, self.n_features_)
        return X @ self.coef_.T + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))
