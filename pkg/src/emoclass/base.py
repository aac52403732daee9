"""Estimator base class and input validation helpers.

Follows the scikit-learn parameter conventions (constructor args are
hyperparameters, fitted state uses trailing-underscore attributes) so the
learners compose with pipelines and grid-search tooling that relies on
``get_params`` / ``set_params``.
"""

from __future__ import annotations

import inspect
from typing import Any

import numpy as np
import scipy.sparse as sp


class NotFittedError(RuntimeError):
    """Raised when predict/score is called before fit."""


class BaseEstimator:
    """Minimal sklearn-compatible estimator base.

    ``get_params`` introspects the constructor signature, so subclasses must
    store every constructor argument under the same attribute name and do no
    other work in ``__init__``.
    """

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self, deep: bool = True) -> dict[str, Any]:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params: Any) -> "BaseEstimator":
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(
                    f"invalid parameter {key!r} for {type(self).__name__}; "
                    f"valid parameters are {sorted(valid)}"
                )
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_is_fitted(estimator: Any, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted; call fit before scoring"
        )


def check_feature_matrix(X: Any, n_features: int | None = None) -> sp.csr_matrix:
    """Validate and canonicalize a feature matrix to CSR float64."""
    if not sp.issparse(X):
        X = sp.csr_matrix(np.asarray(X, dtype=np.float64))
    X = X.tocsr().astype(np.float64, copy=False)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d feature matrix, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"feature dimension mismatch: expected {n_features}, got {X.shape[1]}"
        )
    if not np.all(np.isfinite(X.data)):
        raise ValueError("feature matrix contains non-finite values")
    return X


def check_label_matrix(Y: Any, n_rows: int, n_labels: int | None = None) -> np.ndarray:
    """Validate a binary indicator matrix of shape (n_rows, n_labels)."""
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise ValueError(f"expected a 2-d label indicator matrix, got shape {Y.shape}")
    if Y.shape[0] != n_rows:
        raise ValueError(f"X has {n_rows} rows but Y has {Y.shape[0]}")
    if n_labels is not None and Y.shape[1] != n_labels:
        raise ValueError(
            f"label dimension mismatch: expected {n_labels}, got {Y.shape[1]}"
        )
    uniq = np.unique(Y)
    if not np.isin(uniq, (0, 1)).all():
        raise ValueError("label matrix must contain only 0/1 entries")
    return Y.astype(bool, copy=False)


def check_random_state(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
