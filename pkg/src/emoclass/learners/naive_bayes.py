"""One-vs-rest multinomial Naive Bayes over sparse count features.

Each label gets a binary multinomial event model (label present vs absent).
Fitting only accumulates count statistics, so batch order cannot matter;
scoring maps the log-odds of the two classes through a sigmoid.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..base import (
    BaseEstimator,
    check_feature_matrix,
    check_is_fitted,
    check_label_matrix,
)


class MultinomialNaiveBayes(BaseEstimator):
    """Multi-label Naive Bayes with Lidstone smoothing ``alpha``."""

    def __init__(self, alpha: float = 0.1):
        self.alpha = alpha

    def _check_alpha(self) -> None:
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def partial_fit(self, X, Y, n_labels: int | None = None) -> "MultinomialNaiveBayes":
        """Accumulate per-label feature and document counts from one batch."""
        self._check_alpha()
        X = check_feature_matrix(X, getattr(self, "n_features_", None))
        if n_labels is None:
            n_labels = getattr(self, "n_labels_", None)
            if n_labels is None:
                raise ValueError("n_labels required on the first batch")
        Y = check_label_matrix(Y, X.shape[0], n_labels)
        if not hasattr(self, "n_labels_"):
            self.n_labels_ = n_labels
            self.n_features_ = X.shape[1]
            self.feature_count_pos_ = np.zeros((n_labels, X.shape[1]))
            self.feature_count_total_ = np.zeros(X.shape[1])
            self.doc_count_pos_ = np.zeros(n_labels)
            self.doc_count_ = 0
        self.feature_count_pos_ += (X.T @ Y.astype(np.float64)).T
        self.feature_count_total_ += np.asarray(X.sum(axis=0)).ravel()
        self.doc_count_pos_ += Y.sum(axis=0)
        self.doc_count_ += X.shape[0]
        return self

    def fit(self, X, Y) -> "MultinomialNaiveBayes":
        for attr in (
            "n_labels_",
            "n_features_",
            "feature_count_pos_",
            "feature_count_total_",
            "doc_count_pos_",
            "doc_count_",
        ):
            if hasattr(self, attr):
                delattr(self, attr)
        Y = np.asarray(Y)
        return self.partial_fit(X, Y, n_labels=Y.shape[1])

    def _log_params(self):
        alpha = self.alpha
        fc_pos = self.feature_count_pos_
        fc_neg = self.feature_count_total_[np.newaxis, :] - fc_pos
        n_features = self.n_features_
        log_lik_pos = np.log(fc_pos + alpha) - np.log(
            fc_pos.sum(axis=1, keepdims=True) + alpha * n_features
        )
        log_lik_neg = np.log(fc_neg + alpha) - np.log(
            fc_neg.sum(axis=1, keepdims=True) + alpha * n_features
        )
        prior_pos = (self.doc_count_pos_ + alpha) / (self.doc_count_ + 2 * alpha)
        log_prior_odds = np.log(prior_pos) - np.log1p(-prior_pos)
        return log_lik_pos, log_lik_neg, log_prior_odds

    def decision_function(self, X) -> np.ndarray:
        """Per-label posterior log-odds."""
        check_is_fitted(self, "doc_count_")
        X = check_feature_matrix(X, self.n_features_)
        log_lik_pos, log_lik_neg, log_prior_odds = self._log_params()
        return X @ (log_lik_pos - log_lik_neg).T + log_prior_odds

    def predict_proba(self, X) -> np.ndarray:
        logits = self.decision_function(X)
        return 1.0 / (1.0 + np.exp(-logits))
