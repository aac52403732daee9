"""Incremental random forest of multi-output CART trees on sparse features.

Each call to partial_fit grows a fixed number of trees on that batch alone
(up to max_trees), so the forest adapts to streams without revisiting old
data. One tree predicts all labels: split gain is the summed per-label
binary entropy reduction. Zero feature values never appear in the CSR data,
so threshold search scans only stored values and buckets zeros left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import xlogy

from ..base import (
    BaseEstimator,
    check_feature_matrix,
    check_is_fitted,
    check_label_matrix,
    check_random_state,
)


def _entropy_sum(pos: np.ndarray, total: float) -> np.ndarray:
    """Summed per-label binary entropy; pos has shape (..., N)."""
    p = pos / total
    q = 1.0 - p
    return -(xlogy(p, p) + xlogy(q, q)).sum(axis=-1)


@dataclass
class _Tree:
    feature: np.ndarray    # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # (n_nodes, n_labels) leaf frequencies

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth_of(self, node: int = 0) -> int:
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth_of(self.left[node]), self.depth_of(self.right[node]))


class _TreeBuilder:
    def __init__(self, n_labels, max_depth, n_candidates, rng):
        self.n_labels = n_labels
        self.max_depth = max_depth
        self.n_candidates = n_candidates
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[np.ndarray] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(np.zeros(self.n_labels))
        return len(self.feature) - 1

    def build(self, X: sp.csr_matrix, Y: np.ndarray) -> _Tree:
        root = self._new_node()
        self._split(root, X, Y, depth=0)
        return _Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.vstack(self.value),
        )

    def _split(self, node: int, X: sp.csr_matrix, Y: np.ndarray, depth: int) -> None:
        m = X.shape[0]
        pos = Y.sum(axis=0).astype(np.float64)
        self.value[node] = pos / m
        parent_entropy = float(_entropy_sum(pos, m))
        if depth >= self.max_depth or m < 2 or parent_entropy <= 1e-12:
            return

        n_features = X.shape[1]
        k = min(self.n_candidates, n_features)
        candidates = np.sort(self.rng.choice(n_features, size=k, replace=False))
        csc = X.tocsc()
        best_gain, best_feature, best_threshold = 1e-12, -1, 0.0
        for f in candidates:
            start, end = csc.indptr[f], csc.indptr[f + 1]
            vals = csc.data[start:end]
            rows = csc.indices[start:end]
            nnz = len(vals)
            if nnz == 0:
                continue
            n_zero = m - nnz
            order = np.argsort(vals, kind="stable")
            v_sorted = vals[order]
            pos_sorted = Y[rows[order]].astype(np.float64)
            cum = np.vstack([np.zeros(self.n_labels), np.cumsum(pos_sorted, axis=0)])
            zero_pos = pos - cum[-1]

            # boundary j puts the j smallest nonzeros (plus all zeros) left
            boundaries = [
                j
                for j in range(nnz)
                if (j > 0 and v_sorted[j - 1] < v_sorted[j]) or (j == 0 and n_zero > 0)
            ]
            if not boundaries:
                continue
            b = np.asarray(boundaries)
            left_pos = zero_pos + cum[b]
            left_n = (n_zero + b).astype(np.float64)
            right_pos = pos - left_pos
            right_n = m - left_n
            weighted = (
                left_n * _entropy_sum(left_pos, left_n[:, np.newaxis])
                + right_n * _entropy_sum(right_pos, right_n[:, np.newaxis])
            ) / m
            j_best = int(np.argmin(weighted))
            gain = parent_entropy - float(weighted[j_best])
            if gain > best_gain:
                jb = boundaries[j_best]
                prev = v_sorted[jb - 1] if jb > 0 else 0.0
                best_gain = gain
                best_feature = int(f)
                best_threshold = (prev + float(v_sorted[jb])) / 2.0
        if best_feature < 0:
            return

        start, end = csc.indptr[best_feature], csc.indptr[best_feature + 1]
        go_right = np.zeros(m, dtype=bool)
        col_rows = csc.indices[start:end]
        col_vals = csc.data[start:end]
        go_right[col_rows[col_vals > best_threshold]] = True
        if not go_right.any() or go_right.all():
            return

        self.feature[node] = best_feature
        self.threshold[node] = best_threshold
        left_id = self._new_node()
        right_id = self._new_node()
        self.left[node] = left_id
        self.right[node] = right_id
        keep_left = ~go_right
        self._split(left_id, X[keep_left], Y[keep_left], depth + 1)
        self._split(right_id, X[go_right], Y[go_right], depth + 1)


def _tree_predict(tree: _Tree, csc: sp.csc_matrix, out: np.ndarray) -> None:
    n = csc.shape[0]
    stack = [(0, np.arange(n))]
    while stack:
        node, active = stack.pop()
        if active.size == 0:
            continue
        f = tree.feature[node]
        if f < 0:
            out[active] += tree.value[node]
            continue
        start, end = csc.indptr[f], csc.indptr[f + 1]
        col_rows = csc.indices[start:end]
        col_vals = csc.data[start:end]
        pos = np.searchsorted(col_rows, active)
        pos_clipped = np.minimum(pos, len(col_rows) - 1) if len(col_rows) else pos * 0
        hit = (
            (pos < len(col_rows)) & (col_rows[pos_clipped] == active)
            if len(col_rows)
            else np.zeros(active.shape, dtype=bool)
        )
        values = np.zeros(active.shape)
        values[hit] = col_vals[pos_clipped[hit]]
        right_mask = values > tree.threshold[node]
        stack.append((tree.left[node], active[~right_mask]))
        stack.append((tree.right[node], active[right_mask]))


class IncrementalRandomForest(BaseEstimator):
    """Entropy-split forest grown batch by batch; scores average leaf rates."""

    def __init__(
        self,
        max_trees: int,
        trees_per_batch: int | None = None,
        max_depth: int = 7,
        feature_fraction: float = 0.05,
        seed: int | None = 0,
    ):
        self.max_trees = max_trees
        self.trees_per_batch = trees_per_batch
        self.max_depth = max_depth
        self.feature_fraction = feature_fraction
        self.seed = seed

    def _check_params(self) -> None:
        if self.max_trees < 1:
            raise ValueError("max_trees must be >= 1")
        if self.trees_per_batch is not None and self.trees_per_batch < 1:
            raise ValueError("trees_per_batch must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.feature_fraction <= 1:
            raise ValueError("feature_fraction must lie in (0, 1]")

    def partial_fit(self, X, Y, n_labels: int | None = None) -> "IncrementalRandomForest":
        self._check_params()
        X = check_feature_matrix(X, getattr(self, "n_features_", None))
        if X.shape[0] == 0:
            raise ValueError("cannot grow trees on an empty batch")
        if n_labels is None:
            n_labels = getattr(self, "n_labels_", None)
            if n_labels is None:
                raise ValueError("n_labels required on the first batch")
        Y = check_label_matrix(np.asarray(Y), X.shape[0], n_labels)
        if not hasattr(self, "trees_"):
            self.trees_: list[_Tree] = []
            self.n_labels_ = n_labels
            self.n_features_ = X.shape[1]
            self.random_state_ = check_random_state(self.seed)

        X.sort_indices()
        per_batch = self.trees_per_batch or self.max_trees
        n_candidates = max(1, math.ceil(self.feature_fraction * X.shape[1]))
        m = X.shape[0]
        for _ in range(per_batch):
            if len(self.trees_) >= self.max_trees:
                break
            boot = self.random_state_.integers(0, m, size=m)
            builder = _TreeBuilder(
                n_labels, self.max_depth, n_candidates, self.random_state_
            )
            Xb = X[boot]
            Xb.sort_indices()
            self.trees_.append(builder.build(Xb, Y[boot]))
        return self

    def fit(self, X, Y) -> "IncrementalRandomForest":
        for attr in ("trees_", "n_labels_", "n_features_", "random_state_"):
            if hasattr(self, attr):
                delattr(self, attr)
        Y = np.asarray(Y)
        return self.partial_fit(X, Y, n_labels=Y.shape[1])

    @property
    def n_trees_(self) -> int:
        check_is_fitted(self, "trees_")
        return len(self.trees_)

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "trees_")
        if not self.trees_:
            raise ValueError("forest has no trees")
        X = check_feature_matrix(X, self.n_features_)
        csc = X.tocsc()
        csc.sort_indices()
        out = np.zeros((X.shape[0], self.n_labels_))
        for tree in self.trees_:
            _tree_predict(tree, csc, out)
        return out / len(self.trees_)
