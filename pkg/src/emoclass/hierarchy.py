"""Confusion structure and dendrograms over emotion activations.

A row-normalized confusion matrix records which emotions a model decides
when an example carries a given gold emotion.  Agglomerative clustering
over its rows (Euclidean distance, configurable linkage) recovers the
latent grouping of emotions; pooling rows by category yields the same
picture at category level.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .evaluation import PredictionSet, decide_matrix
from .taxonomy import EmotionTaxonomy

LINKAGES = ("single", "complete", "average")

_ROW_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square row-normalized matrix; rows/columns share one label order."""

    label_names: tuple[str, ...]
    matrix: np.ndarray
    row_counts: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=np.float64)
        counts = np.asarray(self.row_counts, dtype=np.float64)
        n = len(self.label_names)
        if len(set(self.label_names)) != n:
            raise ValueError("label names must be unique")
        if matrix.shape != (n, n):
            raise ValueError(f"matrix must have shape ({n}, {n})")
        if (matrix < 0).any():
            raise ValueError("matrix entries must be nonnegative")
        if counts.shape != (n,) or (counts < 0).any():
            raise ValueError("row_counts must be nonnegative with one entry per row")
        sums = matrix.sum(axis=1)
        observed = counts > 0
        if np.abs(sums[observed] - 1.0).max(initial=0.0) > _ROW_SUM_TOLERANCE:
            raise ValueError("observed rows must sum to 1")
        if sums[~observed].max(initial=0.0) != 0.0:
            raise ValueError("unobserved rows must be all zero")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "row_counts", counts)

    @property
    def n_labels(self) -> int:
        return len(self.label_names)

    @property
    def zero_rows(self) -> tuple[str, ...]:
        return tuple(
            name
            for name, count in zip(self.label_names, self.row_counts)
            if count == 0
        )


def build_confusion(
    pred: PredictionSet,
    thresholds: Sequence[float],
    *,
    argmax_only: bool = False,
) -> ConfusionMatrix:
    """Count decided labels per gold label and normalize each row.

    Multi-gold examples contribute one count per gold label.  With
    ``argmax_only`` each example contributes its single top-scoring
    label instead of the full decided set.
    """
    names = pred.taxonomy.emotions
    n = len(names)
    counts = np.zeros((n, n), dtype=np.float64)
    if argmax_only:
        decided = np.zeros((len(pred), n), dtype=bool)
        decided[np.arange(len(pred)), pred.scores.argmax(axis=1)] = True
    else:
        decided = decide_matrix(pred.scores, thresholds)
    for row, gold in zip(decided, pred.golds):
        for g in gold:
            counts[g] += row
    row_sums = counts.sum(axis=1)
    matrix = np.zeros_like(counts)
    observed = row_sums > 0
    matrix[observed] = counts[observed] / row_sums[observed, np.newaxis]
    return ConfusionMatrix(label_names=names, matrix=matrix, row_counts=row_sums)


def pool_categories(
    confusion: ConfusionMatrix, taxonomy: EmotionTaxonomy
) -> ConfusionMatrix:
    """Aggregate a per-emotion confusion to category level.

    Row blocks are combined weighted by row observation counts; column
    blocks are summed; rows are renormalized.
    """
    if confusion.label_names != taxonomy.emotions:
        raise ValueError("taxonomy does not match the confusion matrix labels")
    cats = taxonomy.categories
    members = [list(taxonomy.category_members(a)) for a in range(len(cats))]
    k = len(cats)
    pooled = np.zeros((k, k), dtype=np.float64)
    pooled_counts = np.zeros(k, dtype=np.float64)
    for a, rows in enumerate(members):
        weights = confusion.row_counts[rows]
        pooled_counts[a] = weights.sum()
        if pooled_counts[a] == 0:
            continue
        combined = weights @ confusion.matrix[rows] / pooled_counts[a]
        for b, cols in enumerate(members):
            pooled[a, b] = combined[cols].sum()
        pooled[a] /= pooled[a].sum()
    return ConfusionMatrix(
        label_names=cats, matrix=pooled, row_counts=pooled_counts
    )


def write_confusion_csv(confusion: ConfusionMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("", *confusion.label_names))
        for name, row in zip(confusion.label_names, confusion.matrix):
            writer.writerow((name, *(repr(float(v)) for v in row)))


# --- dendrograms ------------------------------------------------------------


@dataclass(frozen=True)
class Dendrogram:
    """Binary merge tree; node ids are leaves 0..n-1 then merges n, n+1, ...

    Each merge is ``(left_id, right_id, height)``; merge k creates node
    ``n + k``.
    """

    leaf_names: tuple[str, ...]
    merges: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        n = len(self.leaf_names)
        if n < 1:
            raise ValueError("dendrogram needs at least one leaf")
        if len(set(self.leaf_names)) != n:
            raise ValueError("leaf names must be unique")
        if len(self.merges) != n - 1:
            raise ValueError(
                f"{n} leaves require {n - 1} merges, got {len(self.merges)}"
            )
        heights = {}
        used = set()
        for k, (left, right, height) in enumerate(self.merges):
            node = n + k
            if left == right:
                raise ValueError(f"merge {k} joins a node with itself")
            if not np.isfinite(height) or height < 0:
                raise ValueError(f"merge {k} height must be finite and >= 0")
            for child in (left, right):
                if not 0 <= child < node:
                    raise ValueError(f"merge {k} references unknown node {child}")
                if child in used:
                    raise ValueError(f"node {child} is merged twice")
                used.add(child)
                # heights never decrease toward the root
                if heights.get(child, 0.0) > height + _ROW_SUM_TOLERANCE:
                    raise ValueError(
                        f"merge {k} height {height} is below its child's height"
                    )
            heights[node] = float(height)

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_names)

    @property
    def heights(self) -> tuple[float, ...]:
        return tuple(m[2] for m in self.merges)

    @property
    def root(self) -> int:
        return self.n_leaves + len(self.merges) - 1


def _cluster_distance(linkage: str, block: np.ndarray) -> float:
    if linkage == "single":
        return float(block.min())
    if linkage == "complete":
        return float(block.max())
    return float(block.mean())


def agglomerate(
    rows: np.ndarray, names: Sequence[str], linkage: str = "average"
) -> Dendrogram:
    """Cluster matrix rows bottom-up by Euclidean distance.

    Ties in the candidate merge distance go to the lexicographically
    smallest (id, id) pair, making the output fully deterministic.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    rows = np.asarray(rows, dtype=np.float64)
    names = tuple(names)
    if rows.ndim != 2 or rows.shape[0] != len(names):
        raise ValueError("one name per matrix row required")
    n = rows.shape[0]
    if n < 2:
        raise ValueError("clustering needs at least two rows")
    diffs = rows[:, np.newaxis, :] - rows[np.newaxis, :, :]
    dist = np.sqrt((diffs * diffs).sum(axis=2))
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    merges = []
    for k in range(n - 1):
        active = sorted(members)
        best = None
        for ai, a in enumerate(active):
            for b in active[ai + 1:]:
                d = _cluster_distance(linkage, dist[np.ix_(members[a], members[b])])
                if best is None or d < best[0]:
                    best = (d, a, b)
        d, a, b = best
        merges.append((a, b, d))
        members[n + k] = members.pop(a) + members.pop(b)
    return Dendrogram(leaf_names=names, merges=tuple(merges))


def emotion_dendrogram(
    confusion: ConfusionMatrix, linkage: str = "average"
) -> tuple[Dendrogram, tuple[str, ...]]:
    """Cluster observed confusion rows; returns (tree, excluded names).

    Rows that were never observed have no meaningful activation pattern
    and are left out.
    """
    keep = [i for i, c in enumerate(confusion.row_counts) if c > 0]
    excluded = tuple(
        name for i, name in enumerate(confusion.label_names) if i not in set(keep)
    )
    names = tuple(confusion.label_names[i] for i in keep)
    tree = agglomerate(confusion.matrix[keep], names, linkage)
    return tree, excluded


def category_activation_dendrogram(
    confusion: ConfusionMatrix,
    taxonomy: EmotionTaxonomy,
    linkage: str = "average",
) -> Dendrogram:
    """Max-pool confusion rows within each gold category, then cluster."""
    if confusion.label_names != taxonomy.emotions:
        raise ValueError("taxonomy does not match the confusion matrix labels")
    pooled = np.zeros((len(taxonomy.categories), confusion.n_labels))
    for a in range(len(taxonomy.categories)):
        rows = list(taxonomy.category_members(a))
        pooled[a] = confusion.matrix[rows].max(axis=0)
    return agglomerate(pooled, taxonomy.categories, linkage)


# --- JSON round trip --------------------------------------------------------


def export_dendrogram(dendrogram: Dendrogram) -> dict:
    """Nested {name | children, height} document for the merge tree."""
    n = dendrogram.n_leaves

    def node(idx: int) -> dict:
        if idx < n:
            return {"name": dendrogram.leaf_names[idx], "height": 0.0}
        left, right, height = dendrogram.merges[idx - n]
        return {"children": [node(left), node(right)], "height": float(height)}

    return node(dendrogram.root)


def parse_dendrogram(document: dict) -> Dendrogram:
    """Inverse of export_dendrogram; validates the document shape."""
    leaf_names: list[str] = []
    merges: list[tuple[int, int, float]] = []
    pending: list[tuple[int, int, float]] = []

    def walk(node) -> int:
        if not isinstance(node, dict):
            raise ValueError("dendrogram nodes must be objects")
        height = node.get("height")
        if not isinstance(height, (int, float)) or isinstance(height, bool):
            raise ValueError("every node needs a numeric height")
        if "name" in node:
            if "children" in node:
                raise ValueError("a node is either a leaf or an internal node")
            leaf_names.append(str(node["name"]))
            return len(leaf_names) - 1
        children = node.get("children")
        if not isinstance(children, list) or len(children) != 2:
            raise ValueError("internal nodes need exactly two children")
        left = walk(children[0])
        right = walk(children[1])
        pending.append((left, right, float(height)))
        return -len(pending)  # placeholder, fixed up below

    root = walk(document)
    n = len(leaf_names)
    if n == 0:
        raise ValueError("dendrogram document has no leaves")
    # merge placeholders are negative; rewrite them to n, n+1, ... in
    # creation (post-order) order
    def fix(i: int) -> int:
        return i if i >= 0 else n + (-i - 1)

    for left, right, height in pending:
        merges.append((fix(left), fix(right), height))
    return Dendrogram(leaf_names=tuple(leaf_names), merges=tuple(merges))
