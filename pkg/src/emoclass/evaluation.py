"""Multi-label metrics, threshold tuning, random baseline, category pooling.

Decision rule: a label is predicted when its score meets its per-label
threshold; if nothing clears, the argmax label is emitted so every example
predicts at least one label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .base import check_random_state
from .taxonomy import EmotionTaxonomy

DEFAULT_GRID: tuple[float, ...] = tuple(round(0.05 * k, 2) for k in range(1, 20))


@dataclass(frozen=True)
class PredictionSet:
    """Scores in [0,1]^N with gold label sets over a shared taxonomy."""

    taxonomy: EmotionTaxonomy
    scores: np.ndarray
    golds: tuple[frozenset[int], ...]
    ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", scores)
        n_labels = self.taxonomy.n_emotions
        if scores.ndim != 2 or scores.shape[1] != n_labels:
            raise ValueError(f"scores must have shape (n, {n_labels})")
        if not np.isfinite(scores).all():
            raise ValueError("scores must be finite")
        if scores.min(initial=0.0) < 0.0 or scores.max(initial=0.0) > 1.0:
            raise ValueError("scores must lie in [0, 1]")
        if len(self.golds) != scores.shape[0]:
            raise ValueError("one gold label set per example required")
        for gold in self.golds:
            for label in gold:
                if not 0 <= label < n_labels:
                    raise ValueError(f"gold label {label} out of range")
        if not self.ids:
            object.__setattr__(
                self, "ids", tuple(str(i) for i in range(scores.shape[0]))
            )
        elif len(self.ids) != scores.shape[0]:
            raise ValueError("one id per example required")

    def __len__(self) -> int:
        return self.scores.shape[0]

    def gold_matrix(self) -> np.ndarray:
        G = np.zeros(self.scores.shape, dtype=bool)
        for i, gold in enumerate(self.golds):
            for label in gold:
                G[i, label] = True
        return G


def save_predictions_jsonl(pred: PredictionSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for i in range(len(pred)):
            row = {
                "id": pred.ids[i],
                "scores": [float(s) for s in pred.scores[i]],
                "gold": sorted(pred.golds[i]),
            }
            f.write(json.dumps(row) + "\n")


def load_predictions_jsonl(path: str | Path, taxonomy: EmotionTaxonomy) -> PredictionSet:
    ids, scores, golds = [], [], []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            ids.append(row["id"])
            scores.append(row["scores"])
            golds.append(frozenset(row["gold"]))
    return PredictionSet(taxonomy, np.asarray(scores), tuple(golds), tuple(ids))


def check_thresholds(thresholds: Sequence[float], n_labels: int) -> np.ndarray:
    t = np.asarray(thresholds, dtype=np.float64)
    if t.shape != (n_labels,):
        raise ValueError(f"thresholds must have shape ({n_labels},)")
    if (t <= 0).any() or (t >= 1).any():
        raise ValueError("thresholds must lie in (0, 1)")
    return t


def decide(scores: np.ndarray, thresholds: Sequence[float]) -> frozenset[int]:
    """Labels meeting their threshold; falls back to the argmax if none do."""
    scores = np.asarray(scores, dtype=np.float64)
    t = check_thresholds(thresholds, scores.shape[0])
    hit = np.nonzero(scores >= t)[0]
    if hit.size == 0:
        return frozenset({int(np.argmax(scores))})
    return frozenset(int(i) for i in hit)


def decide_matrix(scores: np.ndarray, thresholds: Sequence[float]) -> np.ndarray:
    """Vectorized decide() over an (n, N) score matrix → bool matrix."""
    scores = np.asarray(scores, dtype=np.float64)
    t = check_thresholds(thresholds, scores.shape[1])
    D = scores >= t
    empty = ~D.any(axis=1)
    if empty.any():
        D[np.nonzero(empty)[0], scores[empty].argmax(axis=1)] = True
    return D


def _prf(tp: np.ndarray, fp: np.ndarray, fn: np.ndarray):
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        recall = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        denom = 2 * tp + fp + fn
        f1 = np.where(denom > 0, 2 * tp / denom, 0.0)
    return precision, recall, f1


@dataclass(frozen=True)
class CategoryReport:
    names: tuple[str, ...]
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    support: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "categories": [
                {
                    "name": self.names[i],
                    "precision": self.precision[i],
                    "recall": self.recall[i],
                    "f1": self.f1[i],
                    "support": self.support[i],
                }
                for i in range(len(self.names))
            ]
        }


@dataclass(frozen=True)
class MetricsReport:
    macro_f1: float
    micro_f1: float
    micro_precision: float
    micro_recall: float
    label_names: tuple[str, ...]
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    support: tuple[int, ...]
    per_category: CategoryReport | None = None

    def to_dict(self) -> dict:
        payload = {
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "micro_precision": self.micro_precision,
            "micro_recall": self.micro_recall,
            "labels": [
                {
                    "name": self.label_names[i],
                    "precision": self.precision[i],
                    "recall": self.recall[i],
                    "f1": self.f1[i],
                    "support": self.support[i],
                }
                for i in range(len(self.label_names))
            ],
        }
        if self.per_category is not None:
            payload.update(self.per_category.to_dict())
        return payload


def format_reports_table(reports: dict[str, MetricsReport]) -> str:
    """Aligned text table: one row per named report, four metric columns."""
    header = ("Model", "M-F1", "m-F1", "Pre", "Rec")
    rows = [header]
    for name, r in reports.items():
        rows.append(
            (
                name,
                f"{r.macro_f1:.2f}",
                f"{r.micro_f1:.2f}",
                f"{r.micro_precision:.2f}",
                f"{r.micro_recall:.2f}",
            )
        )
    widths = [max(len(row[c]) for row in rows) for c in range(5)]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [
            row[c].rjust(widths[c]) for c in range(1, 5)
        ]
        lines.append("  ".join(cells))
    return "\n".join(lines)


def _counts(D: np.ndarray, G: np.ndarray):
    tp = (D & G).sum(axis=0).astype(np.float64)
    fp = (D & ~G).sum(axis=0).astype(np.float64)
    fn = (~D & G).sum(axis=0).astype(np.float64)
    return tp, fp, fn


def metrics_from_decisions(
    D: np.ndarray, G: np.ndarray, label_names: Sequence[str]
) -> MetricsReport:
    """Metrics over boolean decision/gold matrices of identical shape."""
    if D.shape != G.shape:
        raise ValueError("decision and gold matrices must share a shape")
    tp, fp, fn = _counts(D, G)
    precision, recall, f1 = _prf(tp, fp, fn)
    micro_p, micro_r, micro_f1 = (
        float(x) for x in _prf(tp.sum(), fp.sum(), fn.sum())
    )
    return MetricsReport(
        macro_f1=float(f1.mean()) if f1.size else 0.0,
        micro_f1=micro_f1,
        micro_precision=micro_p,
        micro_recall=micro_r,
        label_names=tuple(label_names),
        precision=tuple(float(x) for x in precision),
        recall=tuple(float(x) for x in recall),
        f1=tuple(float(x) for x in f1),
        support=tuple(int(x) for x in (tp + fn)),
    )


def compute_metrics(
    pred: PredictionSet,
    thresholds: Sequence[float],
    with_categories: bool = False,
) -> MetricsReport:
    """Micro metrics from global TP/FP/FN; macro-F1 with the 0/0 → 0 rule."""
    if len(pred) == 0:
        raise ValueError("prediction set is empty")
    D = decide_matrix(pred.scores, thresholds)
    G = pred.gold_matrix()
    report = metrics_from_decisions(D, G, pred.taxonomy.emotions)
    if with_categories:
        report = replace(report, per_category=per_category_report(pred, thresholds))
    return report


def tune_thresholds(
    pred: PredictionSet, grid: Sequence[float] = DEFAULT_GRID
) -> np.ndarray:
    """Per label, the grid threshold maximizing that label's F1.

    Ties resolve to the lowest threshold; labels without validation
    positives default to 0.5.
    """
    grid = sorted(grid)
    if not grid:
        raise ValueError("threshold grid is empty")
    if grid[0] <= 0 or grid[-1] >= 1:
        raise ValueError("grid values must lie in (0, 1)")
    G = pred.gold_matrix()
    scores = pred.scores
    n_labels = scores.shape[1]
    out = np.full(n_labels, 0.5)
    for label in range(n_labels):
        gold_col = G[:, label]
        if not gold_col.any():
            continue
        best_f1, best_t = -1.0, None
        for t in grid:
            pred_col = scores[:, label] >= t
            tp = float(np.sum(pred_col & gold_col))
            fp = float(np.sum(pred_col & ~gold_col))
            fn = float(np.sum(~pred_col & gold_col))
            denom = 2 * tp + fp + fn
            f1 = 2 * tp / denom if denom > 0 else 0.0
            if f1 > best_f1:
                best_f1, best_t = f1, t
        out[label] = best_t
    return out


def random_baseline(
    n_examples: int,
    taxonomy: EmotionTaxonomy,
    seed: int | None = 0,
    golds: Sequence[frozenset[int]] | None = None,
) -> PredictionSet:
    """I.i.d. uniform scores for every (example, label) pair."""
    if n_examples < 1:
        raise ValueError("need at least one example")
    rng = check_random_state(seed)
    scores = rng.uniform(size=(n_examples, taxonomy.n_emotions))
    if golds is None:
        golds = tuple(frozenset() for _ in range(n_examples))
    return PredictionSet(taxonomy, scores, tuple(golds))


def category_pool(scores: np.ndarray, taxonomy: EmotionTaxonomy) -> np.ndarray:
    """Category score = max over member emotion scores; accepts (N,) or (n, N)."""
    scores = np.asarray(scores, dtype=np.float64)
    single = scores.ndim == 1
    if single:
        scores = scores[np.newaxis, :]
    if scores.shape[1] != taxonomy.n_emotions:
        raise ValueError("score dimension does not match taxonomy")
    out = np.zeros((scores.shape[0], taxonomy.n_categories))
    for ci in range(taxonomy.n_categories):
        members = taxonomy.category_members(ci)
        out[:, ci] = scores[:, members].max(axis=1)
    return out[0] if single else out


def _category_matrix(label_matrix: np.ndarray, taxonomy: EmotionTaxonomy) -> np.ndarray:
    out = np.zeros((label_matrix.shape[0], taxonomy.n_categories), dtype=bool)
    for ci in range(taxonomy.n_categories):
        out[:, ci] = label_matrix[:, taxonomy.category_members(ci)].any(axis=1)
    return out


def per_category_report(
    pred: PredictionSet, thresholds: Sequence[float]
) -> CategoryReport:
    """Category decided iff any member emotion decided; then binary P/R/F1."""
    D = _category_matrix(decide_matrix(pred.scores, thresholds), pred.taxonomy)
    G = _category_matrix(pred.gold_matrix(), pred.taxonomy)
    tp, fp, fn = _counts(D, G)
    precision, recall, f1 = _prf(tp, fp, fn)
    return CategoryReport(
        names=pred.taxonomy.categories,
        precision=tuple(float(x) for x in precision),
        recall=tuple(float(x) for x in recall),
        f1=tuple(float(x) for x in f1),
        support=tuple(int(x) for x in (tp + fn)),
    )
