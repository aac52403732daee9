"""Reader-study analysis: submission quality control, inter-reader agreement,
writer/reader/model cross-prediction, and bootstrapped confusion deltas.

Reader judgements stay unaggregated by default: every judgement is its own
prediction instance, so three readers produce three rows for one example.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import norm

from .base import check_random_state
from .evaluation import (
    MetricsReport,
    PredictionSet,
    decide_matrix,
    metrics_from_decisions,
)
from .taxonomy import EmotionTaxonomy

SNIPPETS_PER_SUBMISSION = 10

ANNOTATION_COLUMNS = ("example_id", "reader_id", "submission_id", "emotion")

CROSS_PREDICTION_PAIRINGS = (
    ("writer", "reader"),
    ("writer", "model"),
    ("reader", "model"),
    ("reader", "writer"),
)

CROSS_PREDICTION_LEVELS = ("emotion", "category")


@dataclass(frozen=True)
class AnnotationRecord:
    """One reader judgement: the single emotion chosen for one example."""

    example_id: str
    reader_id: str
    submission_id: str
    emotion: int
    category: int

    @classmethod
    def create(
        cls,
        example_id: str,
        reader_id: str,
        submission_id: str,
        emotion: int,
        taxonomy: EmotionTaxonomy,
    ) -> "AnnotationRecord":
        if not 0 <= emotion < taxonomy.n_emotions:
            raise ValueError(f"emotion index {emotion} out of range")
        return cls(
            example_id=str(example_id),
            reader_id=str(reader_id),
            submission_id=str(submission_id),
            emotion=int(emotion),
            category=int(taxonomy.category_of[emotion]),
        )


def _check_records(
    records: Sequence[AnnotationRecord], taxonomy: EmotionTaxonomy
) -> None:
    for r in records:
        if not 0 <= r.emotion < taxonomy.n_emotions:
            raise ValueError(f"emotion index {r.emotion} out of range")
        if r.category != taxonomy.category_of[r.emotion]:
            raise ValueError(
                f"record for example {r.example_id!r} carries category "
                f"{r.category}, but emotion {r.emotion} belongs to category "
                f"{taxonomy.category_of[r.emotion]}"
            )


def load_annotations_csv(
    path: str | Path, taxonomy: EmotionTaxonomy
) -> tuple[AnnotationRecord, ...]:
    """Read reader judgements from a CSV with emotion names in the last column."""
    records = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in ANNOTATION_COLUMNS if c not in header]
        if missing:
            raise ValueError(f"annotation CSV is missing columns: {missing}")
        for row in reader:
            name = row["emotion"]
            try:
                emotion = taxonomy.emotion_index(name)
            except KeyError:
                raise ValueError(
                    f"line {reader.line_num}: unknown emotion {name!r}"
                ) from None
            records.append(
                AnnotationRecord.create(
                    row["example_id"],
                    row["reader_id"],
                    row["submission_id"],
                    emotion,
                    taxonomy,
                )
            )
    return tuple(records)


def save_annotations_csv(
    records: Sequence[AnnotationRecord],
    path: str | Path,
    taxonomy: EmotionTaxonomy,
) -> None:
    _check_records(records, taxonomy)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(ANNOTATION_COLUMNS)
        for r in records:
            writer.writerow(
                (
                    r.example_id,
                    r.reader_id,
                    r.submission_id,
                    taxonomy.emotions[r.emotion],
                )
            )


def _check_writer_labels(
    writer_labels: Mapping[str, frozenset[int]], taxonomy: EmotionTaxonomy
) -> dict[str, frozenset[int]]:
    checked = {}
    for example_id, labels in writer_labels.items():
        labels = frozenset(int(e) for e in labels)
        if not labels:
            raise ValueError(f"writer labels for {example_id!r} are empty")
        for e in labels:
            if not 0 <= e < taxonomy.n_emotions:
                raise ValueError(f"writer label {e} out of range")
        checked[str(example_id)] = labels
    return checked


def submission_quality(
    records: Sequence[AnnotationRecord],
    writer_labels: Mapping[str, frozenset[int]],
    taxonomy: EmotionTaxonomy,
) -> bool:
    """Accept one submission when at least one chosen emotion matches the
    writer exactly, or at least two chosen emotions match on category."""
    _check_records(records, taxonomy)
    writer = _check_writer_labels(writer_labels, taxonomy)
    submissions = {r.submission_id for r in records}
    if len(submissions) > 1:
        raise ValueError(
            f"records span multiple submissions: {sorted(submissions)}"
        )
    if len(records) != SNIPPETS_PER_SUBMISSION:
        raise ValueError(
            f"a submission must annotate exactly {SNIPPETS_PER_SUBMISSION} "
            f"snippets, got {len(records)}"
        )
    seen = Counter(r.example_id for r in records)
    duplicates = sorted(e for e, n in seen.items() if n > 1)
    if duplicates:
        raise ValueError(f"examples annotated more than once: {duplicates}")
    missing = sorted(e for e in seen if e not in writer)
    if missing:
        raise ValueError(f"no writer labels for examples: {missing}")
    emotion_matches = 0
    category_matches = 0
    for r in records:
        gold = writer[r.example_id]
        if r.emotion in gold:
            emotion_matches += 1
        if r.category in {taxonomy.category_of[e] for e in gold}:
            category_matches += 1
    return emotion_matches >= 1 or category_matches >= 2


@dataclass(frozen=True)
class AgreementStats:
    """Per-snippet overlap with the modal label, at both label levels.

    The overlap of a snippet is the multiplicity of its most frequent chosen
    label; ties share the maximum. Values lie in [1, reader_count].
    """

    example_ids: tuple[str, ...]
    emotion_overlaps: tuple[int, ...]
    category_overlaps: tuple[int, ...]
    reader_count: int

    @property
    def emotion_mean(self) -> float:
        return float(np.mean(self.emotion_overlaps))

    @property
    def emotion_std(self) -> float:
        return float(np.std(self.emotion_overlaps))

    @property
    def category_mean(self) -> float:
        return float(np.mean(self.category_overlaps))

    @property
    def category_std(self) -> float:
        return float(np.std(self.category_overlaps))

    def to_dict(self) -> dict:
        return {
            "reader_count": self.reader_count,
            "snippets": len(self.example_ids),
            "emotion": {
                "mean": self.emotion_mean,
                "std": self.emotion_std,
            },
            "category": {
                "mean": self.category_mean,
                "std": self.category_std,
            },
        }


def agreement_stats(
    records: Sequence[AnnotationRecord], taxonomy: EmotionTaxonomy
) -> AgreementStats:
    """Modal-label overlap per snippet; requires one judgement per reader and
    the same reader count on every snippet."""
    _check_records(records, taxonomy)
    if not records:
        raise ValueError("no annotation records")
    order: list[str] = []
    emotions: dict[str, list[int]] = {}
    seen_pairs = set()
    for r in records:
        pair = (r.example_id, r.reader_id)
        if pair in seen_pairs:
            raise ValueError(
                f"reader {r.reader_id!r} annotated example "
                f"{r.example_id!r} more than once"
            )
        seen_pairs.add(pair)
        if r.example_id not in emotions:
            order.append(r.example_id)
            emotions[r.example_id] = []
        emotions[r.example_id].append(r.emotion)
    counts = {len(v) for v in emotions.values()}
    if len(counts) > 1:
        raise ValueError(
            f"every snippet needs the same reader count, saw {sorted(counts)}"
        )
    reader_count = counts.pop()
    emotion_overlaps = []
    category_overlaps = []
    for example_id in order:
        chosen = emotions[example_id]
        emotion_overlaps.append(max(Counter(chosen).values()))
        category_overlaps.append(
            max(Counter(taxonomy.category_of[e] for e in chosen).values())
        )
    return AgreementStats(
        example_ids=tuple(order),
        emotion_overlaps=tuple(emotion_overlaps),
        category_overlaps=tuple(category_overlaps),
        reader_count=reader_count,
    )


@dataclass(frozen=True)
class CrossPredictionEntry:
    level: str
    label_source: str
    predictor: str
    metrics: MetricsReport


@dataclass(frozen=True)
class CrossPredictionTable:
    """Cross-prediction metrics for every (level, label source, predictor)."""

    entries: tuple[CrossPredictionEntry, ...]

    def get(self, level: str, label_source: str, predictor: str) -> MetricsReport:
        for e in self.entries:
            if (e.level, e.label_source, e.predictor) == (
                level,
                label_source,
                predictor,
            ):
                return e.metrics
        raise KeyError(f"no entry for ({level!r}, {label_source!r}, {predictor!r})")

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "level": e.level,
                    "labels": e.label_source,
                    "predictor": e.predictor,
                    "macro_f1": e.metrics.macro_f1,
                    "micro_f1": e.metrics.micro_f1,
                    "micro_precision": e.metrics.micro_precision,
                    "micro_recall": e.metrics.micro_recall,
                }
                for e in self.entries
            ]
        }


def write_cross_prediction_csv(table: CrossPredictionTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            (
                "level",
                "labels",
                "predictor",
                "macro_f1",
                "micro_f1",
                "micro_precision",
                "micro_recall",
            )
        )
        for row in table.to_dict()["entries"]:
            writer.writerow(
                (
                    row["level"],
                    row["labels"],
                    row["predictor"],
                    repr(row["macro_f1"]),
                    repr(row["micro_f1"]),
                    repr(row["micro_precision"]),
                    repr(row["micro_recall"]),
                )
            )


def _align_example_ids(
    writer_ids: set[str],
    reader_ids: set[str],
    model_ids: set[str],
) -> None:
    union = writer_ids | reader_ids | model_ids
    if not union:
        raise ValueError("at least one example required")
    parts = []
    for name, ids in (
        ("writer", writer_ids),
        ("readers", reader_ids),
        ("model", model_ids),
    ):
        missing = sorted(union - ids)
        if missing:
            parts.append(f"{name} missing ids: {missing}")
    if parts:
        raise ValueError("example ids do not align: " + "; ".join(parts))


def _modal_set(chosen: Sequence[int]) -> frozenset[int]:
    counts = Counter(chosen)
    top = max(counts.values())
    return frozenset(e for e, n in counts.items() if n == top)


def _decision_matrices(
    instances: Sequence[tuple[frozenset[int], frozenset[int]]], n_labels: int
) -> tuple[np.ndarray, np.ndarray]:
    G = np.zeros((len(instances), n_labels), dtype=bool)
    D = np.zeros((len(instances), n_labels), dtype=bool)
    for i, (gold, pred) in enumerate(instances):
        for e in gold:
            G[i, e] = True
        for e in pred:
            D[i, e] = True
    return D, G


def cross_predict_f1(
    writer_labels: Mapping[str, frozenset[int]],
    records: Sequence[AnnotationRecord],
    pred: PredictionSet,
    thresholds: Sequence[float] | None = None,
    *,
    majority_vote: bool = False,
) -> CrossPredictionTable:
    """Score writer labels, reader judgements, and model decisions against
    each other, at the emotion and category level.

    By default each reader judgement is one prediction instance; with
    majority_vote the judgements per example collapse to the modal set
    (ties keep every tied label) and instances are examples.
    """
    taxonomy = pred.taxonomy
    writer = _check_writer_labels(writer_labels, taxonomy)
    _check_records(records, taxonomy)
    if thresholds is None:
        thresholds = np.full(taxonomy.n_emotions, 0.5)
    _align_example_ids(
        set(writer), {r.example_id for r in records}, set(pred.ids)
    )
    decided = decide_matrix(pred.scores, thresholds)
    model = {
        pred.ids[i]: frozenset(int(e) for e in np.nonzero(decided[i])[0])
        for i in range(len(pred))
    }
    judgements: dict[str, list[int]] = {i: [] for i in pred.ids}
    for r in records:
        judgements[r.example_id].append(r.emotion)

    def instances(label_source: str, predictor: str):
        reader_involved = "reader" in (label_source, predictor)
        rows = []
        for example_id in pred.ids:
            sets = {"writer": writer[example_id], "model": model[example_id]}
            if reader_involved and not majority_vote:
                # one instance per judgement, never per example
                for e in judgements[example_id]:
                    sets["reader"] = frozenset({e})
                    rows.append((sets[label_source], sets[predictor]))
            else:
                sets["reader"] = _modal_set(judgements[example_id])
                rows.append((sets[label_source], sets[predictor]))
        return rows

    def to_categories(rows):
        return [
            (
                frozenset(taxonomy.category_of[e] for e in gold),
                frozenset(taxonomy.category_of[e] for e in pred_set),
            )
            for gold, pred_set in rows
        ]

    entries = []
    for level in CROSS_PREDICTION_LEVELS:
        for label_source, predictor in CROSS_PREDICTION_PAIRINGS:
            rows = instances(label_source, predictor)
            if level == "category":
                rows = to_categories(rows)
                names = taxonomy.categories
            else:
                names = taxonomy.emotions
            D, G = _decision_matrices(rows, len(names))
            entries.append(
                CrossPredictionEntry(
                    level=level,
                    label_source=label_source,
                    predictor=predictor,
                    metrics=metrics_from_decisions(D, G, names),
                )
            )
    return CrossPredictionTable(entries=tuple(entries))


@dataclass(frozen=True)
class DeltaMatrix:
    """Model-minus-readers category confusion difference with per-cell
    significance from a bootstrap z-test."""

    category_names: tuple[str, ...]
    delta: np.ndarray
    bootstrap_mean: np.ndarray
    bootstrap_std: np.ndarray
    z_scores: np.ndarray
    significant: np.ndarray
    runs: int
    alpha: float

    def __post_init__(self) -> None:
        k = len(self.category_names)
        for name in ("delta", "bootstrap_mean", "bootstrap_std", "z_scores"):
            if getattr(self, name).shape != (k, k):
                raise ValueError(f"{name} must have shape ({k}, {k})")
        if self.significant.shape != (k, k):
            raise ValueError(f"significant must have shape ({k}, {k})")
        if np.abs(self.delta).max(initial=0.0) > 1.0 + 1e-9:
            raise ValueError("confusion differences must lie in [-1, 1]")

    def to_dict(self) -> dict:
        return {
            "categories": list(self.category_names),
            "delta": self.delta.tolist(),
            "significant": self.significant.astype(bool).tolist(),
            "z_scores": self.z_scores.tolist(),
            "runs": self.runs,
            "alpha": self.alpha,
        }


def write_delta_csv(delta: DeltaMatrix, path: str | Path) -> None:
    """Two CSV blocks separated by a blank line: deltas, then the 0/1
    significance mask, both with category name headers."""
    names = delta.category_names
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("delta", *names))
        for i, name in enumerate(names):
            writer.writerow((name, *(repr(float(v)) for v in delta.delta[i])))
        writer.writerow(())
        writer.writerow(("significant", *names))
        for i, name in enumerate(names):
            writer.writerow(
                (name, *("1" if v else "0" for v in delta.significant[i]))
            )


def _category_contributions(
    ids: Sequence[str],
    gold_categories: Mapping[str, Sequence[int]],
    predicted_counts: Mapping[str, np.ndarray],
    n_categories: int,
) -> np.ndarray:
    out = np.zeros((len(ids), n_categories, n_categories), dtype=np.float64)
    for i, example_id in enumerate(ids):
        row = predicted_counts[example_id]
        for g in gold_categories[example_id]:
            out[i, g] += row
    return out.reshape(len(ids), n_categories * n_categories)


def _normalize_rows(counts: np.ndarray) -> np.ndarray:
    sums = counts.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(sums > 0, counts / sums, 0.0)


def confusion_delta_bootstrap(
    writer_labels: Mapping[str, frozenset[int]],
    records: Sequence[AnnotationRecord],
    pred: PredictionSet,
    thresholds: Sequence[float] | None = None,
    *,
    runs: int = 10000,
    sample_size: int | None = None,
    alpha: float = 0.001,
    seed: int = 0,
) -> DeltaMatrix:
    """Bootstrap the difference between the model's and the readers'
    category confusion matrices, both against writer labels.

    Each run resamples examples with replacement, builds both row-normalized
    confusions, and records their difference; a cell is significant when a
    two-sided z-test on the bootstrap distribution rejects zero at alpha.
    """
    if runs < 100:
        raise ValueError("at least 100 bootstrap runs required")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    taxonomy = pred.taxonomy
    writer = _check_writer_labels(writer_labels, taxonomy)
    _check_records(records, taxonomy)
    if thresholds is None:
        thresholds = np.full(taxonomy.n_emotions, 0.5)
    _align_example_ids(
        set(writer), {r.example_id for r in records}, set(pred.ids)
    )
    n = len(pred)
    if sample_size is None:
        sample_size = n
    if sample_size < 1:
        raise ValueError("sample_size must be at least 1")
    k = taxonomy.n_categories

    decided = decide_matrix(pred.scores, thresholds)
    gold_categories = {
        example_id: [taxonomy.category_of[e] for e in sorted(writer[example_id])]
        for example_id in pred.ids
    }
    model_counts = {}
    for i, example_id in enumerate(pred.ids):
        row = np.zeros(k, dtype=np.float64)
        for e in np.nonzero(decided[i])[0]:
            row[taxonomy.category_of[int(e)]] += 1.0
        model_counts[example_id] = row
    reader_counts = {example_id: np.zeros(k, dtype=np.float64) for example_id in pred.ids}
    for r in records:
        reader_counts[r.example_id][r.category] += 1.0

    model_flat = _category_contributions(pred.ids, gold_categories, model_counts, k)
    reader_flat = _category_contributions(pred.ids, gold_categories, reader_counts, k)
    # one matmul per chunk covers both confusions
    both = np.concatenate([model_flat, reader_flat], axis=1)

    full_model = _normalize_rows(model_flat.sum(axis=0).reshape(k, k))
    full_reader = _normalize_rows(reader_flat.sum(axis=0).reshape(k, k))
    delta = full_model - full_reader

    rng = check_random_state(seed)
    pvals = np.full(n, 1.0 / n)
    total = np.zeros((k, k), dtype=np.float64)
    total_sq = np.zeros((k, k), dtype=np.float64)
    done = 0
    while done < runs:
        chunk = min(512, runs - done)
        weights = rng.multinomial(sample_size, pvals, size=chunk).astype(np.float64)
        counts = weights @ both
        model_runs = _normalize_rows(counts[:, : k * k].reshape(chunk, k, k))
        reader_runs = _normalize_rows(counts[:, k * k :].reshape(chunk, k, k))
        diffs = model_runs - reader_runs
        total += diffs.sum(axis=0)
        total_sq += (diffs * diffs).sum(axis=0)
        done += chunk

    mean = total / runs
    variance = np.maximum(total_sq / runs - mean * mean, 0.0)
    std = np.sqrt(variance)
    # a constant nonzero difference is significant at any level
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(
            std > 0, mean / std, np.where(mean != 0, np.sign(mean) * np.inf, 0.0)
        )
    critical = float(norm.ppf(1.0 - alpha / 2.0))
    return DeltaMatrix(
        category_names=taxonomy.categories,
        delta=delta,
        bootstrap_mean=mean,
        bootstrap_std=std,
        z_scores=z,
        significant=np.abs(z) > critical,
        runs=runs,
        alpha=alpha,
    )
