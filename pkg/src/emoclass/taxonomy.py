"""Emotion taxonomies, labeled examples, and corpus containers.

A taxonomy is a fixed ordered list of emotion names, each belonging to
exactly one category. Corpora hold normalized examples that reference the
taxonomy by emotion index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .text import normalize_text, tokenize


@dataclass(frozen=True)
class EmotionTaxonomy:
    """Label space: N emotions partitioned into categories.

    ``category_of[i]`` is the category index of emotion ``i``.
    """

    emotions: tuple[str, ...]
    categories: tuple[str, ...]
    category_of: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.emotions) < 1:
            raise ValueError("taxonomy requires at least one emotion")
        if len(set(self.emotions)) != len(self.emotions):
            raise ValueError("emotion names must be unique")
        if len(self.category_of) != len(self.emotions):
            raise ValueError("category_of must map every emotion")
        for ci in self.category_of:
            if not 0 <= ci < len(self.categories):
                raise ValueError(f"category index {ci} out of range")
        used = set(self.category_of)
        for ci, name in enumerate(self.categories):
            if ci not in used:
                raise ValueError(f"category {name!r} has no emotions")

    @property
    def n_emotions(self) -> int:
        return len(self.emotions)

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def emotion_index(self, name: str) -> int:
        try:
            return self.emotions.index(name)
        except ValueError:
            raise KeyError(f"unknown emotion {name!r}") from None

    def category_members(self, category_index: int) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.category_of) if c == category_index)

    def to_dict(self) -> dict:
        groups: dict[str, list[str]] = {c: [] for c in self.categories}
        for i, emotion in enumerate(self.emotions):
            groups[self.categories[self.category_of[i]]].append(emotion)
        return {"emotions": list(self.emotions), "categories": groups}

    @classmethod
    def from_dict(cls, payload: dict) -> "EmotionTaxonomy":
        """Build from ``{"emotions": [...], "categories": {category: [emotion, ...]}}``.

        The top-level emotion list fixes label indices; it may be omitted,
        in which case the grouped order is used.
        """
        try:
            groups = payload["categories"]
        except (KeyError, TypeError):
            raise ValueError("taxonomy JSON must have a 'categories' mapping") from None
        categories = tuple(groups.keys())
        category_of_name: dict[str, int] = {}
        for ci, members in enumerate(groups.values()):
            for emotion in members:
                if emotion in category_of_name:
                    raise ValueError(f"emotion {emotion!r} listed in two categories")
                category_of_name[emotion] = ci
        emotions = tuple(payload.get("emotions", category_of_name.keys()))
        if set(emotions) != set(category_of_name):
            raise ValueError("emotion list and category grouping disagree")
        return cls(emotions, categories, tuple(category_of_name[e] for e in emotions))

    @classmethod
    def load(cls, path: str | Path) -> "EmotionTaxonomy":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)


@dataclass(frozen=True)
class LabeledExample:
    """One text snippet with its writer-assigned emotion labels."""

    id: str
    raw_text: str
    text: str
    tokens: tuple[str, ...]
    writer_labels: frozenset[int]
    timestamp: float | None = None

    @classmethod
    def create(
        cls,
        id: str,
        raw_text: str,
        writer_labels: Iterable[int],
        timestamp: float | None = None,
    ) -> "LabeledExample":
        labels = frozenset(writer_labels)
        if not labels:
            raise ValueError(f"example {id!r} has no writer labels")
        text = normalize_text(raw_text)
        return cls(
            id=id,
            raw_text=raw_text,
            text=text,
            tokens=tuple(tokenize(text)),
            writer_labels=labels,
            timestamp=timestamp,
        )


@dataclass(frozen=True)
class Corpus:
    """Ordered collection of examples over a shared taxonomy."""

    taxonomy: EmotionTaxonomy
    examples: tuple[LabeledExample, ...]
    provenance: str = ""

    def __post_init__(self) -> None:
        n = self.taxonomy.n_emotions
        for ex in self.examples:
            for label in ex.writer_labels:
                if not 0 <= label < n:
                    raise ValueError(
                        f"example {ex.id!r} references emotion index {label} "
                        f"outside taxonomy of size {n}"
                    )

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[LabeledExample]:
        return iter(self.examples)

    def replace_examples(
        self, examples: Sequence[LabeledExample], provenance: str | None = None
    ) -> "Corpus":
        return Corpus(
            taxonomy=self.taxonomy,
            examples=tuple(examples),
            provenance=self.provenance if provenance is None else provenance,
        )


def load_goemotions_tsv(
    path: str | Path, taxonomy: EmotionTaxonomy, provenance: str | None = None
) -> Corpus:
    """Load tab-separated rows of (text, comma-joined label ids, id)."""
    examples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            text, label_field, example_id = parts
            try:
                labels = [int(x) for x in label_field.split(",") if x != ""]
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: malformed label field {label_field!r}"
                ) from None
            for label in labels:
                if not 0 <= label < taxonomy.n_emotions:
                    raise ValueError(
                        f"{path}:{lineno}: emotion index {label} outside "
                        f"taxonomy of size {taxonomy.n_emotions}"
                    )
            examples.append(LabeledExample.create(example_id, text, labels))
    return Corpus(taxonomy, tuple(examples), provenance or str(path))


def _parse_timestamp(value: object) -> float | None:
    """Accept UTC epoch seconds or an ISO 8601 string; None passes through."""
    if value is None:
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        text = value.replace("Z", "+00:00") if value.endswith("Z") else value
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            raise ValueError(f"unparseable timestamp {value!r}") from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValueError(f"unparseable timestamp {value!r}")


def load_vent_jsonl(
    path: str | Path, taxonomy: EmotionTaxonomy, provenance: str | None = None
) -> Corpus:
    """Load one JSON object per line with fields text, emotion, created_at.

    ``emotion`` is an emotion name from the taxonomy; ``created_at`` is UTC
    seconds. Lines with emotions outside the taxonomy raise.
    """
    examples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: malformed JSON ({e.msg})") from None
            try:
                text = row["text"]
                emotion = row["emotion"]
            except KeyError as e:
                raise ValueError(f"{path}:{lineno}: missing field {e}") from None
            try:
                label = taxonomy.emotion_index(emotion)
            except KeyError:
                raise ValueError(
                    f"{path}:{lineno}: unknown emotion {emotion!r}"
                ) from None
            try:
                timestamp = _parse_timestamp(row.get("created_at"))
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: {e}") from None
            examples.append(
                LabeledExample.create(
                    row.get("id", f"vent-{lineno}"),
                    text,
                    [label],
                    timestamp=timestamp,
                )
            )
    return Corpus(taxonomy, tuple(examples), provenance or str(path))


def save_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as JSON lines, one example per line."""
    with open(path, "w", encoding="utf-8") as f:
        for ex in corpus:
            row = {
                "id": ex.id,
                "text": ex.raw_text,
                "labels": sorted(ex.writer_labels),
            }
            if ex.timestamp is not None:
                row["created_at"] = ex.timestamp
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_corpus_jsonl(
    path: str | Path, taxonomy: EmotionTaxonomy, provenance: str | None = None
) -> Corpus:
    """Load the generic JSON-lines corpus format written by save_corpus_jsonl."""
    examples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            examples.append(
                LabeledExample.create(
                    row.get("id", f"ex-{lineno}"),
                    row["text"],
                    row["labels"],
                    timestamp=_parse_timestamp(row.get("created_at")),
                )
            )
    return Corpus(taxonomy, tuple(examples), provenance or str(path))
