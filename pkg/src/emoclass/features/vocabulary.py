"""Capped vocabularies over lowercased tokens with stopword removal."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read the one-word-per-line stopword file (the bundled English list by default)."""
    if path is None:
        text = resources.files("emoclass.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class Vocabulary:
    """Dense token → index mapping capped at a maximum size.

    Tokens are stored lowercased; ``tokens[i]`` is the token at index i.
    """

    tokens: tuple[str, ...]
    cap: int
    stopwords: frozenset[str] = frozenset()
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.tokens) > self.cap:
            raise ValueError(f"{len(self.tokens)} tokens exceed cap {self.cap}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        for tok in self.tokens:
            if tok in self.stopwords:
                raise ValueError(f"stopword {tok!r} present in vocabulary")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.index

    def index_of(self, token: str) -> int | None:
        return self.index.get(token.lower())

    def to_mapping(self) -> dict[str, int]:
        return dict(self.index)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_mapping(), f, indent=2, ensure_ascii=False)

    @classmethod
    def load(cls, path: str | Path, stopwords: frozenset[str] = frozenset()) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            mapping = json.load(f)
        indices = sorted(mapping.values())
        if indices != list(range(len(mapping))):
            raise ValueError(f"{path}: vocabulary indices are not dense in [0, size)")
        tokens = [""] * len(mapping)
        for tok, i in mapping.items():
            tokens[i] = tok
        return cls(tuple(tokens), cap=len(tokens), stopwords=stopwords)


def build_vocabulary(
    token_sequences: Iterable[Sequence[str]],
    cap: int,
    stopwords: frozenset[str] = frozenset(),
) -> Vocabulary:
    """Most frequent lowercased non-stopword tokens, capped.

    Ties between equally frequent tokens break lexicographically, so the
    result is deterministic. An empty input yields an empty vocabulary.
    """
    if cap < 0:
        raise ValueError("cap must be >= 0")
    counts: Counter[str] = Counter()
    for tokens in token_sequences:
        for tok in tokens:
            low = tok.lower()
            if low not in stopwords:
                counts[low] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = tuple(tok for tok, _ in ranked[:cap])
    return Vocabulary(kept, cap=cap, stopwords=stopwords)
