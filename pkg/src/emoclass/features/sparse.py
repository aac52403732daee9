"""Bag-of-words and TF-IDF vectorization to CSR matrices.

Row vectors satisfy the sparse-vector contract: strictly increasing column
indices, no stored zeros, finite values.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from ..base import BaseEstimator, check_is_fitted
from .vocabulary import Vocabulary, build_vocabulary, load_stopwords


def _count_rows(
    token_sequences: Iterable[Sequence[str]], vocab: Vocabulary
) -> sp.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for tokens in token_sequences:
        counts: Counter[int] = Counter()
        for tok in tokens:
            col = vocab.index_of(tok)
            if col is not None:
                counts[col] += 1
        for col in sorted(counts):
            indices.append(col)
            data.append(float(counts[col]))
        indptr.append(len(indices))
    X = sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr)),
        shape=(len(indptr) - 1, vocab.size),
        dtype=np.float64,
    )
    return X


def bow_vector(tokens: Sequence[str], vocab: Vocabulary) -> sp.csr_matrix:
    """Counts of vocabulary tokens as a 1×V CSR row; unseen tokens ignored."""
    return _count_rows([tokens], vocab)


def tfidf_fit(token_sequences: Iterable[Sequence[str]], vocab: Vocabulary) -> np.ndarray:
    """Per-index idf weights: ln((1+D)/(1+df)) + 1 over the given documents."""
    df = np.zeros(vocab.size, dtype=np.int64)
    n_docs = 0
    for tokens in token_sequences:
        n_docs += 1
        seen = {vocab.index_of(t) for t in tokens}
        seen.discard(None)
        for col in seen:
            df[col] += 1
    if n_docs == 0:
        raise ValueError("cannot fit idf on an empty document collection")
    return np.log((1.0 + n_docs) / (1.0 + df)) + 1.0


def _apply_tfidf(counts: sp.csr_matrix, idf: np.ndarray) -> sp.csr_matrix:
    if counts.shape[1] != idf.shape[0]:
        raise ValueError(
            f"vocabulary dimension {counts.shape[1]} does not match idf table "
            f"of length {idf.shape[0]}"
        )
    X = counts.multiply(idf[np.newaxis, :]).tocsr()
    norms = np.sqrt(X.multiply(X).sum(axis=1)).A.ravel()
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sp.diags(scale) @ X


def tfidf_vector(
    tokens: Sequence[str], vocab: Vocabulary, idf: np.ndarray
) -> sp.csr_matrix:
    """L2-normalized tf·idf as a 1×V CSR row."""
    if idf.shape[0] != vocab.size:
        raise ValueError(
            f"vocabulary of size {vocab.size} does not match idf table "
            f"of length {idf.shape[0]}"
        )
    return _apply_tfidf(bow_vector(tokens, vocab), idf)


def _resolve_stopwords(stop_words) -> frozenset[str]:
    if stop_words is None:
        return frozenset()
    if stop_words == "english":
        return load_stopwords()
    return frozenset(w.lower() for w in stop_words)


class BowVectorizer(BaseEstimator):
    """Token-count vectorizer over a frequency-capped vocabulary."""

    def __init__(self, vocabulary_size: int = 5000, stop_words="english"):
        self.vocabulary_size = vocabulary_size
        self.stop_words = stop_words

    def fit(self, token_sequences: Sequence[Sequence[str]]) -> "BowVectorizer":
        self.vocabulary_ = build_vocabulary(
            token_sequences, self.vocabulary_size, _resolve_stopwords(self.stop_words)
        )
        return self

    def transform(self, token_sequences: Sequence[Sequence[str]]) -> sp.csr_matrix:
        check_is_fitted(self, "vocabulary_")
        return _count_rows(token_sequences, self.vocabulary_)

    def fit_transform(self, token_sequences: Sequence[Sequence[str]]) -> sp.csr_matrix:
        return self.fit(token_sequences).transform(token_sequences)


class TfidfVectorizer(BaseEstimator):
    """Smoothed-idf TF-IDF vectorizer with L2-normalized rows."""

    def __init__(self, vocabulary_size: int = 5000, stop_words="english"):
        self.vocabulary_size = vocabulary_size
        self.stop_words = stop_words

    def fit(self, token_sequences: Sequence[Sequence[str]]) -> "TfidfVectorizer":
        self.vocabulary_ = build_vocabulary(
            token_sequences, self.vocabulary_size, _resolve_stopwords(self.stop_words)
        )
        self.idf_ = tfidf_fit(token_sequences, self.vocabulary_)
        return self

    def transform(self, token_sequences: Sequence[Sequence[str]]) -> sp.csr_matrix:
        check_is_fitted(self, "idf_")
        return _apply_tfidf(_count_rows(token_sequences, self.vocabulary_), self.idf_)

    def fit_transform(self, token_sequences: Sequence[Sequence[str]]) -> sp.csr_matrix:
        return self.fit(token_sequences).transform(token_sequences)
