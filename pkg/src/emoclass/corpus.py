"""Corpus preparation: filtering, splits, stability and obscenity analysis.

All operations are pure functions over immutable corpora; randomized ones
take an explicit seed and own their generator state.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm

from .base import check_random_state
from .taxonomy import Corpus, LabeledExample


def filter_by_length(corpus: Corpus, min_tokens: int, max_tokens: int) -> Corpus:
    """Keep examples whose token count lies in [min_tokens, max_tokens]."""
    if not 1 <= min_tokens <= max_tokens:
        raise ValueError(f"invalid length range [{min_tokens}, {max_tokens}]")
    kept = [ex for ex in corpus if min_tokens <= len(ex.tokens) <= max_tokens]
    return corpus.replace_examples(kept)


def month_key(timestamp: float) -> str:
    """UTC year-month key, e.g. '2016-07'."""
    dt = datetime.fromtimestamp(timestamp, tz=timezone.utc)
    return f"{dt.year:04d}-{dt.month:02d}"


@dataclass(frozen=True)
class StabilityReport:
    """Month-over-month label usage drift.

    ``kl_union[i]`` / ``kl_intersection[i]`` compare months[i] against
    months[i+1]; divergences are in nats. An empty shared support yields
    ``inf`` for the intersection variant.
    """

    months: tuple[str, ...]
    distinct_emotion_counts: tuple[int, ...]
    kl_union: tuple[float, ...]
    kl_intersection: tuple[float, ...]
    suggested_cutoff: str | None

    def to_dict(self) -> dict:
        return {
            "months": list(self.months),
            "distinct_emotion_counts": list(self.distinct_emotion_counts),
            "kl_union": list(self.kl_union),
            "kl_intersection": list(self.kl_intersection),
            "suggested_cutoff": self.suggested_cutoff,
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(
                ["month", "distinct_emotions", "kl_union_to_next", "kl_intersection_to_next"]
            )
            for i, month in enumerate(self.months):
                ku = self.kl_union[i] if i < len(self.kl_union) else ""
                ki = self.kl_intersection[i] if i < len(self.kl_intersection) else ""
                writer.writerow([month, self.distinct_emotion_counts[i], ku, ki])


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(p * (np.log(p) - np.log(q))))


def stability_report(
    corpus: Corpus,
    smoothing_eps: float = 1e-9,
    stability_threshold: float = 0.02,
) -> StabilityReport:
    """Relative entropy between the label distributions of consecutive months.

    The union variant smooths every cell on the union support with
    ``smoothing_eps`` before renormalizing; the intersection variant first
    restricts both distributions to the shared labels. ``suggested_cutoff``
    is the earliest month from which every later consecutive union
    divergence stays below ``stability_threshold``.
    """
    if smoothing_eps <= 0:
        raise ValueError("smoothing_eps must be positive")
    n = corpus.taxonomy.n_emotions
    counts_by_month: dict[str, np.ndarray] = {}
    for ex in corpus:
        if ex.timestamp is None:
            raise ValueError(f"example {ex.id!r} has no timestamp")
        counts = counts_by_month.setdefault(month_key(ex.timestamp), np.zeros(n))
        for label in ex.writer_labels:
            counts[label] += 1

    months = tuple(sorted(counts_by_month))
    if len(months) < 2:
        raise ValueError("insufficient temporal span: need at least 2 months")

    distinct = tuple(int((counts_by_month[m] > 0).sum()) for m in months)
    kl_union: list[float] = []
    kl_intersection: list[float] = []
    for prev, nxt in zip(months, months[1:]):
        a, b = counts_by_month[prev], counts_by_month[nxt]
        union = (a > 0) | (b > 0)
        pu = a[union] + smoothing_eps
        qu = b[union] + smoothing_eps
        kl_union.append(_kl(pu / pu.sum(), qu / qu.sum()))

        shared = (a > 0) & (b > 0)
        if not shared.any():
            kl_intersection.append(math.inf)
        else:
            ps = a[shared] + smoothing_eps
            qs = b[shared] + smoothing_eps
            kl_intersection.append(_kl(ps / ps.sum(), qs / qs.sum()))

    # a cutoff month must have at least one later pair, all below threshold
    cutoff = None
    for k in range(len(kl_union)):
        if all(v < stability_threshold for v in kl_union[k:]):
            cutoff = months[k]
            break

    return StabilityReport(
        months=months,
        distinct_emotion_counts=distinct,
        kl_union=tuple(kl_union),
        kl_intersection=tuple(kl_intersection),
        suggested_cutoff=cutoff,
    )


def load_lexicon(path: str | Path) -> frozenset[str]:
    """Read a one-word-per-line lexicon, case-folded."""
    words = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            word = line.strip().casefold()
            if word:
                words.add(word)
    return frozenset(words)


def _tokens_hit_lexicon(tokens: Iterable[str], lexicon: frozenset[str]) -> bool:
    return any(tok.casefold() in lexicon for tok in tokens)


def flag_obscene(text: str | Sequence[str], lexicon: frozenset[str]) -> bool:
    """Binary indicator: does any case-folded token appear in the lexicon?"""
    if not lexicon:
        raise ValueError("lexicon must be non-empty")
    from .text import tokenize

    tokens = tokenize(text) if isinstance(text, str) else text
    return _tokens_hit_lexicon(tokens, lexicon)


@dataclass(frozen=True)
class ObscenityReport:
    """Bootstrapped per-category obscenity rates and pairwise significance.

    Rates are proportions of flagged examples within each category; NaN
    marks categories with no observations. ``pairwise_p[a][b]`` is the
    two-sided z-test p-value on the bootstrap distribution of the
    rate difference between categories a and b.
    """

    categories: tuple[str, ...]
    rate_mean: tuple[float, ...]
    rate_std: tuple[float, ...]
    pairwise_p: tuple[tuple[float, ...], ...]

    def to_dict(self) -> dict:
        return {
            "categories": list(self.categories),
            "rate_mean": list(self.rate_mean),
            "rate_std": list(self.rate_std),
            "pairwise_p": [list(row) for row in self.pairwise_p],
        }


def obscenity_by_category(
    corpus: Corpus,
    lexicon: frozenset[str],
    runs: int = 100,
    sample_frac: float = 0.1,
    seed: int | None = 0,
) -> ObscenityReport:
    """Bootstrap per-category obscene-comment rates and pairwise z-tests.

    Each run resamples ``sample_frac`` of the corpus with replacement and
    measures, per category, the proportion of examples containing a lexicon
    word. Examples count toward the category of each of their writer labels.
    """
    if runs < 2:
        raise ValueError("need at least 2 bootstrap runs")
    if not 0 < sample_frac <= 1:
        raise ValueError("sample_frac must lie in (0, 1]")
    taxonomy = corpus.taxonomy
    n = len(corpus)
    n_cat = taxonomy.n_categories
    flags = np.array([_tokens_hit_lexicon(ex.tokens, lexicon) for ex in corpus])
    member = np.zeros((n_cat, n), dtype=bool)
    for j, ex in enumerate(corpus):
        for label in ex.writer_labels:
            member[taxonomy.category_of[label], j] = True

    rng = check_random_state(seed)
    m = max(1, round(sample_frac * n))
    rates = np.full((runs, n_cat), np.nan)
    for r in range(runs):
        idx = rng.integers(0, n, size=m)
        sampled_member = member[:, idx]
        totals = sampled_member.sum(axis=1)
        hits = (sampled_member & flags[idx]).sum(axis=1)
        nonzero = totals > 0
        rates[r, nonzero] = hits[nonzero] / totals[nonzero]

    # all-NaN columns (categories never observed) stay NaN by design
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(rates, axis=0)
        std = np.nanstd(rates, axis=0, ddof=1)

    pairwise = np.ones((n_cat, n_cat))
    for a in range(n_cat):
        for b in range(a + 1, n_cat):
            diff = rates[:, a] - rates[:, b]
            diff = diff[~np.isnan(diff)]
            if len(diff) < 2:
                p = float("nan")
            else:
                d_std = diff.std(ddof=1)
                d_mean = diff.mean()
                if d_std == 0:
                    p = 1.0 if d_mean == 0 else 0.0
                else:
                    p = 2 * float(norm.sf(abs(d_mean) / d_std))
            pairwise[a, b] = pairwise[b, a] = p

    return ObscenityReport(
        categories=taxonomy.categories,
        rate_mean=tuple(float(x) for x in mean),
        rate_std=tuple(float(x) for x in std),
        pairwise_p=tuple(tuple(float(x) for x in row) for row in pairwise),
    )


def _partition_bounds(n: int, fractions: Sequence[float]) -> list[int]:
    if len(fractions) != 3:
        raise ValueError("expected (train, val, test) fractions")
    if any(f <= 0 for f in fractions):
        raise ValueError("fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    cuts = [round(sum(fractions[: i + 1]) * n) for i in range(2)]
    return [0, cuts[0], cuts[1], n]


def split_temporal(
    corpus: Corpus, fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
) -> tuple[Corpus, Corpus, Corpus]:
    """Sort by timestamp (stable) and partition contiguously."""
    if any(ex.timestamp is None for ex in corpus):
        raise ValueError("temporal split requires timestamps on every example")
    ordered = sorted(corpus.examples, key=lambda ex: ex.timestamp)
    bounds = _partition_bounds(len(ordered), fractions)
    return tuple(
        corpus.replace_examples(ordered[bounds[i] : bounds[i + 1]])
        for i in range(3)
    )


def split_random(
    corpus: Corpus,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int | None = 0,
) -> tuple[Corpus, Corpus, Corpus]:
    """Seeded uniform permutation, then the same partition as split_temporal."""
    rng = check_random_state(seed)
    order = rng.permutation(len(corpus))
    bounds = _partition_bounds(len(corpus), fractions)
    return tuple(
        corpus.replace_examples([corpus.examples[j] for j in order[bounds[i] : bounds[i + 1]]])
        for i in range(3)
    )


def sample_annotation_set(
    corpus: Corpus,
    per_emotion: int,
    excluded_terms: frozenset[str] = frozenset(),
    seed: int | None = 0,
) -> Corpus:
    """Sample per_emotion examples for every emotion, skipping excluded terms.

    Emotions are visited in index order and an example already selected for
    an earlier emotion is not reused. Raises if any emotion has too few
    eligible examples, listing all deficient emotions.
    """
    if per_emotion < 0:
        raise ValueError("per_emotion must be >= 0")
    taxonomy = corpus.taxonomy
    rng = check_random_state(seed)
    excluded = frozenset(t.casefold() for t in excluded_terms)

    eligible_by_emotion: dict[int, list[int]] = {e: [] for e in range(taxonomy.n_emotions)}
    for j, ex in enumerate(corpus):
        if excluded and _tokens_hit_lexicon(ex.tokens, excluded):
            continue
        for label in ex.writer_labels:
            eligible_by_emotion[label].append(j)

    chosen: set[int] = set()
    deficient: list[str] = []
    for e in range(taxonomy.n_emotions):
        pool = [j for j in eligible_by_emotion[e] if j not in chosen]
        if len(pool) < per_emotion:
            deficient.append(
                f"{taxonomy.emotions[e]} ({len(pool)} eligible, need {per_emotion})"
            )
            continue
        picked = rng.choice(len(pool), size=per_emotion, replace=False)
        chosen.update(pool[k] for k in picked)

    if deficient:
        raise ValueError("insufficient eligible examples for: " + "; ".join(deficient))

    return corpus.replace_examples([corpus.examples[j] for j in sorted(chosen)])
