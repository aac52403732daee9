import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emoclass.corpus import (
    filter_by_length,
    flag_obscene,
    month_key,
    obscenity_by_category,
    sample_annotation_set,
    split_random,
    split_temporal,
    stability_report,
)
from emoclass.taxonomy import Corpus, EmotionTaxonomy, LabeledExample


def tiny_taxonomy():
    return EmotionTaxonomy(
        emotions=("joy", "rage", "gloom", "calm"),
        categories=("positive", "negative"),
        category_of=(0, 1, 1, 0),
    )


def ts(year, month, day=15):
    return datetime(year, month, day, tzinfo=timezone.utc).timestamp()


def make_corpus(rows):
    """rows: list of (id, text, labels, timestamp)"""
    examples = tuple(
        LabeledExample.create(id=i, raw_text=t, writer_labels=ls, timestamp=s)
        for i, t, ls, s in rows
    )
    return Corpus(taxonomy=tiny_taxonomy(), examples=examples)


def test_month_key_is_utc():
    assert month_key(ts(2016, 7, 31)) == "2016-07"
    # one second before the UTC month boundary
    end = datetime(2016, 7, 31, 23, 59, 59, tzinfo=timezone.utc).timestamp()
    assert month_key(end) == "2016-07"
    assert month_key(end + 1) == "2016-08"


def test_filter_by_length():
    corpus = make_corpus(
        [
            ("a", "one", {0}, None),
            ("b", "two words", {0}, None),
            ("c", "now three words", {1}, None),
            ("d", "and now four words", {1}, None),
        ]
    )
    out = filter_by_length(corpus, 2, 3)
    assert [ex.id for ex in out] == ["b", "c"]
    with pytest.raises(ValueError):
        filter_by_length(corpus, 0, 3)
    with pytest.raises(ValueError):
        filter_by_length(corpus, 5, 3)


# --- stability -------------------------------------------------------------

# hand-computed: p=(1/2,1/2), q=(1/4,3/4)
# KL = 0.5*ln(2) + 0.5*ln(2/3) = 0.14384103622589045 nats
KL_HAND = 0.5 * math.log(2) + 0.5 * math.log(2 / 3)


def test_stability_kl_matches_hand_value():
    rows = []
    # month 1: labels 0,0,1,1 -> (2,2); month 2: 0,1,1,1 -> (1,3)
    for k, lab in enumerate([0, 0, 1, 1]):
        rows.append((f"m1-{k}", "w", {lab}, ts(2016, 1)))
    for k, lab in enumerate([0, 1, 1, 1]):
        rows.append((f"m2-{k}", "w", {lab}, ts(2016, 2)))
    report = stability_report(make_corpus(rows))
    assert report.months == ("2016-01", "2016-02")
    assert report.distinct_emotion_counts == (2, 2)
    assert report.kl_union[0] == pytest.approx(KL_HAND, rel=1e-6)
    # same support, so intersection equals union here
    assert report.kl_intersection[0] == pytest.approx(KL_HAND, rel=1e-6)


def test_stability_identical_months_give_exact_zero():
    rows = []
    for m in (1, 2):
        for k, lab in enumerate([0, 1, 2]):
            rows.append((f"m{m}-{k}", "w", {lab}, ts(2016, m)))
    report = stability_report(make_corpus(rows))
    assert report.kl_union == (0.0,)
    assert report.kl_intersection == (0.0,)
    assert report.suggested_cutoff == "2016-01"


def test_stability_disjoint_supports():
    rows = [
        ("a", "w", {0}, ts(2016, 1)),
        ("b", "w", {1}, ts(2016, 2)),
    ]
    report = stability_report(make_corpus(rows))
    assert report.kl_intersection[0] == math.inf
    assert report.kl_union[0] > 0


def test_stability_suggested_cutoff_skips_unstable_prefix():
    rows = [("p0", "w", {0}, ts(2016, 1))]  # month 1: only label 0
    for m in (2, 3, 4):  # months 2..4 identical
        for k, lab in enumerate([0, 1]):
            rows.append((f"m{m}-{k}", "w", {lab}, ts(2016, m)))
    report = stability_report(make_corpus(rows))
    assert report.kl_union[0] > 0.02
    assert report.kl_union[1] == 0.0
    assert report.suggested_cutoff == "2016-02"


def test_stability_no_cutoff_when_last_pair_unstable():
    rows = [
        ("a", "w", {0}, ts(2016, 1)),
        ("b", "w", {0}, ts(2016, 2)),
        ("c", "w", {1}, ts(2016, 3)),
    ]
    report = stability_report(make_corpus(rows))
    assert report.suggested_cutoff is None


def test_stability_needs_two_months():
    rows = [("a", "w", {0}, ts(2016, 1))]
    with pytest.raises(ValueError):
        stability_report(make_corpus(rows))


def test_stability_requires_timestamps():
    rows = [("a", "w", {0}, None), ("b", "w", {0}, ts(2016, 2))]
    with pytest.raises(ValueError):
        stability_report(make_corpus(rows))


def test_stability_report_csv(tmp_path):
    rows = [
        ("a", "w", {0}, ts(2016, 1)),
        ("b", "w", {0}, ts(2016, 2)),
    ]
    report = stability_report(make_corpus(rows))
    path = tmp_path / "s.csv"
    report.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("month,")
    assert len(lines) == 3


# --- obscenity -------------------------------------------------------------


def test_flag_obscene():
    lex = frozenset({"damn"})
    assert flag_obscene("Damn it all", lex)
    assert flag_obscene("oh DAMN", lex)
    assert not flag_obscene("the dam broke", lex)
    assert not flag_obscene("", lex)
    with pytest.raises(ValueError):
        flag_obscene("x", frozenset())


def test_obscenity_rates_separate_categories():
    lex = frozenset({"blast"})
    rows = []
    # positive category (labels 0/3): half obscene
    for k in range(40):
        text = "blast it" if k % 2 == 0 else "fine day"
        rows.append((f"p{k}", text, {0}, None))
    # negative category (labels 1/2): never obscene
    for k in range(40):
        rows.append((f"n{k}", "plain words", {1}, None))
    report = obscenity_by_category(make_corpus(rows), lex, runs=200, sample_frac=0.5, seed=7)
    assert report.categories == ("positive", "negative")
    assert report.rate_mean[0] == pytest.approx(0.5, abs=0.1)
    assert report.rate_mean[1] == 0.0
    assert report.pairwise_p[0][1] < 0.001
    assert report.pairwise_p[0][0] == 1.0


def test_obscenity_category_with_no_examples_is_nan():
    lex = frozenset({"blast"})
    rows = [(f"p{k}", "blast off", {0}, None) for k in range(10)]
    report = obscenity_by_category(make_corpus(rows), lex, runs=10, sample_frac=1.0, seed=0)
    assert math.isnan(report.rate_mean[1])


def test_obscenity_deterministic_per_seed():
    lex = frozenset({"blast"})
    rows = [(f"p{k}", "blast" if k % 3 == 0 else "calm", {k % 4}, None) for k in range(30)]
    corpus = make_corpus(rows)
    a = obscenity_by_category(corpus, lex, runs=50, sample_frac=0.5, seed=11)
    b = obscenity_by_category(corpus, lex, runs=50, sample_frac=0.5, seed=11)
    assert a == b


# --- splits ----------------------------------------------------------------


def test_split_temporal_orders_and_partitions():
    rows = [(f"e{k}", "w", {0}, ts(2016, 12 - k)) for k in range(10)]
    corpus = make_corpus(rows)
    train, val, test = split_temporal(corpus)
    assert (len(train), len(val), len(test)) == (8, 1, 1)
    stamps = [ex.timestamp for part in (train, val, test) for ex in part]
    assert stamps == sorted(stamps)
    ids = {ex.id for part in (train, val, test) for ex in part}
    assert ids == {f"e{k}" for k in range(10)}


def test_split_temporal_is_stable_for_ties():
    rows = [(f"e{k}", "w", {0}, ts(2016, 5)) for k in range(6)]
    train, val, test = split_temporal(make_corpus(rows), (0.5, 0.25, 0.25))
    ordered = [ex.id for part in (train, val, test) for ex in part]
    assert ordered == [f"e{k}" for k in range(6)]


def test_split_temporal_requires_timestamps():
    corpus = make_corpus([("a", "w", {0}, None), ("b", "w", {0}, ts(2016, 1))])
    with pytest.raises(ValueError):
        split_temporal(corpus)


def test_split_random_deterministic_and_partitioning():
    rows = [(f"e{k}", "w", {k % 4}, None) for k in range(20)]
    corpus = make_corpus(rows)
    a = split_random(corpus, seed=3)
    b = split_random(corpus, seed=3)
    assert [ex.id for ex in a[0]] == [ex.id for ex in b[0]]
    ids = [ex.id for part in a for ex in part]
    assert sorted(ids) == sorted(f"e{k}" for k in range(20))
    assert (len(a[0]), len(a[1]), len(a[2])) == (16, 2, 2)


def test_split_rejects_bad_fractions():
    corpus = make_corpus([(f"e{k}", "w", {0}, None) for k in range(5)])
    with pytest.raises(ValueError):
        split_random(corpus, fractions=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        split_random(corpus, fractions=(1.0, 0.0, 0.0))


@given(st.integers(min_value=3, max_value=60), st.integers(min_value=0, max_value=2**32 - 1))
def test_split_random_is_a_partition(n, seed):
    rows = [(f"e{k}", "w", {0}, None) for k in range(n)]
    corpus = make_corpus(rows)
    parts = split_random(corpus, (0.6, 0.2, 0.2), seed=seed)
    ids = [ex.id for part in parts for ex in part]
    assert sorted(ids) == sorted(f"e{k}" for k in range(n))
    assert sum(len(p) for p in parts) == n


# --- annotation sampling ---------------------------------------------------


def test_sample_annotation_set_covers_each_emotion():
    rows = []
    for e in range(4):
        for k in range(5):
            rows.append((f"e{e}-{k}", f"text {e} {k}", {e}, None))
    corpus = make_corpus(rows)
    sampled = sample_annotation_set(corpus, per_emotion=2, seed=1)
    assert len(sampled) == 8
    for e in range(4):
        count = sum(1 for ex in sampled if e in ex.writer_labels)
        assert count == 2


def test_sample_annotation_set_respects_excluded_terms():
    rows = [
        ("a", "taboo word here", {0}, None),
        ("b", "clean one", {0}, None),
        ("c", "clean two", {0}, None),
        ("d", "x", {1}, None),
        ("e", "y", {1}, None),
        ("f", "z", {2}, None),
        ("g", "w", {2}, None),
        ("h", "u", {3}, None),
        ("i", "v", {3}, None),
    ]
    sampled = sample_annotation_set(
        make_corpus(rows), per_emotion=2, excluded_terms=frozenset({"TABOO"}), seed=0
    )
    assert all(ex.id != "a" for ex in sampled)
    assert len(sampled) == 8


def test_sample_annotation_set_reports_all_deficits():
    rows = [("a", "w", {0}, None), ("b", "w", {0}, None)]
    with pytest.raises(ValueError) as err:
        sample_annotation_set(make_corpus(rows), per_emotion=1)
    msg = str(err.value)
    assert "rage" in msg and "gloom" in msg and "calm" in msg
    assert "joy" not in msg


def test_sample_annotation_set_deterministic():
    rows = [(f"e{k}", f"t{k}", {k % 4}, None) for k in range(40)]
    corpus = make_corpus(rows)
    a = sample_annotation_set(corpus, per_emotion=3, seed=9)
    b = sample_annotation_set(corpus, per_emotion=3, seed=9)
    assert [ex.id for ex in a] == [ex.id for ex in b]
