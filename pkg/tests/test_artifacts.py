import hashlib
import struct

import numpy as np
import numpy.testing as npt
import pytest

from emoclass.artifacts import (
    ArtifactChecksumError,
    ArtifactError,
    ArtifactTruncationError,
    ArtifactVersionError,
    FeatureSpace,
    ModelArtifact,
    load_model,
    save_model,
)
from emoclass.base import NotFittedError
from emoclass.features.embeddings import EmbeddingTable
from emoclass.features.sparse import BowVectorizer, TfidfVectorizer
from emoclass.learners import (
    BiLstm,
    IncrementalRandomForest,
    MultinomialNaiveBayes,
    PooledDnn,
    SgdLogisticRegression,
)
from emoclass.taxonomy import EmotionTaxonomy

TAXONOMY = EmotionTaxonomy(
    emotions=("joy", "love", "anger", "fear"),
    categories=("pos", "neg"),
    category_of=(0, 0, 1, 1),
)

WORDS = (
    "sun rain gift loss smile frown laugh cry warm cold bright dark "
    "friend enemy win fail calm storm hug slam"
).split()


def random_texts(rng, n):
    return [
        " ".join(rng.choice(WORDS, size=rng.integers(1, 12)))
        for _ in range(n)
    ]


def training_data(seed=0):
    rng = np.random.default_rng(seed)
    texts = random_texts(rng, 60)
    token_lists = [t.split() for t in texts]
    Y = (rng.random((60, 4)) < 0.4).astype(int)
    Y[:, 0] |= 1 - Y.max(axis=1)
    return texts, token_lists, Y


def sparse_artifact(kind, learner_name, seed=0):
    texts, token_lists, Y = training_data(seed)
    if kind == "bow":
        vec = BowVectorizer(vocabulary_size=100, stop_words=None).fit(token_lists)
        space = FeatureSpace.bow(vec)
    else:
        vec = TfidfVectorizer(vocabulary_size=100, stop_words=None).fit(token_lists)
        space = FeatureSpace.tfidf(vec)
    X = vec.transform(token_lists)
    learners = {
        "naive_bayes": lambda: MultinomialNaiveBayes(alpha=0.1),
        "logistic": lambda: SgdLogisticRegression(epochs=4, seed=1),
        "forest": lambda: IncrementalRandomForest(
            max_trees=5, max_depth=3, feature_fraction=0.5, seed=2
        ),
    }
    learner = learners[learner_name]().fit(X, Y)
    thresholds = np.full(4, 0.5)
    metadata = {"seed": seed, "hyperparameters": {"alpha": 0.1}, "fingerprint": "abc"}
    return ModelArtifact(TAXONOMY, space, learner, thresholds, metadata)


def embedding_artifact(learner_name, seed=0):
    rng = np.random.default_rng(seed + 10)
    table = EmbeddingTable(tuple(WORDS), rng.normal(size=(len(WORDS), 7)))
    if learner_name == "pooled_dnn":
        model = PooledDnn(7, 4, hidden_size=5, num_layers=2, pooling="attention", seed=3)
    else:
        model = BiLstm(7, 4, hidden_size=4, num_layers=1, pooling="mean", seed=4)
    space = FeatureSpace.embedding(table, max_length=12, source="unit-fixture")
    return ModelArtifact(TAXONOMY, space, model, np.full(4, 0.5), {"seed": seed})


def every_artifact():
    return [
        sparse_artifact("bow", "naive_bayes"),
        sparse_artifact("tfidf", "logistic"),
        sparse_artifact("tfidf", "forest"),
        embedding_artifact("pooled_dnn"),
        embedding_artifact("bilstm"),
    ]


# --- round trips -------------------------------------------------------------


@pytest.mark.parametrize(
    "family", ["naive_bayes", "logistic", "forest", "pooled_dnn", "bilstm"]
)
def test_round_trip_scores_are_bit_identical(family, tmp_path):
    if family in ("pooled_dnn", "bilstm"):
        artifact = embedding_artifact(family)
    else:
        kind = "bow" if family == "naive_bayes" else "tfidf"
        artifact = sparse_artifact(kind, family)
    path = tmp_path / "model.emob"
    save_model(artifact, path)
    loaded = load_model(path)
    texts = random_texts(np.random.default_rng(99), 100)
    npt.assert_array_equal(loaded.score(texts), artifact.score(texts))
    assert loaded.learner_kind == family


def test_round_trip_preserves_everything_else(tmp_path):
    artifact = sparse_artifact("tfidf", "logistic")
    path = tmp_path / "model.emob"
    save_model(artifact, path)
    loaded = load_model(path)
    assert loaded.taxonomy == TAXONOMY
    npt.assert_array_equal(loaded.thresholds, artifact.thresholds)
    assert loaded.metadata == artifact.metadata
    assert loaded.hierarchy is None
    assert loaded.feature_space.kind == "tfidf"


def test_hierarchy_document_round_trips(tmp_path):
    artifact = embedding_artifact("pooled_dnn")
    tree = {"children": [{"name": "a", "height": 0.0}, {"name": "b", "height": 0.0}], "height": 1.5}
    artifact = ModelArtifact(
        artifact.taxonomy,
        artifact.feature_space,
        artifact.learner,
        artifact.thresholds,
        artifact.metadata,
        hierarchy=tree,
    )
    path = tmp_path / "model.emob"
    save_model(artifact, path)
    assert load_model(path).hierarchy == tree


def test_embedding_source_and_length_round_trip(tmp_path):
    artifact = embedding_artifact("bilstm")
    path = tmp_path / "model.emob"
    save_model(artifact, path)
    loaded = load_model(path)
    assert loaded.feature_space.source == "unit-fixture"
    assert loaded.feature_space.max_length == 12
    assert loaded.feature_space.table.tokens == tuple(WORDS)


def test_loading_twice_gives_identical_scores(tmp_path):
    artifact = sparse_artifact("bow", "naive_bayes")
    path = tmp_path / "model.emob"
    save_model(artifact, path)
    texts = random_texts(np.random.default_rng(7), 20)
    npt.assert_array_equal(
        load_model(path).score(texts), load_model(path).score(texts)
    )


# --- scoring edge cases ------------------------------------------------------


def test_sparse_models_score_empty_text():
    artifact = sparse_artifact("bow", "naive_bayes")
    scores = artifact.score([""])
    assert scores.shape == (1, 4)
    assert ((scores >= 0) & (scores <= 1)).all()


def test_embedding_models_reject_empty_text():
    artifact = embedding_artifact("pooled_dnn")
    with pytest.raises(ValueError, match="empty sequence"):
        artifact.score([""])


def test_scores_lie_in_the_unit_interval():
    texts = random_texts(np.random.default_rng(5), 30)
    for artifact in every_artifact():
        scores = artifact.score(texts)
        assert scores.shape == (30, 4)
        assert ((scores >= 0) & (scores <= 1)).all()


# --- corruption and format errors --------------------------------------------


def saved_bytes(tmp_path):
    artifact = sparse_artifact("tfidf", "logistic")
    path = tmp_path / "model.emob"
    save_model(artifact, path)
    return path, bytearray(path.read_bytes())


def test_corrupted_byte_fails_the_checksum(tmp_path):
    path, data = saved_bytes(tmp_path)
    data[len(data) // 2] ^= 0xFF
    path.write_bytes(data)
    with pytest.raises(ArtifactChecksumError, match="checksum"):
        load_model(path)


def test_truncated_file_is_reported_as_truncated(tmp_path):
    path, data = saved_bytes(tmp_path)
    path.write_bytes(data[:-40])
    with pytest.raises(ArtifactTruncationError, match="truncated"):
        load_model(path)
    path.write_bytes(data[:6])
    with pytest.raises(ArtifactTruncationError, match="truncated"):
        load_model(path)


def test_newer_format_version_names_both_versions(tmp_path):
    path, data = saved_bytes(tmp_path)
    body = bytes(data[:-32])
    body = body[:4] + struct.pack("<I", 2) + body[8:]
    path.write_bytes(body + hashlib.sha256(body).digest())
    with pytest.raises(ArtifactVersionError, match="version 2.*version 1"):
        load_model(path)


def test_wrong_magic_is_rejected(tmp_path):
    path, data = saved_bytes(tmp_path)
    path.write_bytes(b"NOPE" + bytes(data[4:]))
    with pytest.raises(ArtifactError, match="magic"):
        load_model(path)


def test_error_types_are_distinct():
    assert issubclass(ArtifactVersionError, ArtifactError)
    assert issubclass(ArtifactTruncationError, ArtifactError)
    assert issubclass(ArtifactChecksumError, ArtifactError)
    assert not issubclass(ArtifactVersionError, ArtifactChecksumError)
    assert not issubclass(ArtifactChecksumError, ArtifactTruncationError)


# --- construction validation -------------------------------------------------


def test_sequence_models_require_embedding_features():
    artifact = sparse_artifact("tfidf", "logistic")
    model = PooledDnn(7, 4, hidden_size=3, num_layers=1)
    with pytest.raises(ValueError, match="embedding features"):
        ModelArtifact(TAXONOMY, artifact.feature_space, model, np.full(4, 0.5))


def test_sparse_learners_reject_embedding_features():
    artifact = embedding_artifact("bilstm")
    nb = sparse_artifact("bow", "naive_bayes").learner
    with pytest.raises(ValueError, match="sequences"):
        ModelArtifact(TAXONOMY, artifact.feature_space, nb, np.full(4, 0.5))


def test_label_count_must_match_the_taxonomy():
    artifact = embedding_artifact("pooled_dnn")
    small = PooledDnn(7, 3, hidden_size=3, num_layers=1)
    with pytest.raises(ValueError, match="3 labels"):
        ModelArtifact(TAXONOMY, artifact.feature_space, small, np.full(4, 0.5))


def test_embedding_width_must_match_the_model():
    artifact = embedding_artifact("pooled_dnn")
    wide = PooledDnn(9, 4, hidden_size=3, num_layers=1)
    with pytest.raises(ValueError, match="width"):
        ModelArtifact(TAXONOMY, artifact.feature_space, wide, np.full(4, 0.5))


def test_unfitted_learners_are_rejected():
    artifact = sparse_artifact("bow", "naive_bayes")
    with pytest.raises(NotFittedError):
        ModelArtifact(
            TAXONOMY, artifact.feature_space, MultinomialNaiveBayes(), np.full(4, 0.5)
        )


def test_unfitted_vectorizers_are_rejected():
    with pytest.raises(NotFittedError):
        FeatureSpace.bow(BowVectorizer(vocabulary_size=10))


def test_unknown_feature_kind_is_rejected():
    with pytest.raises(ValueError, match="feature kind"):
        FeatureSpace(kind="hashing")


def test_metadata_must_be_a_dict():
    artifact = sparse_artifact("bow", "naive_bayes")
    with pytest.raises(ValueError, match="metadata"):
        ModelArtifact(
            TAXONOMY,
            artifact.feature_space,
            artifact.learner,
            np.full(4, 0.5),
            metadata="seed=0",
        )
