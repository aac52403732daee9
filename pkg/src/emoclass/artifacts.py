"""Self-contained model artifacts: one checksummed binary file holding the
taxonomy, the fitted feature space, the trained learner, decision thresholds,
and training metadata. Loading never touches training data.

Layout: magic "EMOB", format version u32, two length-prefixed sections
(UTF-8 meta JSON, then an npz block with every array), and a trailing
SHA-256 over all preceding bytes.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .base import check_is_fitted, check_random_state
from .evaluation import check_thresholds
from .features.embeddings import EmbeddingTable, embed_sequence, stack_sequences
from .features.sparse import BowVectorizer, TfidfVectorizer, bow_vector, tfidf_vector
from .features.vocabulary import Vocabulary
from .learners import (
    BiLstm,
    IncrementalRandomForest,
    MultinomialNaiveBayes,
    PooledDnn,
    SgdLogisticRegression,
)
from .learners.forest import _Tree
from .taxonomy import EmotionTaxonomy
from .text import normalize_text, tokenize

MAGIC = b"EMOB"
FORMAT_VERSION = 1

FEATURE_KINDS = ("bow", "tfidf", "embedding_sequence")
LEARNER_KINDS = ("naive_bayes", "logistic", "forest", "pooled_dnn", "bilstm")


class ArtifactError(ValueError):
    """A model artifact file cannot be read."""


class ArtifactVersionError(ArtifactError):
    pass


class ArtifactTruncationError(ArtifactError):
    pass


class ArtifactChecksumError(ArtifactError):
    pass


@dataclass(frozen=True)
class FeatureSpace:
    """Fitted text → feature mapping: a sparse vectorizer or an embedding
    table with a fixed sequence length."""

    kind: str
    vectorizer: BowVectorizer | TfidfVectorizer | None = None
    table: EmbeddingTable | None = None
    max_length: int = 0
    source: str = ""

    def __post_init__(self) -> None:
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == "bow":
            if not isinstance(self.vectorizer, BowVectorizer):
                raise ValueError("bow features need a fitted BowVectorizer")
            check_is_fitted(self.vectorizer, "vocabulary_")
        elif self.kind == "tfidf":
            if not isinstance(self.vectorizer, TfidfVectorizer):
                raise ValueError("tfidf features need a fitted TfidfVectorizer")
            check_is_fitted(self.vectorizer, "idf_")
        else:
            if self.table is None:
                raise ValueError("embedding features need an EmbeddingTable")
            if self.max_length < 1:
                raise ValueError("max_length must be at least 1")

    @classmethod
    def bow(cls, vectorizer: BowVectorizer) -> "FeatureSpace":
        return cls(kind="bow", vectorizer=vectorizer)

    @classmethod
    def tfidf(cls, vectorizer: TfidfVectorizer) -> "FeatureSpace":
        return cls(kind="tfidf", vectorizer=vectorizer)

    @classmethod
    def embedding(
        cls, table: EmbeddingTable, max_length: int, source: str = ""
    ) -> "FeatureSpace":
        return cls(
            kind="embedding_sequence",
            table=table,
            max_length=int(max_length),
            source=source,
        )

    @property
    def is_sparse(self) -> bool:
        return self.kind in ("bow", "tfidf")

    def sparse_rows(self, token_lists: Sequence[Sequence[str]]) -> sp.csr_matrix:
        vocab = self.vectorizer.vocabulary_
        if self.kind == "bow":
            rows = [bow_vector(tokens, vocab) for tokens in token_lists]
        else:
            idf = self.vectorizer.idf_
            rows = [tfidf_vector(tokens, vocab, idf) for tokens in token_lists]
        return sp.vstack(rows, format="csr")

    def sequence_batch(
        self, token_lists: Sequence[Sequence[str]]
    ) -> tuple[np.ndarray, np.ndarray]:
        sequences = [
            embed_sequence(tokens, self.table, self.max_length)
            for tokens in token_lists
        ]
        return stack_sequences(sequences)


def _learner_kind(learner) -> str:
    kinds = {
        MultinomialNaiveBayes: "naive_bayes",
        SgdLogisticRegression: "logistic",
        IncrementalRandomForest: "forest",
        PooledDnn: "pooled_dnn",
        BiLstm: "bilstm",
    }
    for cls, kind in kinds.items():
        if isinstance(learner, cls):
            return kind
    raise ValueError(f"unsupported learner type {type(learner).__name__}")


@dataclass(frozen=True)
class ModelArtifact:
    """Everything needed to score raw text: taxonomy, features, learner,
    thresholds, and free-form training metadata."""

    taxonomy: EmotionTaxonomy
    feature_space: FeatureSpace
    learner: object
    thresholds: np.ndarray
    metadata: dict = field(default_factory=dict)
    hierarchy: dict | None = None

    def __post_init__(self) -> None:
        kind = _learner_kind(self.learner)
        thresholds = check_thresholds(self.thresholds, self.taxonomy.n_emotions)
        object.__setattr__(self, "thresholds", thresholds)
        neural = kind in ("pooled_dnn", "bilstm")
        if neural and self.feature_space.is_sparse:
            raise ValueError("sequence models need embedding features")
        if not neural and not self.feature_space.is_sparse:
            raise ValueError("sparse-feature learners cannot read sequences")
        if neural:
            n_labels = self.learner.n_labels
        else:
            fitted_attr = {
                "naive_bayes": "feature_count_pos_",
                "logistic": "coef_",
                "forest": "trees_",
            }[kind]
            check_is_fitted(self.learner, fitted_attr)
            n_labels = self.learner.n_labels_
        if n_labels != self.taxonomy.n_emotions:
            raise ValueError(
                f"learner predicts {n_labels} labels, "
                f"taxonomy has {self.taxonomy.n_emotions}"
            )
        if neural and self.learner.input_dim != self.feature_space.table.vectors.shape[1]:
            raise ValueError("embedding width does not match the model input")
        if not isinstance(self.metadata, dict):
            raise ValueError("metadata must be a dict")

    @property
    def learner_kind(self) -> str:
        return _learner_kind(self.learner)

    def score(self, texts: Sequence[str]) -> np.ndarray:
        """Per-emotion probabilities for raw texts, shape (len(texts), N)."""
        return self.score_tokens([tokenize(normalize_text(t)) for t in texts])

    def score_tokens(self, token_lists: Sequence[Sequence[str]]) -> np.ndarray:
        """Per-emotion probabilities for pre-tokenized inputs."""
        if self.feature_space.is_sparse:
            X = self.feature_space.sparse_rows(token_lists)
            return self.learner.predict_proba(X)
        vectors, mask = self.feature_space.sequence_batch(token_lists)
        return self.learner.forward(vectors, mask)


# --- serialization -----------------------------------------------------------


def _feature_payload(fs: FeatureSpace) -> tuple[dict, dict[str, np.ndarray]]:
    if fs.is_sparse:
        vocab = fs.vectorizer.vocabulary_
        meta = {
            "kind": fs.kind,
            "vocabulary_size": fs.vectorizer.vocabulary_size,
            "tokens": list(vocab.tokens),
            "cap": vocab.cap,
            "stopwords": sorted(vocab.stopwords),
        }
        arrays = {}
        if fs.kind == "tfidf":
            arrays["feature.idf"] = fs.vectorizer.idf_
        return meta, arrays
    meta = {
        "kind": fs.kind,
        "tokens": list(fs.table.tokens),
        "oov_policy": fs.table.oov_policy,
        "max_length": fs.max_length,
        "source": fs.source,
    }
    return meta, {"feature.vectors": fs.table.vectors}


def _feature_from(meta: dict, arrays: dict) -> FeatureSpace:
    kind = meta["kind"]
    if kind in ("bow", "tfidf"):
        vocab = Vocabulary(
            tokens=tuple(meta["tokens"]),
            cap=int(meta["cap"]),
            stopwords=frozenset(meta["stopwords"]),
        )
        cls = BowVectorizer if kind == "bow" else TfidfVectorizer
        vectorizer = cls(
            vocabulary_size=int(meta["vocabulary_size"]), stop_words=None
        )
        vectorizer.vocabulary_ = vocab
        if kind == "tfidf":
            vectorizer.idf_ = arrays["feature.idf"]
        return FeatureSpace(kind=kind, vectorizer=vectorizer)
    table = EmbeddingTable(
        tokens=tuple(meta["tokens"]),
        vectors=arrays["feature.vectors"],
        oov_policy=meta["oov_policy"],
    )
    return FeatureSpace.embedding(
        table, int(meta["max_length"]), source=meta["source"]
    )


def _learner_payload(learner) -> tuple[dict, dict[str, np.ndarray]]:
    kind = _learner_kind(learner)
    if kind == "naive_bayes":
        check_is_fitted(learner, "feature_count_pos_")
        meta = {"kind": kind, "alpha": learner.alpha, "doc_count": learner.doc_count_}
        arrays = {
            "learner.feature_count_pos": learner.feature_count_pos_,
            "learner.feature_count_total": learner.feature_count_total_,
            "learner.doc_count_pos": learner.doc_count_pos_,
        }
        return meta, arrays
    if kind == "logistic":
        check_is_fitted(learner, "coef_")
        meta = {
            "kind": kind,
            "alpha": learner.alpha,
            "epochs": learner.epochs,
            "tolerance": learner.tolerance,
            "minibatch_size": learner.minibatch_size,
            "seed": learner.seed,
            "stopped_epoch": learner.stopped_epoch_,
            "final_loss": learner.final_loss_,
        }
        return meta, {
            "learner.coef": learner.coef_,
            "learner.intercept": learner.intercept_,
        }
    if kind == "forest":
        check_is_fitted(learner, "trees_")
        meta = {
            "kind": kind,
            "max_trees": learner.max_trees,
            "trees_per_batch": learner.trees_per_batch,
            "max_depth": learner.max_depth,
            "feature_fraction": learner.feature_fraction,
            "seed": learner.seed,
            "n_labels": learner.n_labels_,
            "n_features": learner.n_features_,
            "n_trees": len(learner.trees_),
        }
        arrays = {}
        for i, tree in enumerate(learner.trees_):
            arrays[f"learner.tree{i}.feature"] = tree.feature
            arrays[f"learner.tree{i}.threshold"] = tree.threshold
            arrays[f"learner.tree{i}.left"] = tree.left
            arrays[f"learner.tree{i}.right"] = tree.right
            arrays[f"learner.tree{i}.value"] = tree.value
        return meta, arrays
    meta = {"kind": kind, "config": dict(learner.config)}
    arrays = {
        f"learner.param.{name}": value for name, value in learner.params.items()
    }
    return meta, arrays


def _learner_from(meta: dict, arrays: dict):
    kind = meta["kind"]
    if kind == "naive_bayes":
        learner = MultinomialNaiveBayes(alpha=meta["alpha"])
        learner.feature_count_pos_ = arrays["learner.feature_count_pos"]
        learner.feature_count_total_ = arrays["learner.feature_count_total"]
        learner.doc_count_pos_ = arrays["learner.doc_count_pos"]
        learner.doc_count_ = int(meta["doc_count"])
        learner.n_labels_, learner.n_features_ = learner.feature_count_pos_.shape
        return learner
    if kind == "logistic":
        learner = SgdLogisticRegression(
            alpha=meta["alpha"],
            epochs=meta["epochs"],
            tolerance=meta["tolerance"],
            minibatch_size=meta["minibatch_size"],
            seed=meta["seed"],
        )
        learner.coef_ = arrays["learner.coef"]
        learner.intercept_ = arrays["learner.intercept"]
        learner.n_labels_, learner.n_features_ = learner.coef_.shape
        learner.stopped_epoch_ = int(meta["stopped_epoch"])
        learner.final_loss_ = float(meta["final_loss"])
        return learner
    if kind == "forest":
        learner = IncrementalRandomForest(
            max_trees=meta["max_trees"],
            trees_per_batch=meta["trees_per_batch"],
            max_depth=meta["max_depth"],
            feature_fraction=meta["feature_fraction"],
            seed=meta["seed"],
        )
        learner.n_labels_ = int(meta["n_labels"])
        learner.n_features_ = int(meta["n_features"])
        learner.trees_ = [
            _Tree(
                feature=arrays[f"learner.tree{i}.feature"],
                threshold=arrays[f"learner.tree{i}.threshold"],
                left=arrays[f"learner.tree{i}.left"],
                right=arrays[f"learner.tree{i}.right"],
                value=arrays[f"learner.tree{i}.value"],
            )
            for i in range(int(meta["n_trees"]))
        ]
        # a reloaded forest restarts its feature-sampling stream
        learner.random_state_ = check_random_state(learner.seed)
        return learner
    config = dict(meta["config"])
    config.pop("kind")
    cls = PooledDnn if kind == "pooled_dnn" else BiLstm
    model = cls(config.pop("input_dim"), config.pop("n_labels"), **config)
    params = {
        name[len("learner.param."):]: value
        for name, value in arrays.items()
        if name.startswith("learner.param.")
    }
    model.load_params(params)
    return model


def _pack_section(payload: bytes) -> bytes:
    return struct.pack("<Q", len(payload)) + payload


def save_model(artifact: ModelArtifact, path: str | Path) -> None:
    feature_meta, arrays = _feature_payload(artifact.feature_space)
    learner_meta, learner_arrays = _learner_payload(artifact.learner)
    arrays.update(learner_arrays)
    arrays["thresholds"] = artifact.thresholds
    meta = {
        "taxonomy": artifact.taxonomy.to_dict(),
        "feature_space": feature_meta,
        "learner": learner_meta,
        "metadata": artifact.metadata,
        "hierarchy": artifact.hierarchy,
    }
    # sort_keys would reorder the taxonomy's category grouping; key order
    # in these dicts is meaningful and already deterministic
    meta_bytes = json.dumps(meta).encode("utf-8")
    buffer = io.BytesIO()
    np.savez(buffer, **arrays)
    blob = (
        MAGIC
        + struct.pack("<I", FORMAT_VERSION)
        + _pack_section(meta_bytes)
        + _pack_section(buffer.getvalue())
    )
    Path(path).write_bytes(blob + hashlib.sha256(blob).digest())


def load_model(path: str | Path) -> ModelArtifact:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise ArtifactTruncationError("artifact is truncated: missing header")
    if data[:4] != MAGIC:
        raise ArtifactError("not a model artifact (bad magic)")
    version = struct.unpack("<I", data[4:8])[0]
    if version != FORMAT_VERSION:
        raise ArtifactVersionError(
            f"artifact format version {version} is not readable by this "
            f"build, which supports version {FORMAT_VERSION}"
        )
    body_end = len(data) - 32
    offset = 8
    sections = []
    for _ in range(2):
        if offset + 8 > body_end:
            raise ArtifactTruncationError(
                "artifact is truncated: missing section header"
            )
        (length,) = struct.unpack("<Q", data[offset : offset + 8])
        offset += 8
        if offset + length > body_end:
            raise ArtifactTruncationError(
                "artifact is truncated: section overruns the file"
            )
        sections.append(data[offset : offset + length])
        offset += length
    if offset != body_end:
        raise ArtifactError("artifact has trailing bytes before the checksum")
    digest = hashlib.sha256(data[:body_end]).digest()
    if digest != data[body_end:]:
        raise ArtifactChecksumError("artifact checksum mismatch")
    meta = json.loads(sections[0].decode("utf-8"))
    with np.load(io.BytesIO(sections[1])) as bundle:
        arrays = {name: bundle[name] for name in bundle.files}
    return ModelArtifact(
        taxonomy=EmotionTaxonomy.from_dict(meta["taxonomy"]),
        feature_space=_feature_from(meta["feature_space"], arrays),
        learner=_learner_from(meta["learner"], arrays),
        thresholds=arrays["thresholds"],
        metadata=meta["metadata"],
        hierarchy=meta["hierarchy"],
    )
