"""Command-line pipeline driver: corpus preparation, training, evaluation,
hierarchy export, annotation analysis, serving, and one-shot prediction.

Exit codes: 0 success, 2 usage errors, 3 invalid config schema, 4 missing
files, 1 anything else.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from .annotations import (
    agreement_stats,
    confusion_delta_bootstrap,
    cross_predict_f1,
    load_annotations_csv,
    write_cross_prediction_csv,
    write_delta_csv,
)
from .artifacts import (
    ArtifactError,
    FeatureSpace,
    ModelArtifact,
    load_model,
    save_model,
)
from .corpus import split_random, split_temporal
from .evaluation import (
    DEFAULT_GRID,
    PredictionSet,
    compute_metrics,
    format_reports_table,
    save_predictions_jsonl,
    load_predictions_jsonl,
    tune_thresholds,
)
from .features.embeddings import embed_sequence, load_embedding_table
from .features.sparse import BowVectorizer, TfidfVectorizer
from .hierarchy import (
    LINKAGES,
    build_confusion,
    category_activation_dendrogram,
    emotion_dendrogram,
    export_dendrogram,
    write_confusion_csv,
)
from .learners import (
    BiLstm,
    IncrementalRandomForest,
    MultinomialNaiveBayes,
    PooledDnn,
    SgdLogisticRegression,
    train,
)
from .learners.training import SequenceBatch
from .server import DEFAULT_MAX_TEXT_BYTES, prediction_response, serve
from .taxonomy import (
    Corpus,
    EmotionTaxonomy,
    load_corpus_jsonl,
    load_goemotions_tsv,
    load_vent_jsonl,
    save_corpus_jsonl,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING = 4

STATISTICAL_FAMILIES = ("naive_bayes", "logistic", "forest")
NEURAL_FAMILIES = ("pooled_dnn", "bilstm")
FAMILIES = STATISTICAL_FAMILIES + NEURAL_FAMILIES

FEATURES_BY_FAMILY = {
    "naive_bayes": ("bow", "tfidf"),
    "logistic": ("tfidf", "bow"),
    "forest": ("tfidf", "bow"),
    "pooled_dnn": ("embedding_sequence",),
    "bilstm": ("embedding_sequence",),
}


class ConfigError(ValueError):
    """The run configuration violates the schema."""


# --- config schema -----------------------------------------------------------


def _positive_int(name, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"hyperparameter {name!r} must be an integer")
    if value < 1:
        raise ConfigError(f"hyperparameter {name!r} must be at least 1")
    return value


def _positive_number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"hyperparameter {name!r} must be a number")
    if not value > 0:
        raise ConfigError(f"hyperparameter {name!r} must be positive")
    return float(value)


def _nonnegative_number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"hyperparameter {name!r} must be a number")
    if value < 0:
        raise ConfigError(f"hyperparameter {name!r} must be >= 0")
    return float(value)


def _fraction(name, value):
    value = _positive_number(name, value)
    if value > 1:
        raise ConfigError(f"hyperparameter {name!r} must be in (0, 1]")
    return value


def _boolean(name, value):
    if not isinstance(value, bool):
        raise ConfigError(f"hyperparameter {name!r} must be true or false")
    return value


def _nonempty_string(name, value):
    if not isinstance(value, str) or not value:
        raise ConfigError(f"hyperparameter {name!r} must be a non-empty string")
    return value


def _choice(*allowed):
    def check(name, value):
        if not isinstance(value, str) or value.lower() not in allowed:
            options = ", ".join(sorted(allowed))
            raise ConfigError(f"hyperparameter {name!r} must be one of: {options}")
        return value.lower()

    return check


def _frozen_embeddings(name, value):
    value = _boolean(name, value)
    if value is not True:
        raise ConfigError(
            f"hyperparameter {name!r} must be true: "
            "embedding fine-tuning is not supported"
        )
    return value


HYPERPARAMETER_CHECKS = {
    "Batch Size": _positive_int,
    "Vocabulary Size": _positive_int,
    "Freeze": _frozen_embeddings,
    "Model": _nonempty_string,
    "Max Length": _positive_int,
    "Epochs": _positive_int,
    "α": _positive_number,
    "Tolerance": _nonnegative_number,
    "Smoothing Factor": _positive_number,
    "Trees per Batch": _positive_int,
    "Max. Depth": _positive_int,
    "Max. Features Fraction": _fraction,
    "Split Criterion": _choice("entropy"),
    "Hidden Size": _positive_int,
    "Num. Layers": _positive_int,
    "Num. Epochs": _positive_int,
    "Learning Rate": _positive_number,
    "Epsilon": _positive_number,
    "Activation": _choice("tanh", "elu"),
    "Pooling Function": _choice("max", "mean", "attention"),
    "Bidirectional": _boolean,
    "Optimizer": _choice("adamw"),
}

_NEURAL_SHARED = (
    "Model",
    "Freeze",
    "Max Length",
    "Batch Size",
    "Hidden Size",
    "Num. Layers",
    "Num. Epochs",
    "Learning Rate",
    "Epsilon",
    "Pooling Function",
    "Optimizer",
)

REQUIRED_HYPERPARAMETERS = {
    "naive_bayes": ("Batch Size", "Vocabulary Size", "Smoothing Factor"),
    "logistic": ("Batch Size", "Vocabulary Size", "Epochs", "α", "Tolerance"),
    "forest": (
        "Batch Size",
        "Vocabulary Size",
        "Trees per Batch",
        "Max. Depth",
        "Max. Features Fraction",
        "Split Criterion",
    ),
    "pooled_dnn": _NEURAL_SHARED + ("Activation",),
    "bilstm": _NEURAL_SHARED + ("Bidirectional",),
}

_TOP_LEVEL_KEYS = ("family", "features", "hyperparameters", "seed", "thresholds")


def validate_config(payload: dict) -> dict:
    """Canonical run config; raises ConfigError naming the offending key."""
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    for key in payload:
        if key not in _TOP_LEVEL_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
    for key in ("family", "features", "hyperparameters"):
        if key not in payload:
            raise ConfigError(f"missing config key {key!r}")
    family = payload["family"]
    if family not in FAMILIES:
        raise ConfigError(
            f"config key 'family' must be one of: {', '.join(FAMILIES)}"
        )
    features = payload["features"]
    if features not in FEATURES_BY_FAMILY[family]:
        allowed = ", ".join(FEATURES_BY_FAMILY[family])
        raise ConfigError(
            f"config key 'features' must be one of: {allowed} "
            f"for family {family!r}"
        )
    raw = payload["hyperparameters"]
    if not isinstance(raw, dict):
        raise ConfigError("config key 'hyperparameters' must be an object")
    required = REQUIRED_HYPERPARAMETERS[family]
    for name in required:
        if name not in raw:
            raise ConfigError(
                f"missing hyperparameter {name!r} for family {family!r}"
            )
    hyperparameters = {}
    for name, value in raw.items():
        if name not in HYPERPARAMETER_CHECKS:
            raise ConfigError(f"unknown hyperparameter {name!r}")
        if name not in required:
            raise ConfigError(
                f"hyperparameter {name!r} does not apply to family {family!r}"
            )
        hyperparameters[name] = HYPERPARAMETER_CHECKS[name](name, value)
    seed = payload.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("config key 'seed' must be a nonnegative integer")
    thresholds = payload.get("thresholds", 0.5)
    if isinstance(thresholds, (int, float)) and not isinstance(thresholds, bool):
        if not 0 < thresholds < 1:
            raise ConfigError("config key 'thresholds' must lie in (0, 1)")
        thresholds = float(thresholds)
    elif isinstance(thresholds, list):
        if not all(
            isinstance(t, (int, float)) and not isinstance(t, bool) and 0 < t < 1
            for t in thresholds
        ):
            raise ConfigError("config key 'thresholds' must lie in (0, 1)")
        thresholds = [float(t) for t in thresholds]
    else:
        raise ConfigError("config key 'thresholds' must be a number or a list")
    return {
        "family": family,
        "features": features,
        "hyperparameters": hyperparameters,
        "seed": seed,
        "thresholds": thresholds,
    }


def load_config(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return validate_config(payload)


# --- shared pipeline helpers --------------------------------------------------


def _label_matrix(corpus: Corpus) -> np.ndarray:
    Y = np.zeros((len(corpus), corpus.taxonomy.n_emotions), dtype=np.int64)
    for i, example in enumerate(corpus):
        for label in example.writer_labels:
            Y[i, label] = 1
    return Y


def _file_fingerprint(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _batched(n: int, size: int):
    for start in range(0, n, size):
        yield start, min(start + size, n)


def _fit_statistical(config: dict, corpus: Corpus):
    hp = config["hyperparameters"]
    token_lists = [example.tokens for example in corpus]
    vectorizer_cls = BowVectorizer if config["features"] == "bow" else TfidfVectorizer
    vectorizer = vectorizer_cls(vocabulary_size=hp["Vocabulary Size"])
    X = vectorizer.fit(token_lists).transform(token_lists)
    Y = _label_matrix(corpus)
    batch = hp["Batch Size"]
    family = config["family"]
    if family == "naive_bayes":
        learner = MultinomialNaiveBayes(alpha=hp["Smoothing Factor"])
        for start, stop in _batched(X.shape[0], batch):
            learner.partial_fit(X[start:stop], Y[start:stop], n_labels=Y.shape[1])
    elif family == "logistic":
        learner = SgdLogisticRegression(
            alpha=hp["α"],
            epochs=hp["Epochs"],
            tolerance=hp["Tolerance"],
            minibatch_size=batch,
            seed=config["seed"],
        ).fit(X, Y)
    else:
        n_batches = math.ceil(X.shape[0] / batch)
        learner = IncrementalRandomForest(
            max_trees=hp["Trees per Batch"] * n_batches,
            trees_per_batch=hp["Trees per Batch"],
            max_depth=hp["Max. Depth"],
            feature_fraction=hp["Max. Features Fraction"],
            seed=config["seed"],
        )
        for start, stop in _batched(X.shape[0], batch):
            learner.partial_fit(X[start:stop], Y[start:stop], n_labels=Y.shape[1])
    if config["features"] == "bow":
        return FeatureSpace.bow(vectorizer), learner
    return FeatureSpace.tfidf(vectorizer), learner


def _sequence_batch(corpus: Corpus, table, max_length: int) -> SequenceBatch:
    kept = [example for example in corpus if example.tokens]
    dropped = len(corpus) - len(kept)
    if dropped:
        print(f"skipped {dropped} token-free examples", file=sys.stderr)
    if not kept:
        raise ValueError("no examples with tokens to train on")
    sequences = [
        embed_sequence(example.tokens, table, max_length) for example in kept
    ]
    Y = np.zeros((len(kept), corpus.taxonomy.n_emotions), dtype=np.int64)
    for i, example in enumerate(kept):
        for label in example.writer_labels:
            Y[i, label] = 1
    return SequenceBatch.from_sequences(sequences, Y)


def _fit_neural(config: dict, corpus: Corpus, val: Corpus, log_stream):
    hp = config["hyperparameters"]
    table = load_embedding_table(hp["Model"])
    max_length = hp["Max Length"]
    train_batch = _sequence_batch(corpus, table, max_length)
    val_batch = _sequence_batch(val, table, max_length)
    dim = table.vectors.shape[1]
    n_labels = corpus.taxonomy.n_emotions
    if config["family"] == "pooled_dnn":
        model = PooledDnn(
            dim,
            n_labels,
            hidden_size=hp["Hidden Size"],
            num_layers=hp["Num. Layers"],
            activation=hp["Activation"],
            pooling=hp["Pooling Function"],
            seed=config["seed"],
        )
    else:
        model = BiLstm(
            dim,
            n_labels,
            hidden_size=hp["Hidden Size"],
            num_layers=hp["Num. Layers"],
            bidirectional=hp["Bidirectional"],
            pooling=hp["Pooling Function"],
            seed=config["seed"],
        )
    result = train(
        model,
        train_batch,
        val_batch,
        num_epochs=hp["Num. Epochs"],
        batch_size=hp["Batch Size"],
        learning_rate=hp["Learning Rate"],
        epsilon=hp["Epsilon"],
        seed=config["seed"],
        log_stream=log_stream,
    )
    space = FeatureSpace.embedding(table, max_length, source=hp["Model"])
    return space, result


def _threshold_vector(config: dict, n_labels: int) -> np.ndarray:
    value = config["thresholds"]
    if isinstance(value, list):
        if len(value) != n_labels:
            raise ConfigError(
                f"config key 'thresholds' needs {n_labels} entries, "
                f"got {len(value)}"
            )
        return np.asarray(value, dtype=np.float64)
    return np.full(n_labels, value)


def _corpus_scores(artifact: ModelArtifact, corpus: Corpus) -> np.ndarray:
    token_lists = [example.tokens for example in corpus]
    if artifact.feature_space.is_sparse:
        return artifact.score_tokens(token_lists)
    # bound the dense (batch, T, d) blocks
    chunks = []
    for start, stop in _batched(len(token_lists), 512):
        chunks.append(artifact.score_tokens(token_lists[start:stop]))
    return np.vstack(chunks)


def _prediction_set(artifact: ModelArtifact, corpus: Corpus) -> PredictionSet:
    scores = _corpus_scores(artifact, corpus)
    golds = tuple(example.writer_labels for example in corpus)
    ids = tuple(str(example.id) for example in corpus)
    return PredictionSet(artifact.taxonomy, scores, golds, ids)


def _emit(payload: dict, output: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _writer_labels(corpus: Corpus) -> dict:
    return {str(example.id): example.writer_labels for example in corpus}


# --- subcommand handlers ------------------------------------------------------


def cmd_prepare(args) -> int:
    taxonomy = EmotionTaxonomy.load(args.taxonomy)
    loaders = {
        "goemotions": load_goemotions_tsv,
        "vent": load_vent_jsonl,
        "jsonl": load_corpus_jsonl,
    }
    corpus = loaders[args.format](args.input, taxonomy)
    if args.split:
        fractions = tuple(float(x) for x in args.split.split(","))
        if len(fractions) != 3:
            raise ConfigError("--split needs three comma-separated fractions")
        splitter = split_temporal if args.temporal else split_random
        if args.temporal:
            parts = splitter(corpus, fractions)
        else:
            parts = splitter(corpus, fractions, seed=args.seed)
        base = Path(args.output)
        for part, suffix in zip(parts, ("train", "val", "test")):
            target = base.with_suffix(f".{suffix}{base.suffix}")
            save_corpus_jsonl(part, target)
            print(f"wrote {len(part)} examples to {target}")
    else:
        save_corpus_jsonl(corpus, args.output)
        print(f"wrote {len(corpus)} examples to {args.output}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = load_config(args.config)
    taxonomy = EmotionTaxonomy.load(args.taxonomy)
    corpus = load_corpus_jsonl(args.train, taxonomy)
    val = load_corpus_jsonl(args.val, taxonomy) if args.val else None
    neural = config["family"] in NEURAL_FAMILIES
    if neural and val is None:
        raise ConfigError(
            f"family {config['family']!r} needs --val for epoch selection"
        )
    if args.tune_thresholds and val is None:
        raise ConfigError("--tune-thresholds needs --val")
    training_log = {}
    if neural:
        log_stream = open(args.log, "w", encoding="utf-8") if args.log else None
        try:
            space, result = _fit_neural(config, corpus, val, log_stream)
        finally:
            if log_stream:
                log_stream.close()
        learner = result.model
        training_log = {
            "best_epoch": int(result.best_epoch),
            "best_val_micro_f1": float(result.best_val_micro_f1),
        }
    else:
        space, learner = _fit_statistical(config, corpus)
    thresholds = _threshold_vector(config, taxonomy.n_emotions)
    metadata = {
        "seed": config["seed"],
        "family": config["family"],
        "features": config["features"],
        "hyperparameters": config["hyperparameters"],
        "data_fingerprint": _file_fingerprint(args.train),
        "examples": len(corpus),
        **training_log,
    }
    artifact = ModelArtifact(taxonomy, space, learner, thresholds, metadata)
    if args.tune_thresholds:
        tuned = tune_thresholds(_prediction_set(artifact, val), DEFAULT_GRID)
        artifact = ModelArtifact(taxonomy, space, learner, tuned, metadata)
    save_model(artifact, args.output)
    print(f"saved {config['family']} model to {args.output}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    artifact = load_model(args.model)
    corpus = load_corpus_jsonl(args.data, artifact.taxonomy)
    pred = _prediction_set(artifact, corpus)
    report = compute_metrics(pred, artifact.thresholds, with_categories=True)
    if args.save_predictions:
        save_predictions_jsonl(pred, args.save_predictions)
    print(format_reports_table({artifact.learner_kind: report}))
    _emit(report.to_dict(), args.output)
    return EXIT_OK


def cmd_hierarchy(args) -> int:
    artifact = load_model(args.model)
    corpus = load_corpus_jsonl(args.data, artifact.taxonomy)
    pred = _prediction_set(artifact, corpus)
    confusion = build_confusion(pred, artifact.thresholds)
    if args.csv:
        write_confusion_csv(confusion, args.csv)
    if args.level == "emotion":
        tree, excluded = emotion_dendrogram(confusion, linkage=args.linkage)
    else:
        tree = category_activation_dendrogram(
            confusion, artifact.taxonomy, linkage=args.linkage
        )
        excluded = ()
    document = {
        "level": args.level,
        "linkage": args.linkage,
        "excluded": list(excluded),
        "tree": export_dendrogram(tree),
    }
    _emit(document, args.output)
    if args.bundle:
        bundled = ModelArtifact(
            artifact.taxonomy,
            artifact.feature_space,
            artifact.learner,
            artifact.thresholds,
            artifact.metadata,
            hierarchy=document,
        )
        save_model(bundled, args.model)
        print(f"bundled hierarchy into {args.model}", file=sys.stderr)
    return EXIT_OK


def cmd_annotate_agreement(args) -> int:
    taxonomy = EmotionTaxonomy.load(args.taxonomy)
    records = load_annotations_csv(args.annotations, taxonomy)
    stats = agreement_stats(records, taxonomy)
    _emit(stats.to_dict(), args.output)
    return EXIT_OK


def cmd_annotate_cross_f1(args) -> int:
    taxonomy = EmotionTaxonomy.load(args.taxonomy)
    records = load_annotations_csv(args.annotations, taxonomy)
    corpus = load_corpus_jsonl(args.corpus, taxonomy)
    pred = load_predictions_jsonl(args.predictions, taxonomy)
    thresholds = np.full(taxonomy.n_emotions, args.threshold)
    table = cross_predict_f1(
        _writer_labels(corpus),
        records,
        pred,
        thresholds,
        majority_vote=args.majority_vote,
    )
    if args.csv:
        write_cross_prediction_csv(table, args.csv)
    _emit(table.to_dict(), args.output)
    return EXIT_OK


def cmd_annotate_delta(args) -> int:
    taxonomy = EmotionTaxonomy.load(args.taxonomy)
    records = load_annotations_csv(args.annotations, taxonomy)
    corpus = load_corpus_jsonl(args.corpus, taxonomy)
    pred = load_predictions_jsonl(args.predictions, taxonomy)
    thresholds = np.full(taxonomy.n_emotions, args.threshold)
    delta = confusion_delta_bootstrap(
        _writer_labels(corpus),
        records,
        pred,
        thresholds,
        runs=args.runs,
        sample_size=args.sample_size,
        alpha=args.alpha,
        seed=args.seed,
    )
    if args.csv:
        write_delta_csv(delta, args.csv)
    _emit(delta.to_dict(), args.output)
    return EXIT_OK


def cmd_serve(args) -> int:
    artifact = load_model(args.model)
    serve(
        artifact,
        args.host,
        args.port,
        max_text_bytes=args.max_text_bytes,
        static_dir=args.static_dir,
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    artifact = load_model(args.model)
    text = sys.stdin.read()
    print(json.dumps(prediction_response(artifact, text), indent=2))
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emoclass",
        description="Multi-label emotion classification pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="convert a raw corpus to JSONL")
    p.add_argument("--format", choices=("goemotions", "vent", "jsonl"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--split", help="train,val,test fractions, e.g. 0.8,0.1,0.1")
    p.add_argument("--temporal", action="store_true", help="split by timestamp")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_prepare)

    p = sub.add_parser("train", help="train a model from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--val")
    p.add_argument("--output", required=True)
    p.add_argument("--log", help="epoch log JSONL path (sequence models)")
    p.add_argument("--tune-thresholds", action="store_true")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="score a corpus and report metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--output")
    p.add_argument("--save-predictions")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("hierarchy", help="cluster confusion rows into a dendrogram")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--level", choices=("emotion", "category"), default="emotion")
    p.add_argument("--linkage", choices=LINKAGES, default="average")
    p.add_argument("--output")
    p.add_argument("--csv", help="also write the confusion matrix CSV")
    p.add_argument("--bundle", action="store_true", help="embed the tree in the artifact")
    p.set_defaults(handler=cmd_hierarchy)

    p = sub.add_parser("annotate", help="reader-annotation analysis")
    annotate = p.add_subparsers(dest="annotate_command", required=True)

    a = annotate.add_parser("agreement", help="inter-reader agreement stats")
    a.add_argument("--annotations", required=True)
    a.add_argument("--taxonomy", required=True)
    a.add_argument("--output")
    a.set_defaults(handler=cmd_annotate_agreement)

    a = annotate.add_parser("cross-f1", help="writer/reader/model cross-prediction")
    a.add_argument("--annotations", required=True)
    a.add_argument("--taxonomy", required=True)
    a.add_argument("--corpus", required=True)
    a.add_argument("--predictions", required=True)
    a.add_argument("--threshold", type=float, default=0.5)
    a.add_argument("--majority-vote", action="store_true")
    a.add_argument("--csv")
    a.add_argument("--output")
    a.set_defaults(handler=cmd_annotate_cross_f1)

    a = annotate.add_parser("delta", help="bootstrapped confusion differences")
    a.add_argument("--annotations", required=True)
    a.add_argument("--taxonomy", required=True)
    a.add_argument("--corpus", required=True)
    a.add_argument("--predictions", required=True)
    a.add_argument("--threshold", type=float, default=0.5)
    a.add_argument("--runs", type=int, default=10000)
    a.add_argument("--sample-size", type=int, default=None)
    a.add_argument("--alpha", type=float, default=0.001)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--csv")
    a.add_argument("--output")
    a.set_defaults(handler=cmd_annotate_delta)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--max-text-bytes", type=int, default=DEFAULT_MAX_TEXT_BYTES)
    p.add_argument("--static-dir")
    p.set_defaults(handler=cmd_serve)

    p = sub.add_parser("predict", help="score stdin text, print JSON")
    p.add_argument("--model", required=True)
    p.set_defaults(handler=cmd_predict)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ArtifactError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ValueError, RuntimeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
