import contextlib
import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from emoclass.artifacts import FeatureSpace, ModelArtifact
from emoclass.features.embeddings import EmbeddingTable
from emoclass.features.sparse import BowVectorizer
from emoclass.learners import MultinomialNaiveBayes, PooledDnn
from emoclass.server import (
    make_server,
    model_info,
    prediction_response,
    resolve_bind_address,
)
from emoclass.taxonomy import EmotionTaxonomy

TAXONOMY = EmotionTaxonomy(
    emotions=("joy", "love", "anger", "fear"),
    categories=("pos", "neg"),
    category_of=(0, 0, 1, 1),
)

WORDS = "sun rain gift loss smile frown laugh cry warm cold".split()


def sparse_artifact(hierarchy=None):
    rng = np.random.default_rng(0)
    token_lists = [
        list(rng.choice(WORDS, size=rng.integers(1, 8))) for _ in range(40)
    ]
    vec = BowVectorizer(vocabulary_size=50, stop_words=None).fit(token_lists)
    Y = (rng.random((40, 4)) < 0.4).astype(int)
    Y[:, 0] |= 1 - Y.max(axis=1)
    nb = MultinomialNaiveBayes(alpha=0.1).fit(vec.transform(token_lists), Y)
    return ModelArtifact(
        TAXONOMY,
        FeatureSpace.bow(vec),
        nb,
        np.full(4, 0.5),
        {"seed": 0, "fingerprint": "fixture"},
        hierarchy=hierarchy,
    )


def embedding_artifact():
    rng = np.random.default_rng(1)
    table = EmbeddingTable(tuple(WORDS), rng.normal(size=(len(WORDS), 5)))
    model = PooledDnn(5, 4, hidden_size=4, num_layers=1, seed=2)
    return ModelArtifact(
        TAXONOMY, FeatureSpace.embedding(table, 10), model, np.full(4, 0.5)
    )


@contextlib.contextmanager
def running(artifact, **kwargs):
    server = make_server(artifact, "127.0.0.1", 0, **kwargs)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)


def get(url):
    with urllib.request.urlopen(url, timeout=10) as response:
        return response.status, json.loads(response.read().decode("utf-8"))


def post(url, payload, raw=None):
    body = raw if raw is not None else json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(request, timeout=10) as response:
            return response.status, json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode("utf-8"))


# --- prediction responses ----------------------------------------------------


def test_predict_shapes_follow_the_taxonomy():
    with running(sparse_artifact()) as base:
        status, body = post(f"{base}/predict", {"text": "warm sun and a gift"})
    assert status == 200
    assert [e["name"] for e in body["emotions"]] == list(TAXONOMY.emotions)
    assert [e["category"] for e in body["emotions"]] == ["pos", "pos", "neg", "neg"]
    assert [c["name"] for c in body["categories"]] == list(TAXONOMY.categories)
    assert len(body["decided"]) >= 1
    assert set(body["decided"]) <= set(TAXONOMY.emotions)
    assert body["model"]["learner"] == "naive_bayes"
    assert body["model"]["features"] == "bow"
    assert body["model"]["thresholds"] == [0.5] * 4


def test_category_probability_is_the_member_maximum():
    with running(sparse_artifact()) as base:
        status, body = post(f"{base}/predict", {"text": "cold rain cry"})
    probs = {e["name"]: e["probability"] for e in body["emotions"]}
    pooled = {c["name"]: c["probability"] for c in body["categories"]}
    assert pooled["pos"] == max(probs["joy"], probs["love"])
    assert pooled["neg"] == max(probs["anger"], probs["fear"])
    for value in probs.values():
        assert 0.0 <= value <= 1.0


def test_identical_requests_get_identical_responses():
    with running(sparse_artifact()) as base:
        first = post(f"{base}/predict", {"text": "smile laugh warm"})
        second = post(f"{base}/predict", {"text": "smile laugh warm"})
    assert first == second


def test_concurrent_identical_requests_agree():
    with running(sparse_artifact()) as base:
        def probe(_):
            return post(f"{base}/predict", {"text": "frown and loss"})

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(probe, range(24)))
    assert all(r == results[0] for r in results)
    assert results[0][0] == 200


def test_empty_text_is_fine_for_sparse_models():
    with running(sparse_artifact()) as base:
        status, body = post(f"{base}/predict", {"text": ""})
    assert status == 200
    assert len(body["emotions"]) == 4


def test_empty_text_is_422_for_embedding_models():
    with running(embedding_artifact()) as base:
        status, body = post(f"{base}/predict", {"text": ""})
    assert status == 422
    assert "empty sequence" in body["error"]


# --- request validation ------------------------------------------------------


def test_malformed_json_is_400():
    with running(sparse_artifact()) as base:
        status, body = post(f"{base}/predict", None, raw=b"{not json")
    assert status == 400
    assert "JSON" in body["error"]


def test_missing_text_field_is_400():
    with running(sparse_artifact()) as base:
        status, body = post(f"{base}/predict", {"message": "hi"})
        status2, _ = post(f"{base}/predict", {"text": 7})
    assert status == 400 and status2 == 400
    assert "text" in body["error"]


def test_oversized_text_is_413():
    with running(sparse_artifact(), max_text_bytes=64) as base:
        status, body = post(f"{base}/predict", {"text": "x" * 65})
        ok, _ = post(f"{base}/predict", {"text": "x" * 64})
    assert status == 413
    assert "64" in body["error"]
    assert ok == 200


def test_unknown_paths_are_404():
    with running(sparse_artifact()) as base:
        status, _ = post(f"{base}/shutdown", {"text": "x"})
        with pytest.raises(urllib.error.HTTPError) as err:
            get(f"{base}/models")
    assert status == 404
    assert err.value.code == 404


# --- metadata endpoints ------------------------------------------------------


def test_taxonomy_endpoint_returns_the_artifact_taxonomy():
    artifact = sparse_artifact()
    with running(artifact) as base:
        status, body = get(f"{base}/taxonomy")
    assert status == 200
    assert body == artifact.taxonomy.to_dict()
    assert body["emotions"] == list(TAXONOMY.emotions)
    assert body["categories"]["pos"] == ["joy", "love"]


def test_hierarchy_endpoint_serves_the_bundled_tree():
    tree = {
        "children": [{"name": "a", "height": 0.0}, {"name": "b", "height": 0.0}],
        "height": 2.0,
    }
    with running(sparse_artifact(hierarchy=tree)) as base:
        status, body = get(f"{base}/hierarchy")
    assert status == 200
    assert body == tree


def test_missing_hierarchy_is_404_with_explanation():
    with running(sparse_artifact()) as base:
        with pytest.raises(urllib.error.HTTPError) as err:
            get(f"{base}/hierarchy")
    assert err.value.code == 404
    assert "hierarchy" in json.loads(err.value.read().decode("utf-8"))["error"]


def test_health_metadata_is_stable_across_a_thousand_predictions():
    artifact = sparse_artifact()
    with running(artifact) as base:
        _, before = get(f"{base}/health")
        for _ in range(1000):
            status, _ = post(f"{base}/predict", {"text": "warm sun"})
            assert status == 200
        _, after = get(f"{base}/health")
    assert before["status"] == "ok"
    assert before == after
    assert before["model"] == model_info(artifact)


def test_prediction_response_is_json_serializable():
    payload = prediction_response(sparse_artifact(), "gift and smile")
    parsed = json.loads(json.dumps(payload))
    assert parsed["model"]["metadata"]["fingerprint"] == "fixture"


# --- static files and bind address -------------------------------------------


def test_static_files_are_served_when_configured(tmp_path):
    (tmp_path / "index.html").write_text("<h1>ui</h1>", encoding="utf-8")
    (tmp_path / "app.js").write_text("console.log(1)", encoding="utf-8")
    with running(sparse_artifact(), static_dir=tmp_path) as base:
        with urllib.request.urlopen(f"{base}/", timeout=10) as response:
            index = response.read().decode("utf-8")
            content_type = response.headers["Content-Type"]
        with urllib.request.urlopen(f"{base}/app.js", timeout=10) as response:
            script = response.read().decode("utf-8")
    assert index == "<h1>ui</h1>"
    assert content_type.startswith("text/html")
    assert script == "console.log(1)"


def test_path_traversal_is_blocked(tmp_path):
    (tmp_path / "index.html").write_text("ok", encoding="utf-8")
    with running(sparse_artifact(), static_dir=tmp_path) as base:
        with pytest.raises(urllib.error.HTTPError) as err:
            urllib.request.urlopen(f"{base}/../secret.txt", timeout=10)
    assert err.value.code == 404


def test_bind_address_env_override():
    assert resolve_bind_address("0.0.0.0", 80, env={}) == ("0.0.0.0", 80)
    env = {"EMOCLASS_BIND": "10.1.2.3:9999"}
    assert resolve_bind_address("0.0.0.0", 80, env=env) == ("10.1.2.3", 9999)
    assert resolve_bind_address("h", 1, env={"EMOCLASS_BIND": ":7000"}) == ("h", 7000)
    with pytest.raises(ValueError, match="host:port"):
        resolve_bind_address("h", 1, env={"EMOCLASS_BIND": "8080"})
    with pytest.raises(ValueError, match="port"):
        resolve_bind_address("h", 1, env={"EMOCLASS_BIND": "h:abc"})
