"""HTTP inference service over one loaded model artifact.

Endpoints: POST /predict, GET /taxonomy, GET /hierarchy, GET /health.
Responses are pure functions of (artifact, request body); the artifact is
never mutated, so a threading server needs no locks.
"""

from __future__ import annotations

import json
import os
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .artifacts import ModelArtifact
from .evaluation import category_pool, decide

DEFAULT_MAX_TEXT_BYTES = 16 * 1024
BIND_ADDRESS_ENV = "EMOCLASS_BIND"

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
}


def model_info(artifact: ModelArtifact) -> dict:
    return {
        "learner": artifact.learner_kind,
        "features": artifact.feature_space.kind,
        "thresholds": [float(t) for t in artifact.thresholds],
        "metadata": artifact.metadata,
    }


def prediction_response(artifact: ModelArtifact, text: str) -> dict:
    """PredictionResponse payload: per-emotion and pooled per-category
    probabilities plus the decided label names."""
    taxonomy = artifact.taxonomy
    scores = artifact.score([text])[0]
    pooled = category_pool(scores, taxonomy)
    decided = decide(scores, artifact.thresholds)
    return {
        "emotions": [
            {
                "name": taxonomy.emotions[i],
                "category": taxonomy.categories[taxonomy.category_of[i]],
                "probability": float(scores[i]),
            }
            for i in range(taxonomy.n_emotions)
        ],
        "categories": [
            {"name": taxonomy.categories[c], "probability": float(pooled[c])}
            for c in range(taxonomy.n_categories)
        ],
        "decided": [taxonomy.emotions[i] for i in sorted(decided)],
        "model": model_info(artifact),
    }


def resolve_bind_address(
    host: str, port: int, env: dict | None = None
) -> tuple[str, int]:
    """Apply the EMOCLASS_BIND override ("host:port") when present."""
    env = os.environ if env is None else env
    value = env.get(BIND_ADDRESS_ENV, "").strip()
    if not value:
        return host, port
    if ":" not in value:
        raise ValueError(
            f"{BIND_ADDRESS_ENV} must look like host:port, got {value!r}"
        )
    host_part, port_part = value.rsplit(":", 1)
    try:
        return host_part or host, int(port_part)
    except ValueError:
        raise ValueError(
            f"{BIND_ADDRESS_ENV} has a non-numeric port: {value!r}"
        ) from None


class _Handler(BaseHTTPRequestHandler):
    artifact: ModelArtifact
    max_text_bytes: int
    static_dir: Path | None

    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):
        pass

    def _send_json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, code: int, message: str) -> None:
        self._send_json(code, {"error": message})

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        if path == "/taxonomy":
            self._send_json(200, self.artifact.taxonomy.to_dict())
        elif path == "/hierarchy":
            if self.artifact.hierarchy is None:
                self._send_error(404, "no hierarchy bundled in this artifact")
            else:
                self._send_json(200, self.artifact.hierarchy)
        elif path == "/health":
            self._send_json(200, {"status": "ok", "model": model_info(self.artifact)})
        else:
            self._serve_static(path)

    def _serve_static(self, path: str) -> None:
        if self.static_dir is None:
            self._send_error(404, f"unknown path {path}")
            return
        relative = path.lstrip("/") or "index.html"
        target = (self.static_dir / relative).resolve()
        root = self.static_dir.resolve()
        if root not in target.parents and target != root:
            self._send_error(404, f"unknown path {path}")
            return
        if not target.is_file():
            self._send_error(404, f"unknown path {path}")
            return
        body = target.read_bytes()
        self.send_response(200)
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        path = self.path.split("?", 1)[0]
        if path != "/predict":
            self._send_error(404, f"unknown path {path}")
            return
        try:
            length = int(self.headers.get("Content-Length", ""))
        except ValueError:
            self._send_error(400, "Content-Length header required")
            return
        # generous envelope for JSON quoting and escapes around the text cap
        if length > self.max_text_bytes + 65536:
            self._send_error(413, "request body too large")
            return
        body = self.rfile.read(length)
        try:
            payload = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            self._send_error(400, f"body is not valid JSON: {exc}")
            return
        if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
            self._send_error(400, 'body must be a JSON object with a string "text"')
            return
        text = payload["text"]
        if len(text.encode("utf-8")) > self.max_text_bytes:
            self._send_error(
                413, f"text exceeds the {self.max_text_bytes} byte limit"
            )
            return
        try:
            response = prediction_response(self.artifact, text)
        except ValueError as exc:
            # the embedding path rejects token-free input
            self._send_error(422, str(exc))
            return
        self._send_json(200, response)


def make_server(
    artifact: ModelArtifact,
    host: str = "127.0.0.1",
    port: int = 8765,
    *,
    max_text_bytes: int = DEFAULT_MAX_TEXT_BYTES,
    static_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    handler = type(
        "BoundHandler",
        (_Handler,),
        {
            "artifact": artifact,
            "max_text_bytes": int(max_text_bytes),
            "static_dir": Path(static_dir) if static_dir is not None else None,
        },
    )
    return ThreadingHTTPServer((host, port), handler)


def serve(
    artifact: ModelArtifact,
    host: str = "127.0.0.1",
    port: int = 8765,
    *,
    max_text_bytes: int = DEFAULT_MAX_TEXT_BYTES,
    static_dir: str | Path | None = None,
) -> None:
    host, port = resolve_bind_address(host, port)
    server = make_server(
        artifact, host, port, max_text_bytes=max_text_bytes, static_dir=static_dir
    )
    try:
        server.serve_forever()
    finally:
        server.server_close()
