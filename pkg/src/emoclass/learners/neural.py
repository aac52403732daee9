"""Neural sequence heads with manual backpropagation.

Two architectures score embedding sequences against independent emotion
labels: a per-token multilayer perceptron whose token logits are pooled
(``PooledDnn``) and a stacked, optionally bidirectional LSTM pooled the
same way (``BiLstm``).  Pooling only ever sees real tokens; padded
positions are excluded by the mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..base import check_label_matrix, check_random_state

# probabilities are clamped to [EPSILON, 1 - EPSILON] inside the loss
EPSILON = 1e-7

POOLINGS = ("max", "mean", "attention")
ACTIVATIONS = ("tanh", "elu")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_elements(probabilities: np.ndarray, targets: np.ndarray) -> np.ndarray:
    p = np.clip(probabilities, EPSILON, 1.0 - EPSILON)
    return -(targets * np.log(p) + (1.0 - targets) * np.log1p(-p))


def bce_loss(probabilities, targets) -> float:
    """Mean binary cross-entropy of one score vector against 0/1 targets."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.ndim != 1 or p.shape != y.shape:
        raise ValueError("probabilities and targets must be equal-length vectors")
    if ((y != 0) & (y != 1)).any():
        raise ValueError("targets must be 0 or 1")
    return float(_bce_elements(p, y).mean())


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    return np.where(z > 0, z, np.expm1(z))


def _activate_grad(kind: str, z: np.ndarray, activated: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return 1.0 - activated * activated
    return np.where(z > 0, 1.0, activated + 1.0)


def _uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _check_batch(vectors, mask, input_dim: int):
    vectors = np.asarray(vectors, dtype=np.float64)
    mask = np.asarray(mask)
    if vectors.ndim != 3:
        raise ValueError("vectors must have shape (batch, tokens, dim)")
    if mask.shape != vectors.shape[:2] or mask.dtype != np.bool_:
        raise ValueError("mask must be boolean with shape (batch, tokens)")
    if vectors.shape[0] == 0:
        raise ValueError("empty batch")
    if vectors.shape[2] != input_dim:
        raise ValueError(
            f"embedding dimension {vectors.shape[2]} does not match "
            f"model input width {input_dim}"
        )
    if not np.isfinite(vectors).all():
        raise ValueError("vectors must be finite")
    if not mask.any(axis=1).all():
        raise ValueError("empty sequence")
    return vectors, mask


# --- masked pooling over per-token logits --------------------------------


def _pool_forward(kind, logits, features, mask, v):
    if kind == "max":
        masked = np.where(mask[:, :, None], logits, -np.inf)
        idx = masked.argmax(axis=1)
        pooled = np.take_along_axis(masked, idx[:, None, :], axis=1)[:, 0, :]
        return pooled, ("max", idx)
    if kind == "mean":
        weights = mask.astype(np.float64)
        count = weights.sum(axis=1)
        pooled = (logits * weights[:, :, None]).sum(axis=1) / count[:, None]
        return pooled, ("mean", weights / count[:, None])
    scores = np.where(mask, features @ v, -np.inf)
    shifted = np.exp(scores - scores.max(axis=1, keepdims=True))
    weights = shifted / shifted.sum(axis=1, keepdims=True)
    pooled = np.einsum("bt,btn->bn", weights, logits)
    return pooled, ("attention", weights)


def _pool_backward(cache, dpooled, logits, features, v):
    kind = cache[0]
    if kind == "max":
        dlogits = np.zeros_like(logits)
        np.put_along_axis(dlogits, cache[1][:, None, :], dpooled[:, None, :], axis=1)
        return dlogits, None, None
    if kind == "mean":
        dlogits = dpooled[:, None, :] * cache[1][:, :, None]
        return dlogits, None, None
    weights = cache[1]
    dlogits = weights[:, :, None] * dpooled[:, None, :]
    dweights = np.einsum("bn,btn->bt", dpooled, logits)
    inner = (weights * dweights).sum(axis=1, keepdims=True)
    dscores = weights * (dweights - inner)
    dv = np.einsum("bt,btf->f", dscores, features)
    dfeatures = dscores[:, :, None] * v[None, None, :]
    return dlogits, dfeatures, dv


# --- model shells ---------------------------------------------------------


class _SequenceModel:
    """Per-token features -> shared logit projection -> masked pooling."""

    kind = ""

    def __init__(self, input_dim, n_labels, hidden_size, pooling):
        if input_dim < 1 or n_labels < 1 or hidden_size < 1:
            raise ValueError("input_dim, n_labels and hidden_size must be >= 1")
        if pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}, got {pooling!r}")
        self.input_dim = int(input_dim)
        self.n_labels = int(n_labels)
        self.hidden_size = int(hidden_size)
        self.pooling = pooling
        self.params: dict[str, np.ndarray] = {}

    @property
    def feature_width(self) -> int:
        return self.hidden_size

    def copy_params(self) -> dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}

    def load_params(self, params: Mapping[str, np.ndarray]) -> None:
        if set(params) != set(self.params):
            raise ValueError("parameter names do not match this architecture")
        for name, value in params.items():
            if value.shape != self.params[name].shape:
                raise ValueError(f"parameter {name!r} has shape {value.shape}, "
                                 f"expected {self.params[name].shape}")
            self.params[name][...] = value

    def forward(self, vectors, mask) -> np.ndarray:
        """Per-label probabilities, shape (batch, n_labels)."""
        probs, _ = self._forward_cached(vectors, mask)
        return probs

    def _forward_cached(self, vectors, mask):
        vectors, mask = _check_batch(vectors, mask, self.input_dim)
        batch, tokens = mask.shape
        features, feat_cache = self._token_features(vectors, mask)
        flat = features.reshape(batch * tokens, self.feature_width)
        w_out, b_out = self.params["out/W"], self.params["out/b"]
        logits = (flat @ w_out.T + b_out).reshape(batch, tokens, self.n_labels)
        pooled, pool_cache = _pool_forward(
            self.pooling, logits, features, mask, self.params.get("attention/v")
        )
        probs = _sigmoid(pooled)
        return probs, (mask, features, feat_cache, logits, pool_cache)

    def forward_backward(self, vectors, mask, targets):
        """Mean BCE over the batch plus gradients for every parameter."""
        probs, cache = self._forward_cached(vectors, mask)
        mask_arr, features, feat_cache, logits, pool_cache = cache
        y = check_label_matrix(
            np.asarray(targets), probs.shape[0], self.n_labels
        ).astype(np.float64)
        loss = float(_bce_elements(probs, y).mean())

        # clamped probabilities contribute no gradient
        clamped = (probs < EPSILON) | (probs > 1.0 - EPSILON)
        dpooled = np.where(clamped, 0.0, probs - y) / probs.size

        grads = {name: np.zeros_like(value) for name, value in self.params.items()}
        dlogits, dfeatures_attn, dv = _pool_backward(
            pool_cache, dpooled, logits, features, self.params.get("attention/v")
        )
        if dv is not None:
            grads["attention/v"] += dv

        batch, tokens = mask_arr.shape
        flat_dlogits = dlogits.reshape(batch * tokens, self.n_labels)
        flat_features = features.reshape(batch * tokens, self.feature_width)
        grads["out/W"] += flat_dlogits.T @ flat_features
        grads["out/b"] += flat_dlogits.sum(axis=0)
        dfeatures = (flat_dlogits @ self.params["out/W"]).reshape(features.shape)
        if dfeatures_attn is not None:
            dfeatures = dfeatures + dfeatures_attn
        self._token_features_backward(dfeatures, feat_cache, grads)
        return loss, grads

    def _token_features(self, vectors, mask):
        raise NotImplementedError

    def _token_features_backward(self, dfeatures, cache, grads):
        raise NotImplementedError


class PooledDnn(_SequenceModel):
    """Multilayer perceptron applied to every token independently."""

    kind = "pooled_dnn"

    def __init__(self, input_dim, n_labels, *, hidden_size=100, num_layers=2,
                 activation="tanh", pooling="max", seed=0):
        super().__init__(input_dim, n_labels, hidden_size, pooling)
        if activation not in ACTIVATIONS:
            raise ValueError(
                f"activation must be one of {ACTIVATIONS}, got {activation!r}"
            )
        if num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        self.activation = activation
        self.num_layers = int(num_layers)
        rng = check_random_state(seed)
        fan_in = self.input_dim
        for layer in range(self.num_layers):
            self.params[f"layer{layer}/W"] = _uniform_init(
                rng, (self.hidden_size, fan_in), fan_in
            )
            self.params[f"layer{layer}/b"] = _uniform_init(
                rng, (self.hidden_size,), fan_in
            )
            fan_in = self.hidden_size
        self.params["out/W"] = _uniform_init(
            rng, (self.n_labels, self.hidden_size), self.hidden_size
        )
        self.params["out/b"] = _uniform_init(rng, (self.n_labels,), self.hidden_size)
        if pooling == "attention":
            self.params["attention/v"] = _uniform_init(
                rng, (self.hidden_size,), self.hidden_size
            )

    @property
    def config(self) -> dict:
        return {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "n_labels": self.n_labels,
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "activation": self.activation,
            "pooling": self.pooling,
        }

    def _token_features(self, vectors, mask):
        batch, tokens, dim = vectors.shape
        activated = vectors.reshape(batch * tokens, dim)
        pre_acts, acts = [], [activated]
        for layer in range(self.num_layers):
            z = activated @ self.params[f"layer{layer}/W"].T
            z += self.params[f"layer{layer}/b"]
            activated = _activate(self.activation, z)
            pre_acts.append(z)
            acts.append(activated)
        return activated.reshape(batch, tokens, self.hidden_size), (pre_acts, acts)

    def _token_features_backward(self, dfeatures, cache, grads):
        pre_acts, acts = cache
        da = dfeatures.reshape(-1, self.hidden_size)
        for layer in reversed(range(self.num_layers)):
            dz = da * _activate_grad(self.activation, pre_acts[layer], acts[layer + 1])
            grads[f"layer{layer}/W"] += dz.T @ acts[layer]
            grads[f"layer{layer}/b"] += dz.sum(axis=0)
            da = dz @ self.params[f"layer{layer}/W"]


def _lstm_forward(x, mask, w, u, b, hidden):
    batch, tokens, _ = x.shape
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    out = np.empty((batch, tokens, hidden))
    steps = []
    for t in range(tokens):
        xt = x[:, t]
        z = xt @ w.T + h @ u.T + b
        gi = _sigmoid(z[:, :hidden])
        gf = _sigmoid(z[:, hidden:2 * hidden])
        gg = np.tanh(z[:, 2 * hidden:3 * hidden])
        go = _sigmoid(z[:, 3 * hidden:])
        c_cand = gf * c + gi * gg
        tanh_c = np.tanh(c_cand)
        h_cand = go * tanh_c
        mt = mask[:, t][:, None]
        steps.append((xt, h, c, gi, gf, gg, go, tanh_c, mt))
        # padded steps carry state through unchanged
        c = mt * c_cand + (1.0 - mt) * c
        h = mt * h_cand + (1.0 - mt) * h
        out[:, t] = h
    return out, steps


def _lstm_backward(dout, steps, w, u, hidden, input_dim):
    batch, tokens, _ = dout.shape
    dw = np.zeros_like(w)
    du = np.zeros_like(u)
    db = np.zeros(4 * hidden)
    dx = np.empty((batch, tokens, input_dim))
    dh_next = np.zeros((batch, hidden))
    dc_next = np.zeros((batch, hidden))
    for t in reversed(range(tokens)):
        xt, h_prev, c_prev, gi, gf, gg, go, tanh_c, mt = steps[t]
        dh = dout[:, t] + dh_next
        dh_cand = mt * dh
        dc_cand = mt * dc_next
        dh_carry = (1.0 - mt) * dh
        dc_carry = (1.0 - mt) * dc_next
        dgo = dh_cand * tanh_c
        dc_cand = dc_cand + dh_cand * go * (1.0 - tanh_c * tanh_c)
        dgi = dc_cand * gg
        dgg = dc_cand * gi
        dgf = dc_cand * c_prev
        dc_prev = dc_carry + dc_cand * gf
        dz = np.concatenate(
            [
                dgi * gi * (1.0 - gi),
                dgf * gf * (1.0 - gf),
                dgg * (1.0 - gg * gg),
                dgo * go * (1.0 - go),
            ],
            axis=1,
        )
        dw += dz.T @ xt
        du += dz.T @ h_prev
        db += dz.sum(axis=0)
        dx[:, t] = dz @ w
        dh_next = dz @ u + dh_carry
        dc_next = dc_prev
    return dx, dw, du, db


class BiLstm(_SequenceModel):
    """Stacked, optionally bidirectional LSTM over the token sequence."""

    kind = "bilstm"

    def __init__(self, input_dim, n_labels, *, hidden_size=100, num_layers=2,
                 bidirectional=True, pooling="mean", seed=0):
        super().__init__(input_dim, n_labels, hidden_size, pooling)
        if num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        self.num_layers = int(num_layers)
        self.bidirectional = bool(bidirectional)
        self.directions = ("fw", "bw") if self.bidirectional else ("fw",)
        rng = check_random_state(seed)
        layer_input = self.input_dim
        for layer in range(self.num_layers):
            for direction in self.directions:
                prefix = f"lstm{layer}/{direction}"
                self.params[f"{prefix}/W"] = _uniform_init(
                    rng, (4 * self.hidden_size, layer_input), layer_input
                )
                self.params[f"{prefix}/U"] = _uniform_init(
                    rng, (4 * self.hidden_size, self.hidden_size), self.hidden_size
                )
                bias = _uniform_init(rng, (4 * self.hidden_size,), self.hidden_size)
                bias[self.hidden_size:2 * self.hidden_size] += 1.0
                self.params[f"{prefix}/b"] = bias
            layer_input = self.feature_width
        self.params["out/W"] = _uniform_init(
            rng, (self.n_labels, self.feature_width), self.feature_width
        )
        self.params["out/b"] = _uniform_init(rng, (self.n_labels,), self.feature_width)
        if pooling == "attention":
            self.params["attention/v"] = _uniform_init(
                rng, (self.feature_width,), self.feature_width
            )

    @property
    def feature_width(self) -> int:
        return self.hidden_size * len(self.directions)

    @property
    def config(self) -> dict:
        return {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "n_labels": self.n_labels,
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "bidirectional": self.bidirectional,
            "pooling": self.pooling,
        }

    def _token_features(self, vectors, mask):
        fmask = mask.astype(np.float64)
        rmask = np.ascontiguousarray(fmask[:, ::-1])
        x = vectors
        layer_caches = []
        for layer in range(self.num_layers):
            outputs, dir_caches = [], []
            for direction in self.directions:
                prefix = f"lstm{layer}/{direction}"
                w = self.params[f"{prefix}/W"]
                u = self.params[f"{prefix}/U"]
                b = self.params[f"{prefix}/b"]
                if direction == "fw":
                    seq, m = x, fmask
                else:
                    seq, m = np.ascontiguousarray(x[:, ::-1]), rmask
                h_seq, steps = _lstm_forward(seq, m, w, u, b, self.hidden_size)
                if direction == "bw":
                    h_seq = h_seq[:, ::-1]
                outputs.append(h_seq)
                dir_caches.append((steps, x.shape[2]))
            x = outputs[0] if len(outputs) == 1 else np.concatenate(outputs, axis=2)
            layer_caches.append(dir_caches)
        return x, layer_caches

    def _token_features_backward(self, dfeatures, cache, grads):
        dcurrent = dfeatures
        for layer in reversed(range(self.num_layers)):
            dinput = None
            for d, direction in enumerate(self.directions):
                prefix = f"lstm{layer}/{direction}"
                w = self.params[f"{prefix}/W"]
                u = self.params[f"{prefix}/U"]
                steps, input_dim = cache[layer][d]
                block = dcurrent[:, :, d * self.hidden_size:(d + 1) * self.hidden_size]
                if direction == "bw":
                    block = np.ascontiguousarray(block[:, ::-1])
                dx, dw, du, db = _lstm_backward(
                    np.ascontiguousarray(block), steps, w, u,
                    self.hidden_size, input_dim,
                )
                if direction == "bw":
                    dx = dx[:, ::-1]
                grads[f"{prefix}/W"] += dw
                grads[f"{prefix}/U"] += du
                grads[f"{prefix}/b"] += db
                dinput = dx if dinput is None else dinput + dx
            dcurrent = dinput


# --- finite-difference verification ---------------------------------------


@dataclass(frozen=True)
class GradientCheckReport:
    max_relative_error: float
    per_parameter: Mapping[str, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def _batch_loss(model, vectors, mask, targets) -> float:
    probs = model.forward(vectors, mask)
    return float(_bce_elements(probs, targets).mean())


def gradient_check(model, vectors, mask, targets, *, step=1e-4,
                   tolerance=1e-4) -> GradientCheckReport:
    """Compare analytic gradients against central finite differences.

    Intended for small instances (a handful of tokens, hidden size <= 8);
    cost grows with two forward passes per parameter element.
    """
    total = sum(p.size for p in model.params.values())
    if total > 20000:
        raise ValueError(
            f"model has {total} parameters; gradient checks are for small models"
        )
    targets = np.asarray(targets, dtype=np.float64)
    _, grads = model.forward_backward(vectors, mask, targets)
    per_parameter = {}
    for name, param in model.params.items():
        analytic = grads[name]
        fd = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            ix = it.multi_index
            original = param[ix]
            param[ix] = original + step
            plus = _batch_loss(model, vectors, mask, targets)
            param[ix] = original - step
            minus = _batch_loss(model, vectors, mask, targets)
            param[ix] = original
            fd[ix] = (plus - minus) / (2.0 * step)
            it.iternext()
        scale = max(np.abs(analytic).max(), np.abs(fd).max(), 1e-8)
        per_parameter[name] = float(np.abs(analytic - fd).max() / scale)
    return GradientCheckReport(
        max_relative_error=max(per_parameter.values()),
        per_parameter=per_parameter,
        tolerance=tolerance,
    )
