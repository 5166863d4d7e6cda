"""Classical embedder network g(x, w): PCA features -> feature-map angles.

Hidden layers are affine + tanh; the output layer is affine followed by
pi * tanh so every angle lies in (-pi, pi).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError, ShapeError

DEFAULT_LAYER_SIZES = (5, 8, 8, 5)


@dataclass
class MlpParams:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]  # weights[l] has shape (out, in)
    biases: list[np.ndarray]

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ShapeError(f"bad layer sizes {self.layer_sizes}")
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("one weight matrix and bias per layer transition required")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[l + 1], self.layer_sizes[l])
            if w.shape != shape or b.shape != (shape[0],):
                raise ShapeError(f"layer {l}: expected W{shape}, b{shape[:1]}, got W{w.shape}, b{b.shape}")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])

    def with_flat(self, vec) -> "MlpParams":
        vec = np.asarray(vec, dtype=float)
        ws, bs, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            ws.append(vec[pos:pos + w.size].reshape(w.shape))
            pos += w.size
            bs.append(vec[pos:pos + b.size].copy())
            pos += b.size
        if pos != vec.size:
            raise ShapeError(f"flat vector has {vec.size} entries, expected {pos}")
        return MlpParams(self.layer_sizes, ws, bs)

    def copy(self) -> "MlpParams":
        return MlpParams(self.layer_sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpParams":
        try:
            return cls(doc["layer_sizes"], doc["weights"], doc["biases"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed embedder parameters: {exc}") from exc


# gradients share the parameter layout
EmbedderGradient = MlpParams


def save_params(params: MlpParams, path) -> None:
    # json writes floats with repr(), which round-trips doubles exactly
    with open(path, "w") as fh:
        json.dump(params.to_dict(), fh)


def load_params(path) -> MlpParams:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return MlpParams.from_dict(doc)


def init_params(layer_sizes=DEFAULT_LAYER_SIZES, seed: int = 0, output_gain: float = 1.0) -> MlpParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.

    ``output_gain`` rescales the last weight matrix; values below 1 start
    training from angles that barely depend on the input.
    """
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if len(layer_sizes) < 2 or min(layer_sizes) < 1:
        raise ShapeError(f"bad layer sizes {layer_sizes}")
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    weights[-1] *= output_gain
    return MlpParams(layer_sizes, weights, biases)


def _check_input(params: MlpParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (params.layer_sizes[0],):
        raise ShapeError(f"input must have shape ({params.layer_sizes[0]},), got {x.shape}")
    return x


def _activations(params: MlpParams, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = np.tanh(w @ acts[-1] + b)
        acts.append(np.pi * z if l == params.n_layers - 1 else z)
    return acts


def forward(params: MlpParams, x) -> np.ndarray:
    return _activations(params, _check_input(params, x))[-1]


def backward(params: MlpParams, x, upstream, frozen=()) -> EmbedderGradient:
    """Gradient of a scalar loss w.r.t. every weight and bias.

    ``upstream`` is d(loss)/d(angles). Layers listed in ``frozen`` get an
    exactly-zero gradient.
    """
    x = _check_input(params, x)
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != (params.layer_sizes[-1],):
        raise ShapeError(f"upstream must have shape ({params.layer_sizes[-1]},), got {upstream.shape}")
    acts = _activations(params, x)
    gw = [np.zeros_like(w) for w in params.weights]
    gb = [np.zeros_like(b) for b in params.biases]

    last = params.n_layers - 1
    t = acts[-1] / np.pi
    delta = upstream * np.pi * (1.0 - t * t)
    for l in range(last, -1, -1):
        if l not in frozen:
            gw[l] = np.outer(delta, acts[l])
            gb[l] = delta.copy()
        if l > 0:
            a = acts[l]
            delta = (params.weights[l].T @ delta) * (1.0 - a * a)
    return MlpParams(params.layer_sizes, gw, gb)
