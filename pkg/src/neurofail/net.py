"""Feed-forward network model: tuned squashing activations, exact evaluation,
and a round-trip-safe JSON document format.

A network holds L weighted layers plus a final vector of linear output
weights; the output node applies no activation and is the network's client,
not part of it.  A layer may flag one constant neuron whose output is pinned
to 1.0, which realizes per-neuron bias terms for the following layer.  All
values are immutable after construction and safe to share across threads.

Conventions used throughout the package: layers are numbered 1..L (the
output weight set is "layer L+1" where a per-layer list needs an entry for
it), neuron indices within a layer are 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

SIGMOID = "sigmoid"
TANH = "tanh"


class SchemaError(ValueError):
    """A network document violates the schema.  Carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class ActivationSpec:
    """Squashing function tuned so its Lipschitz constant is exactly ``lipschitz_k``.

    kind "sigmoid" evaluates x -> sigmoid(4*k*x), range (0, 1); kind "tanh"
    evaluates x -> tanh(k*x), range (-1, 1).  Both have maximal slope k at
    x = 0, so k is the exact Lipschitz constant of the evaluated function.
    """

    kind: str = SIGMOID
    lipschitz_k: float = 1.0

    def __post_init__(self):
        if self.kind not in (SIGMOID, TANH):
            raise ValueError(f"unknown activation kind {self.kind!r}")
        k = self.lipschitz_k
        if not (isinstance(k, (int, float)) and math.isfinite(k) and k > 0):
            raise ValueError("lipschitz_k must be a positive finite real")

    @property
    def output_max(self) -> float:
        """Largest magnitude a correct neuron can emit (1 for both kinds)."""
        return 1.0


def _phi(spec: ActivationSpec, s: np.ndarray) -> np.ndarray:
    """Apply the tuned activation elementwise (no domain checks)."""
    if spec.kind == SIGMOID:
        z = 4.0 * spec.lipschitz_k * s
        out = np.empty_like(z, dtype=float)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    return np.tanh(spec.lipschitz_k * s)


def _phi_prime(spec: ActivationSpec, value: np.ndarray) -> np.ndarray:
    """Derivative w.r.t. the pre-activation sum, expressed via the output value."""
    if spec.kind == SIGMOID:
        return 4.0 * spec.lipschitz_k * value * (1.0 - value)
    return spec.lipschitz_k * (1.0 - value * value)


def activate(spec: ActivationSpec, x: float) -> float:
    """Evaluate the tuned activation at a single point.

    Strictly increasing; bounded in (0, 1) for sigmoid and (-1, 1) for tanh
    (the endpoints are limits, never attained mathematically).
    """
    if not math.isfinite(x):
        raise ValueError("activation input must be finite")
    return float(_phi(spec, np.asarray(x, dtype=float)))


def _as_weight_matrix(raw: Any) -> np.ndarray:
    w = np.array(raw, dtype=float)
    if w.ndim != 2 or w.size == 0:
        raise ValueError("layer weights must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(w)):
        raise ValueError("layer weights must be finite")
    w.setflags(write=False)
    return w


@dataclass(frozen=True, eq=False)
class Layer:
    """One weighted layer: row j holds the incoming weights of neuron j."""

    weights: np.ndarray
    constant_neuron: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_weight_matrix(self.weights))
        c = self.constant_neuron
        if c is not None and not (0 <= c < self.weights.shape[0]):
            raise ValueError(f"constant_neuron index {c} out of range")

    @property
    def n_neurons(self) -> int:
        return self.weights.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class Network:
    """A feed-forward network together with the output node's linear weights."""

    input_dim: int
    layers: tuple[Layer, ...]
    output_weights: np.ndarray
    activation: ActivationSpec
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        object.__setattr__(self, "layers", layers)
        expected = self.input_dim
        for i, layer in enumerate(layers):
            if layer.n_inputs != expected:
                raise ValueError(
                    f"layer {i + 1} expects {layer.n_inputs} inputs, previous width is {expected}"
                )
            expected = layer.n_neurons
        w = np.array(self.output_weights, dtype=float)
        if w.ndim != 1 or w.shape[0] != expected:
            raise ValueError(
                f"output_weights must be a vector of length {expected} (last layer width)"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("output_weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "output_weights", w)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return tuple(layer.n_neurons for layer in self.layers)

    def with_activation(self, spec: ActivationSpec) -> "Network":
        """Structurally identical network with a retuned activation."""
        return replace(self, activation=spec)


def check_input(net: Network, x: Sequence[float]) -> np.ndarray:
    """Validate one input vector: right length, finite, inside [0, 1]^d."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != net.input_dim:
        raise ValueError(
            f"input has shape {arr.shape}, expected a vector of length {net.input_dim}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("input values must be finite")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("input values must lie in [0, 1]")
    return arr


def layer_outputs(net: Network, X: np.ndarray) -> list[np.ndarray]:
    """All layer outputs for a batch of inputs X of shape (n, d).

    Returns [X, Y_1, ..., Y_L]; entry l has shape (n, N_l).  Constant neurons
    are pinned to 1 after the activation.
    """
    X = np.asarray(X, dtype=float)
    outs = [X]
    y = X
    for layer in net.layers:
        y = _phi(net.activation, y @ layer.weights.T)
        if layer.constant_neuron is not None:
            y = y.copy()
            y[:, layer.constant_neuron] = 1.0
        outs.append(y)
    return outs


def forward_batch(net: Network, X: np.ndarray) -> np.ndarray:
    """Network outputs for a batch of inputs, shape (n, d) -> (n,)."""
    return layer_outputs(net, X)[-1] @ net.output_weights


def forward(net: Network, x: Sequence[float]) -> float:
    """Exact evaluation of the network on one input from [0, 1]^d.

    The output node is linear: the result is the plain weighted sum of the
    last layer's outputs, not clamped to any range.
    """
    arr = check_input(net, x)
    return float(forward_batch(net, arr[None, :])[0])


def max_weights(net: Network) -> list[float]:
    """Per-layer maxima of absolute incoming weights, length L+1.

    Entry l-1 (0-based) is max |w| over synapses into layer l; the last entry
    is max |w| over the output weights.
    """
    maxima = [float(np.max(np.abs(layer.weights))) for layer in net.layers]
    maxima.append(float(np.max(np.abs(net.output_weights))))
    return maxima


# --- document serialization -------------------------------------------------

def to_document(net: Network) -> dict:
    """JSON-compatible tree; float values survive a text round trip bit-exactly."""
    return {
        "input_dim": net.input_dim,
        "activation": {"kind": net.activation.kind, "k": net.activation.lipschitz_k},
        "layers": [
            {
                "weights": [[float(v) for v in row] for row in layer.weights],
                "constant_neuron": layer.constant_neuron,
            }
            for layer in net.layers
        ],
        "output_weights": [float(v) for v in net.output_weights],
        "metadata": dict(net.metadata),
    }


def _require(doc: dict, key: str, path: str) -> Any:
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"{path}.{key}" if path else key, "missing required field")
    return doc[key]


def from_document(doc: dict) -> Network:
    """Parse and validate a network document; schema violations raise
    :class:`SchemaError` naming the offending field."""
    if not isinstance(doc, dict):
        raise SchemaError("", "document must be an object")
    input_dim = _require(doc, "input_dim", "")
    if not isinstance(input_dim, int) or input_dim < 1:
        raise SchemaError("input_dim", "must be a positive integer")

    act = _require(doc, "activation", "")
    kind = _require(act, "kind", "activation")
    k = _require(act, "k", "activation")
    try:
        activation = ActivationSpec(kind=kind, lipschitz_k=float(k))
    except (TypeError, ValueError) as exc:
        raise SchemaError("activation", str(exc)) from exc

    raw_layers = _require(doc, "layers", "")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise SchemaError("layers", "must be a non-empty list")
    layers = []
    prev = input_dim
    for i, raw in enumerate(raw_layers):
        path = f"layers[{i}]"
        rows = _require(raw, "weights", path)
        if not isinstance(rows, list) or not rows:
            raise SchemaError(f"{path}.weights", "must be a non-empty list of rows")
        for j, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != prev:
                raise SchemaError(
                    f"{path}.weights", f"row {j} has length {len(row) if isinstance(row, list) else '?'}, expected {prev}"
                )
            for v in row:
                if not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise SchemaError(f"{path}.weights", f"row {j} contains a non-finite value")
        const = raw.get("constant_neuron")
        if const is not None and not (isinstance(const, int) and 0 <= const < len(rows)):
            raise SchemaError(f"{path}.constant_neuron", "must be null or a valid neuron index")
        layers.append(Layer(weights=np.array(rows, dtype=float), constant_neuron=const))
        prev = len(rows)

    out = _require(doc, "output_weights", "")
    if not isinstance(out, list) or len(out) != prev:
        raise SchemaError("output_weights", f"must be a list of length {prev}")
    for v in out:
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SchemaError("output_weights", "contains a non-finite value")

    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise SchemaError("metadata", "must be an object")

    return Network(
        input_dim=input_dim,
        layers=tuple(layers),
        output_weights=np.array(out, dtype=float),
        activation=activation,
        metadata=metadata,
    )


def dumps(net: Network) -> str:
    return json.dumps(to_document(net), indent=2)


def loads(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from exc
    return from_document(doc)


def save(net: Network, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(net))
        fh.write("\n")


def load(path: str) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
