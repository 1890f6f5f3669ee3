"""Independent reference implementations used as test oracles.

Everything here works on plain documents with pure-Python loops and
``math`` — deliberately sharing no code path with the package internals.
"""

from __future__ import annotations

import math


def phi(kind: str, k: float, s: float) -> float:
    if kind == "sigmoid":
        z = 4.0 * k * s
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)
    return math.tanh(k * s)


def naive_forward(doc: dict, x: list[float], biases: list[list[float]] | None = None) -> float:
    """Layer-by-layer evaluation of a network document.

    ``biases`` optionally adds an explicit per-neuron bias before the
    activation (for the constant-neuron equivalence check).
    """
    kind = doc["activation"]["kind"]
    k = doc["activation"]["k"]
    y = list(x)
    for li, layer in enumerate(doc["layers"]):
        out = []
        for j, row in enumerate(layer["weights"]):
            s = sum(w * v for w, v in zip(row, y))
            if biases is not None:
                s += biases[li][j]
            out.append(phi(kind, k, s))
        if layer.get("constant_neuron") is not None:
            out[layer["constant_neuron"]] = 1.0
        y = out
    return sum(w * v for w, v in zip(doc["output_weights"], y))


def naive_forward_perturbed(
    doc: dict,
    x: list[float],
    neuron_values: dict[tuple[int, int], float],
) -> float:
    """Evaluation with selected neurons' broadcast values replaced outright.

    ``neuron_values`` maps (layer, index) [1-based layer] to the value every
    receiver sees from that neuron.
    """
    kind = doc["activation"]["kind"]
    k = doc["activation"]["k"]
    y = list(x)
    for li, layer in enumerate(doc["layers"], start=1):
        out = []
        for row in layer["weights"]:
            s = sum(w * v for w, v in zip(row, y))
            out.append(phi(kind, k, s))
        if layer.get("constant_neuron") is not None:
            out[layer["constant_neuron"]] = 1.0
        for (fl, fj), v in neuron_values.items():
            if fl == li:
                out[fj] = v
        y = out
    return sum(w * v for w, v in zip(doc["output_weights"], y))


def neuron_fep_reference(
    layer_sizes: list[int],
    fault_counts: list[int],
    wm: list[float],
    k: float,
    capacity: float,
) -> float:
    """The layered convention: treat the output node as one extra correct
    layer (N_{L+1} = 1, f_{L+1} = 0) and chain every term through it."""
    L = len(layer_sizes)
    n = list(layer_sizes) + [1]
    f = list(fault_counts) + [0]
    total = 0.0
    for l in range(1, L + 1):
        term = capacity * f[l - 1] * k ** (L - l)
        for l2 in range(l + 1, L + 2):
            term *= (n[l2 - 1] - f[l2 - 1]) * wm[l2 - 1]
        total += term
    return total
