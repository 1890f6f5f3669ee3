from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from neurofail.net import ActivationSpec, Layer, Network
from neurofail.targets import make_target
from neurofail.trainer import TrainConfig, overprovision_pair
from neurofail.faults import FaultDistribution


def random_network(
    rng: np.random.Generator,
    *,
    depth: int | None = None,
    max_width: int = 8,
    kind: str = "sigmoid",
    k: float | None = None,
    weight_scale: float = 2.0,
    input_dim: int | None = None,
) -> Network:
    depth = depth if depth is not None else int(rng.integers(1, 4))
    d = input_dim if input_dim is not None else int(rng.integers(1, 4))
    sizes = [int(rng.integers(1, max_width + 1)) for _ in range(depth)]
    layers = []
    prev = d
    for n in sizes:
        layers.append(Layer(weights=rng.uniform(-weight_scale, weight_scale, size=(n, prev))))
        prev = n
    return Network(
        input_dim=d,
        layers=tuple(layers),
        output_weights=rng.uniform(-weight_scale, weight_scale, size=prev),
        activation=ActivationSpec(kind, k if k is not None else float(rng.choice([0.25, 1.0, 4.0]))),
    )


def random_neuron_distribution(rng: np.random.Generator, net: Network) -> FaultDistribution:
    per_layer = tuple(int(rng.integers(0, n + 1)) for n in net.layer_sizes)
    return FaultDistribution("neuron", per_layer)


@pytest.fixture(scope="session")
def hand_net_221() -> Network:
    """Two inputs, two layers of two neurons, one output weight pair."""
    return Network(
        input_dim=2,
        layers=(
            Layer(weights=np.array([[0.5, -0.25], [0.1, 0.3]])),
            Layer(weights=np.array([[0.2, -0.4], [0.7, 0.6]])),
        ),
        output_weights=np.array([1.5, -2.0]),
        activation=ActivationSpec("sigmoid", 1.0),
    )


@pytest.fixture(scope="session")
def trained_sine():
    """One shared certified sine approximation: accurate (grid eps' <= 0.1)
    and with output weights small enough to certify one layer-1 fault at
    eps = 0.15, eps' = 0.1."""
    cfg = TrainConfig(
        layer_sizes=(96,),
        activation=ActivationSpec("sigmoid", 1.0),
        learning_rate=0.05,
        momentum=0.99,
        weight_decay=1e-5,
        epochs=60000,
        n_samples=513,
        seed=11,
        bias=False,
        freeze_hidden=True,
        grid_samples=True,
        eval_grid=512,
        log_every=20000,
    )
    result = overprovision_pair(
        make_target("ridge_sine"),
        0.15,
        0.1,
        FaultDistribution("neuron", (1,)),
        1.0,
        cfg,
    )
    assert result.report.certified, "shared fixture must certify"
    return result
