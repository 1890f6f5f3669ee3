from __future__ import annotations

import json
import math

import numpy as np
import pytest

from neurofail.net import (
    ActivationSpec,
    Layer,
    Network,
    SchemaError,
    activate,
    forward,
    forward_batch,
    from_document,
    loads,
    max_weights,
    to_document,
)

from _reference import naive_forward
from conftest import random_network


class TestActivate:
    def test_sigmoid_center(self):
        assert activate(ActivationSpec("sigmoid", 1.0), 0.0) == 0.5

    def test_squashing_limits(self):
        spec = ActivationSpec("sigmoid", 0.25)
        assert activate(spec, 500.0) == pytest.approx(1.0, abs=1e-12)
        assert activate(spec, -500.0) == pytest.approx(0.0, abs=1e-12)

    def test_tanh_range_and_center(self):
        spec = ActivationSpec("tanh", 2.0)
        assert activate(spec, 0.0) == 0.0
        assert -1.0 < activate(spec, -3.0) < activate(spec, 3.0) < 1.0

    def test_strictly_increasing(self):
        for kind in ("sigmoid", "tanh"):
            spec = ActivationSpec(kind, 0.7)
            xs = np.linspace(-3, 3, 101)
            ys = [activate(spec, float(x)) for x in xs]
            assert all(a < b for a, b in zip(ys, ys[1:]))

    def test_lipschitz_constant_attained(self):
        # sup of difference quotients on a dense grid equals K at the center
        spec = ActivationSpec("sigmoid", 2.0)
        xs = np.linspace(-0.5, 0.5, 20001)
        ys = np.array([activate(spec, float(x)) for x in xs])
        quotients = np.abs(np.diff(ys) / np.diff(xs))
        assert float(quotients.max()) == pytest.approx(2.0, abs=1e-6)

    def test_lipschitz_never_exceeded(self):
        rng = np.random.default_rng(3)
        for kind in ("sigmoid", "tanh"):
            k = float(rng.uniform(0.2, 4.0))
            spec = ActivationSpec(kind, k)
            a = rng.uniform(-5, 5, size=500)
            b = rng.uniform(-5, 5, size=500)
            for x, y in zip(a, b):
                lhs = abs(activate(spec, float(x)) - activate(spec, float(y)))
                assert lhs <= k * abs(x - y) + 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            activate(ActivationSpec("sigmoid", 1.0), float("nan"))
        with pytest.raises(ValueError):
            activate(ActivationSpec("sigmoid", 1.0), math.inf)

    def test_bad_spec_rejected(self):
        with pytest.raises(ValueError):
            ActivationSpec("relu", 1.0)
        with pytest.raises(ValueError):
            ActivationSpec("sigmoid", 0.0)
        with pytest.raises(ValueError):
            ActivationSpec("sigmoid", math.inf)


class TestForward:
    def test_zero_output_weights(self):
        rng = np.random.default_rng(0)
        net = Network(
            input_dim=2,
            layers=(Layer(weights=rng.uniform(-1, 1, (3, 2))),),
            output_weights=np.zeros(3),
            activation=ActivationSpec("sigmoid", 1.0),
        )
        assert forward(net, [0.2, 0.9]) == 0.0

    def test_single_neuron_zero_weights(self):
        net = Network(
            input_dim=1,
            layers=(Layer(weights=np.zeros((1, 1))),),
            output_weights=np.array([2.0]),
            activation=ActivationSpec("sigmoid", 3.7),
        )
        # the neuron sees sum 0, outputs 1/2 regardless of tuning
        assert forward(net, [0.4]) == 1.0

    def test_hand_built_221(self, hand_net_221):
        x = [0.3, 0.9]
        expected = naive_forward(to_document(hand_net_221), x)
        got = forward(hand_net_221, x)
        assert got == pytest.approx(expected, abs=1e-14)
        # frozen value computed with the reference evaluator
        assert got == pytest.approx(-1.4714358926829918, abs=1e-12)

    def test_matches_naive_reference_on_random_nets(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            net = random_network(rng, depth=int(rng.integers(1, 5)))
            doc = to_document(net)
            x = rng.uniform(0, 1, net.input_dim)
            assert forward(net, x) == pytest.approx(naive_forward(doc, list(x)), abs=1e-12)

    def test_dimension_mismatch(self, hand_net_221):
        with pytest.raises(ValueError, match="length 2"):
            forward(hand_net_221, [0.1, 0.2, 0.3])

    def test_domain_enforced(self, hand_net_221):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            forward(hand_net_221, [0.5, 1.5])

    def test_batch_agrees_with_scalar(self, hand_net_221):
        rng = np.random.default_rng(1)
        X = rng.uniform(0, 1, (10, 2))
        batched = forward_batch(hand_net_221, X)
        for i in range(10):
            # batched matmul may take a different BLAS path than batch-of-one
            assert batched[i] == pytest.approx(forward(hand_net_221, X[i]), abs=1e-13)

    def test_constant_neuron_equivalent_to_explicit_bias(self):
        # same function: constant neuron wired with bias weights vs an
        # explicit-bias reference evaluation of the plain network
        rng = np.random.default_rng(7)
        w1 = rng.uniform(-1, 1, (3, 2))
        w2 = rng.uniform(-1, 1, (2, 4))  # receives 3 real + 1 constant
        biases = w2[:, 3]
        with_const = Network(
            input_dim=2,
            layers=(
                Layer(weights=np.vstack([w1, np.zeros((1, 2))]), constant_neuron=3),
                Layer(weights=w2),
            ),
            output_weights=np.array([0.8, -0.6]),
            activation=ActivationSpec("sigmoid", 1.0),
        )
        plain_doc = {
            "input_dim": 2,
            "activation": {"kind": "sigmoid", "k": 1.0},
            "layers": [
                {"weights": w1.tolist(), "constant_neuron": None},
                {"weights": w2[:, :3].tolist(), "constant_neuron": None},
            ],
            "output_weights": [0.8, -0.6],
            "metadata": {},
        }
        for _ in range(100):
            x = rng.uniform(0, 1, 2)
            expected = naive_forward(plain_doc, list(x), biases=[[0.0, 0.0, 0.0], list(biases)])
            assert forward(with_const, x) == pytest.approx(expected, abs=1e-12)


class TestMaxWeights:
    def test_constant_weights(self):
        net = Network(
            input_dim=2,
            layers=(Layer(weights=np.full((3, 2), 0.3)), Layer(weights=np.full((2, 3), 0.3))),
            output_weights=np.full(2, 0.3),
            activation=ActivationSpec("sigmoid", 1.0),
        )
        assert max_weights(net) == [0.3, 0.3, 0.3]

    def test_absolute_value(self):
        net = Network(
            input_dim=1,
            layers=(Layer(weights=np.array([[-0.7], [0.2]])),),
            output_weights=np.array([0.1, -0.05]),
            activation=ActivationSpec("sigmoid", 1.0),
        )
        assert max_weights(net)[0] == 0.7

    def test_matches_brute_scan(self):
        rng = np.random.default_rng(5)
        net = random_network(rng, depth=3)
        doc = to_document(net)
        got = max_weights(net)
        for l, layer in enumerate(doc["layers"]):
            scan = max(abs(v) for row in layer["weights"] for v in row)
            assert got[l] == scan
        assert got[-1] == max(abs(v) for v in doc["output_weights"])


class TestDocuments:
    def test_round_trip_identity(self, hand_net_221):
        doc = to_document(hand_net_221)
        again = to_document(from_document(doc))
        assert doc == again

    def test_text_round_trip_bit_exact(self):
        rng = np.random.default_rng(9)
        net = random_network(rng, depth=2)
        text = json.dumps(to_document(net))
        reloaded = loads(text)
        assert np.array_equal(reloaded.output_weights, net.output_weights)
        for a, b in zip(reloaded.layers, net.layers):
            assert np.array_equal(a.weights, b.weights)

    def test_mismatched_row_names_layer(self):
        doc = {
            "input_dim": 2,
            "activation": {"kind": "sigmoid", "k": 1.0},
            "layers": [
                {"weights": [[0.1, 0.2], [0.3, 0.4]], "constant_neuron": None},
                {"weights": [[0.1, 0.2], [0.3, 0.4, 0.5]], "constant_neuron": None},
            ],
            "output_weights": [1.0, 1.0],
            "metadata": {},
        }
        with pytest.raises(SchemaError, match=r"layers\[1\]"):
            from_document(doc)

    def test_missing_activation(self):
        doc = {
            "input_dim": 1,
            "layers": [{"weights": [[1.0]], "constant_neuron": None}],
            "output_weights": [1.0],
        }
        with pytest.raises(SchemaError, match="activation"):
            from_document(doc)

    def test_nonfinite_weight_rejected(self):
        doc = {
            "input_dim": 1,
            "activation": {"kind": "sigmoid", "k": 1.0},
            "layers": [{"weights": [[float("inf")]], "constant_neuron": None}],
            "output_weights": [1.0],
            "metadata": {},
        }
        with pytest.raises(SchemaError, match="non-finite"):
            from_document(doc)

    def test_wrong_output_length(self):
        doc = {
            "input_dim": 1,
            "activation": {"kind": "sigmoid", "k": 1.0},
            "layers": [{"weights": [[1.0], [2.0]], "constant_neuron": None}],
            "output_weights": [1.0],
            "metadata": {},
        }
        with pytest.raises(SchemaError, match="output_weights"):
            from_document(doc)

    def test_bad_constant_index(self):
        doc = {
            "input_dim": 1,
            "activation": {"kind": "sigmoid", "k": 1.0},
            "layers": [{"weights": [[1.0]], "constant_neuron": 5}],
            "output_weights": [1.0],
            "metadata": {},
        }
        with pytest.raises(SchemaError, match="constant_neuron"):
            from_document(doc)


class TestInvariants:
    def test_network_shape_validation(self):
        with pytest.raises(ValueError):
            Network(
                input_dim=2,
                layers=(Layer(weights=np.ones((2, 3))),),
                output_weights=np.ones(2),
                activation=ActivationSpec(),
            )
        with pytest.raises(ValueError):
            Network(
                input_dim=2,
                layers=(),
                output_weights=np.ones(1),
                activation=ActivationSpec(),
            )

    def test_weights_immutable(self, hand_net_221):
        with pytest.raises(ValueError):
            hand_net_221.layers[0].weights[0, 0] = 5.0
        with pytest.raises(ValueError):
            hand_net_221.output_weights[0] = 5.0

    def test_per_neuron_lipschitz_through_forward(self):
        # the network-level consequence of K-Lipschitz activations
        rng = np.random.default_rng(12)
        for _ in range(20):
            net = random_network(rng, depth=1, max_width=4)
            k = net.activation.lipschitz_k
            W = net.layers[0].weights
            for _ in range(10):
                x = rng.uniform(0, 1, net.input_dim)
                y = rng.uniform(0, 1, net.input_dim)
                sx = W @ x
                sy = W @ y
                from neurofail.net import _phi

                dphi = np.abs(_phi(net.activation, sx) - _phi(net.activation, sy))
                assert np.all(dphi <= k * np.abs(sx - sy) + 1e-12)
