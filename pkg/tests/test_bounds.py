from __future__ import annotations

import numpy as np
import pytest

from neurofail.bounds import (
    CRASH_CAPACITY,
    certify_neurons,
    certify_synapses,
    crash_bound_single_layer,
    fep_neurons,
    fep_synapses,
    max_tolerable,
    quantization_bound,
    synapse_error_as_neuron_error,
)
from neurofail.faults import FaultDistribution
from neurofail.net import ActivationSpec, Layer, Network, max_weights

from _reference import neuron_fep_reference
from conftest import random_network, random_neuron_distribution


def build_net(layer_shapes, out_weights, k=1.0, kind="sigmoid", input_dim=None):
    """layer_shapes: list of (n, fill_value) pairs defining constant matrices."""
    layers = []
    prev = input_dim if input_dim is not None else 1
    for n, fill in layer_shapes:
        layers.append(Layer(weights=np.full((n, prev), float(fill))))
        prev = n
    return Network(
        input_dim=input_dim or 1,
        layers=tuple(layers),
        output_weights=np.array(out_weights, dtype=float),
        activation=ActivationSpec(kind, k),
    )


class TestFepNeurons:
    def test_zero_distribution(self, hand_net_221):
        report = fep_neurons(hand_net_221, FaultDistribution("neuron", (0, 0)), 1.0)
        assert report.fep == 0.0
        assert report.per_layer == (0.0, 0.0)

    def test_single_layer_two_faults(self):
        net = build_net([(3, 1.0)], [0.5, 0.5, 0.2])
        report = fep_neurons(net, FaultDistribution("neuron", (2,)), 1.0)
        assert report.fep == pytest.approx(1.0, abs=1e-15)

    def test_two_layer_hand_value(self):
        # K=0.25, C=1, f=(1,0), N=(4,3), wm2=2, wm3=1 -> 0.25 * 3*2 * 1*1 = 1.5
        net = build_net([(4, 0.1), (3, 2.0)], [1.0, 0.4, -0.2], k=0.25, input_dim=2)
        report = fep_neurons(net, FaultDistribution("neuron", (1, 0)), 1.0)
        assert report.per_layer[0] == pytest.approx(1.5, abs=1e-12)
        assert report.per_layer[1] == 0.0
        assert report.fep == pytest.approx(1.5, abs=1e-12)

    def test_equivalent_to_layered_convention_form(self):
        # the display form and the output-node-as-extra-layer form agree
        rng = np.random.default_rng(31)
        for _ in range(1000):
            net = random_network(rng, max_width=6)
            dist = random_neuron_distribution(rng, net)
            C = float(rng.choice([0.5, 1.0, 2.0]))
            got = fep_neurons(net, dist, C).fep
            ref = neuron_fep_reference(
                list(net.layer_sizes),
                list(dist.per_layer),
                max_weights(net),
                net.activation.lipschitz_k,
                C,
            )
            assert got == pytest.approx(ref, abs=1e-12, rel=1e-12)

    def test_monotone_in_capacity_k_and_weights(self):
        rng = np.random.default_rng(37)
        for _ in range(50):
            net = random_network(rng, max_width=5)
            dist = random_neuron_distribution(rng, net)
            C = 1.0
            base = fep_neurons(net, dist, C).fep
            assert fep_neurons(net, dist, 2.0).fep >= base - 1e-12
            k_up = net.with_activation(
                ActivationSpec(net.activation.kind, net.activation.lipschitz_k * 2)
            )
            assert fep_neurons(k_up, dist, C).fep >= base - 1e-12
            scaled = Network(
                input_dim=net.input_dim,
                layers=tuple(Layer(weights=1.5 * np.asarray(l.weights)) for l in net.layers),
                output_weights=1.5 * np.asarray(net.output_weights),
                activation=net.activation,
            )
            assert fep_neurons(scaled, dist, C).fep >= base - 1e-12

    def test_monotone_in_faults_within_contraction_regime(self):
        # adding a fault can only raise the bound while K * w * (layer width)
        # stays below 1; outside that regime draining a downstream layer can
        # genuinely lower the worst case (failed neurons stop forwarding
        # amplified error and emit capacity-bounded noise instead)
        rng = np.random.default_rng(39)
        for _ in range(50):
            net = random_network(rng, max_width=4, k=0.25, weight_scale=0.5)
            dist = random_neuron_distribution(rng, net)
            base = fep_neurons(net, dist, 1.0).fep
            for l in range(net.depth):
                if dist.per_layer[l] < net.layer_sizes[l]:
                    bumped = list(dist.per_layer)
                    bumped[l] += 1
                    bumped_fep = fep_neurons(net, FaultDistribution("neuron", tuple(bumped)), 1.0).fep
                    assert bumped_fep >= base - 1e-12

    def test_draining_downstream_layer_can_lower_bound(self):
        # the documented counterexample to global fault-count monotonicity
        net = build_net([(2, 1.0), (2, 2.0)], [0.5, 0.5], k=4.0)
        partial = fep_neurons(net, FaultDistribution("neuron", (1, 0)), 1.0).fep
        drained = fep_neurons(net, FaultDistribution("neuron", (1, 1)), 1.0).fep
        assert drained < partial

    def test_crash_consistency_single_layer(self):
        # with capacity replaced by the activation maximum, the single-layer
        # bound reduces to n_fail * w_m
        net = build_net([(5, 1.0)], [0.3, -0.6, 0.2, 0.1, 0.05])
        for f in range(6):
            report = fep_neurons(net, FaultDistribution("neuron", (f,)), CRASH_CAPACITY)
            assert report.fep == pytest.approx(f * 0.6, abs=1e-15)

    def test_requires_bounded_capacity(self, hand_net_221):
        with pytest.raises(ValueError, match="capacity"):
            fep_neurons(hand_net_221, FaultDistribution("neuron", (1, 0)), None)

    def test_kind_mismatch(self, hand_net_221):
        with pytest.raises(Exception):
            fep_neurons(hand_net_221, FaultDistribution("synapse", (0, 0, 0)), 1.0)


class TestCertifyNeurons:
    def test_zero_distribution_certifies(self, hand_net_221):
        report = certify_neurons(hand_net_221, FaultDistribution("neuron", (0, 0)), 0.2, 0.1, 1.0)
        assert report.certified is True
        assert report.slack == pytest.approx(0.1)

    def test_strict_boundary(self):
        net = build_net([(4, 0.1), (3, 2.0)], [1.0, 0.4, -0.2], k=0.25, input_dim=2)
        dist = FaultDistribution("neuron", (1, 0))
        # fep = 1.5: threshold 1.4 -> refused, threshold 1.6 -> certified
        refused = certify_neurons(net, dist, 1.5, 0.1, 1.0)
        assert refused.certified is False
        passed = certify_neurons(net, dist, 1.7, 0.1, 1.0)
        assert passed.certified is True
        exactly = certify_neurons(net, dist, 1.6, 0.1, 1.0)
        assert exactly.certified is False  # strict comparison at the boundary

    def test_full_layer_failure_refused(self):
        net = build_net([(2, 1.0)], [1e-9, 1e-9])
        report = certify_neurons(net, FaultDistribution("neuron", (2,)), 0.5, 0.1, 1.0)
        assert report.certified is False  # every layer must keep a correct neuron

    def test_accuracy_pair_validated(self, hand_net_221):
        dist = FaultDistribution("neuron", (0, 0))
        with pytest.raises(ValueError):
            certify_neurons(hand_net_221, dist, 0.1, 0.2, 1.0)
        with pytest.raises(ValueError):
            certify_neurons(hand_net_221, dist, 0.1, 0.0, 1.0)


class TestFepSynapses:
    def test_zero_distribution(self, hand_net_221):
        report = fep_synapses(hand_net_221, FaultDistribution("synapse", (0, 0, 0)), 1.0)
        assert report.fep == 0.0

    def test_output_synapse(self):
        # one Byzantine synapse into the output: C * wm_out
        net = build_net([(4, 1.5)], [0.5, 0.1, 0.2, 0.3], k=0.25)
        report = fep_synapses(net, FaultDistribution("synapse", (0, 1)), 1.0)
        assert report.fep == pytest.approx(0.5, abs=1e-15)

    def test_input_synapse(self):
        # C * K * wm1 * N1 * wm2 = 0.25 * 1.5 * 4 * 0.5 = 0.75
        net = build_net([(4, 1.5)], [0.5, 0.1, 0.2, 0.3], k=0.25)
        report = fep_synapses(net, FaultDistribution("synapse", (1, 0)), 1.0)
        assert report.fep == pytest.approx(0.75, abs=1e-15)

    def test_degenerate_product_flagged(self):
        net = build_net([(2, 1.0)], [0.5, 0.5])
        # 3 faulty output synapses exceed the 2 senders: the correct-sender
        # count goes negative, certification must refuse
        report = certify_synapses(net, FaultDistribution("synapse", (2, 0)), 10.0, 0.1, 1.0)
        assert report.degenerate is False
        bad = certify_synapses(net, FaultDistribution("synapse", (0, 2)), 10.0, 0.1, 1.0)
        assert bad.degenerate is False  # output set never feeds a product factor
        deep = build_net([(2, 1.0), (3, 1.0)], [0.5, 0.5, 0.5])
        flagged = certify_synapses(deep, FaultDistribution("synapse", (1, 3, 0)), 10.0, 0.1, 1.0)
        assert flagged.degenerate is True
        assert flagged.certified is False

    def test_certify_strict(self):
        net = build_net([(4, 1.5)], [0.5, 0.1, 0.2, 0.3], k=0.25)
        dist = FaultDistribution("synapse", (0, 1))  # fep = 0.5
        assert certify_synapses(net, dist, 0.7, 0.1, 1.0).certified is True
        assert certify_synapses(net, dist, 0.6, 0.1, 1.0).certified is False


class TestCrashBound:
    def test_zero_slack(self):
        net = build_net([(4, 1.0)], [0.1, 0.1, 0.1, 0.1])
        assert crash_bound_single_layer(net, 0.2, 0.2) == 0

    def test_hand_arithmetic(self):
        net = build_net([(9, 1.0)], [0.05] * 9)
        assert crash_bound_single_layer(net, 0.2, 0.05) == 3

    def test_floor_not_round(self):
        net = build_net([(9, 1.0)], [0.04] * 9)
        assert crash_bound_single_layer(net, 0.2, 0.05) == 3  # floor(3.75)

    def test_capped_at_width(self):
        net = build_net([(2, 1.0)], [0.001, 0.001])
        assert crash_bound_single_layer(net, 0.5, 0.1) == 2

    def test_zero_weight_tolerates_all(self):
        net = build_net([(3, 1.0)], [0.0, 0.0, 0.0])
        assert crash_bound_single_layer(net, 0.2, 0.1) == 3

    def test_argument_errors(self, hand_net_221):
        net = build_net([(2, 1.0)], [0.1, 0.1])
        with pytest.raises(ValueError):
            crash_bound_single_layer(net, 0.1, 0.2)
        with pytest.raises(ValueError):
            crash_bound_single_layer(hand_net_221, 0.2, 0.1)  # not single layer


class TestSynapseErrorConversion:
    def test_zero(self):
        assert synapse_error_as_neuron_error(0.0, ActivationSpec("sigmoid", 1.0)) == 0.0

    def test_worst_case_value(self):
        spec = ActivationSpec("sigmoid", 0.25)
        assert synapse_error_as_neuron_error(1.0, spec, 1.0) == pytest.approx(0.25)

    def test_capacity_checked(self):
        spec = ActivationSpec("sigmoid", 1.0)
        with pytest.raises(ValueError):
            synapse_error_as_neuron_error(1.5, spec, 1.0)

    def test_injection_never_exceeds(self):
        # direct simulation: adding lam to one received sum shifts the
        # neuron's output by at most K * |lam|
        from neurofail.empirical import synapse_injection_shift

        rng = np.random.default_rng(41)
        for _ in range(200):
            net = random_network(rng, max_width=5)
            lam = float(rng.uniform(-1, 1))
            layer = int(rng.integers(1, net.depth + 1))
            receiver = int(rng.integers(0, net.layer_sizes[layer - 1]))
            x = rng.uniform(0, 1, net.input_dim)
            shift = synapse_injection_shift(net, x, layer, receiver, lam)
            bound = synapse_error_as_neuron_error(lam, net.activation, 1.0)
            assert shift <= bound + 1e-12


class TestQuantizationBound:
    def test_zero_lambdas(self, hand_net_221):
        assert quantization_bound(hand_net_221, [0.0, 0.0]) == 0.0

    def test_single_layer_hand_value(self):
        net = build_net([(10, 1.0)], [0.5] * 10)
        assert quantization_bound(net, [0.01]) == pytest.approx(0.05, abs=1e-15)

    def test_two_layer_hand_value(self):
        net = build_net([(3, 1.0), (2, 1.0)], [0.5, 0.5], k=0.5)
        assert quantization_bound(net, [0.01, 0.02]) == pytest.approx(0.035, abs=1e-15)

    def test_negative_rejected(self, hand_net_221):
        with pytest.raises(ValueError):
            quantization_bound(hand_net_221, [-0.1, 0.0])

    def test_length_checked(self, hand_net_221):
        with pytest.raises(ValueError):
            quantization_bound(hand_net_221, [0.1])


class TestMaxTolerable:
    def test_single_layer_hand_case(self):
        net = build_net([(8, 1.0)], [0.5] * 8)
        result = max_tolerable(net, 1.15, 0.1, 1.0)  # threshold 1.05, w_m 0.5
        assert result.complete
        assert [d.per_layer for d in result.distributions] == [(2,)]

    def test_all_zero_when_nothing_fits(self):
        net = build_net([(4, 1.0)], [5.0] * 4)
        result = max_tolerable(net, 0.2, 0.1, 1.0)
        assert [d.per_layer for d in result.distributions] == [(0,)]

    def test_pareto_self_check(self):
        rng = np.random.default_rng(53)
        for _ in range(10):
            net = random_network(rng, depth=2, max_width=5, weight_scale=0.8)
            eps, eps_prime, C = 0.6, 0.1, 1.0
            result = max_tolerable(net, eps, eps_prime, C)
            assert result.complete
            assert result.distributions, "the all-zero point is always feasible"
            seen = set()
            for dist in result.distributions:
                assert dist.per_layer not in seen
                seen.add(dist.per_layer)
                report = certify_neurons(net, dist, eps, eps_prime, C)
                assert report.certified
                for l in range(net.depth):
                    bumped = list(dist.per_layer)
                    bumped[l] += 1
                    if bumped[l] >= net.layer_sizes[l]:
                        continue
                    worse = certify_neurons(
                        net, FaultDistribution("neuron", tuple(bumped)), eps, eps_prime, C
                    )
                    assert not worse.certified

    def test_lexicographic_order(self):
        net = build_net([(6, 0.5), (6, 0.5)], [0.1] * 6, k=0.5, input_dim=1)
        result = max_tolerable(net, 0.5, 0.1, 1.0)
        assert list(result.distributions) == sorted(result.distributions, key=lambda d: d.per_layer)

    def test_precondition(self, hand_net_221):
        with pytest.raises(ValueError):
            max_tolerable(hand_net_221, 0.1, 0.1, 1.0)


class TestReportDocument:
    def test_document_fields(self, hand_net_221):
        report = certify_neurons(hand_net_221, FaultDistribution("neuron", (1, 0)), 2.5, 0.5, 1.0)
        doc = report.to_document()
        assert set(doc) >= {
            "fep",
            "per_layer",
            "slack",
            "certified",
            "condition",
            "threshold",
            "capacity",
            "distribution",
            "max_weights",
        }
        assert doc["fep"] == pytest.approx(sum(doc["per_layer"]))
        assert doc["condition"] == "byzantine-neurons"
