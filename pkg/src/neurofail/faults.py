"""Fault distributions, concrete fault scenarios, and evaluation under faults.

Failure semantics.  A crashed neuron or synapse transmits exactly 0 to every
receiver.  A Byzantine unit transmits an arbitrary signal, but the deviation
of what it sends from its fault-free nominal signal is clamped per synapse to
the transmission capacity C; with unbounded capacity the policy value is sent
verbatim.  Clamping the deviation (rather than the raw emitted value) is what
makes a crash the special case "deviation bounded by the activation maximum",
and it is the regime in which the analytic error-propagation bounds hold.
A Byzantine neuron may send a different value on each outgoing synapse.
Correct neurons always process whatever they receive.

All scenario constructors are pure functions of their arguments; random
selection is a deterministic function of the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Any, Callable, Iterator, Union

import numpy as np

from .net import Network, check_input, layer_outputs

NEURON = "neuron"
SYNAPSE = "synapse"
OUTPUT_SET = -1  # sentinel receiver index for the output node


class ScenarioError(ValueError):
    """A scenario does not fit the network it targets."""


class PolicyError(ValueError):
    """A Byzantine policy is not usable with the given capacity."""


class EnumerationCapError(ValueError):
    """Scenario enumeration would exceed the configured cap."""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"enumeration would yield {count} scenarios, cap is {cap}")


# --- Byzantine policies ------------------------------------------------------

@dataclass(frozen=True)
class WorstCaseSign:
    """Deviate by +C on synapses with non-negative weight and -C otherwise,
    maximizing every weighted error term.  Requires bounded capacity."""


@dataclass(frozen=True)
class Constant:
    """Try to transmit exactly ``value``; the capacity clamp may fall short."""

    value: float


@dataclass(frozen=True)
class RandomInCapacity:
    """Per-synapse deviation drawn uniformly from [-C, C], fixed by ``seed``."""

    seed: int


@dataclass(frozen=True)
class Offset:
    """Transmit nominal + delta, with delta clamped to the capacity."""

    delta: float


Policy = Union[WorstCaseSign, Constant, RandomInCapacity, Offset]


@dataclass(frozen=True)
class Crash:
    pass


@dataclass(frozen=True)
class Byzantine:
    policy: Policy


Mode = Union[Crash, Byzantine]


@dataclass(frozen=True)
class NeuronFault:
    layer: int  # 1-based
    index: int  # 0-based within the layer
    mode: Mode


@dataclass(frozen=True)
class SynapseFault:
    layer: int     # 1-based; L+1 denotes synapses into the output node
    receiver: int  # 0-based neuron index in `layer` (0 for the output node)
    sender: int    # 0-based neuron index in layer-1 (or input component)
    mode: Mode


@dataclass(frozen=True)
class FaultDistribution:
    """Per-layer fault counts: length L for neurons, L+1 for synapses."""

    kind: str
    per_layer: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in (NEURON, SYNAPSE):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        per_layer = tuple(int(f) for f in self.per_layer)
        if any(f < 0 for f in per_layer):
            raise ValueError("fault counts must be non-negative")
        object.__setattr__(self, "per_layer", per_layer)

    def validate_for(self, net: Network) -> None:
        sizes = net.layer_sizes
        if self.kind == NEURON:
            if len(self.per_layer) != net.depth:
                raise ScenarioError(
                    f"neuron distribution has {len(self.per_layer)} entries, network has {net.depth} layers"
                )
            for l, (f, n) in enumerate(zip(self.per_layer, sizes), start=1):
                if f > n:
                    raise ScenarioError(f"layer {l}: {f} faults exceed {n} neurons")
        else:
            if len(self.per_layer) != net.depth + 1:
                raise ScenarioError(
                    f"synapse distribution has {len(self.per_layer)} entries, expected {net.depth + 1}"
                )
            senders = (net.input_dim,) + sizes
            receivers = sizes + (1,)
            for l, f in enumerate(self.per_layer, start=1):
                cap = receivers[l - 1] * senders[l - 1]
                if f > cap:
                    raise ScenarioError(f"synapse set {l}: {f} faults exceed {cap} synapses")


@dataclass(frozen=True)
class FaultScenario:
    """A concrete assignment of failed units.  capacity=None means unbounded."""

    capacity: float | None
    neuron_faults: tuple[NeuronFault, ...] = ()
    synapse_faults: tuple[SynapseFault, ...] = ()

    def __post_init__(self):
        c = self.capacity
        if c is not None and not (isinstance(c, (int, float)) and math.isfinite(c) and c > 0):
            raise ValueError("capacity must be a positive finite real or None")
        object.__setattr__(self, "neuron_faults", tuple(self.neuron_faults))
        object.__setattr__(self, "synapse_faults", tuple(self.synapse_faults))

    @property
    def is_empty(self) -> bool:
        return not self.neuron_faults and not self.synapse_faults

    def validate_for(self, net: Network) -> None:
        sizes = net.layer_sizes
        seen_neurons = set()
        for nf in self.neuron_faults:
            if not (1 <= nf.layer <= net.depth):
                raise ScenarioError(f"neuron fault at layer {nf.layer}: network has {net.depth} layers")
            if not (0 <= nf.index < sizes[nf.layer - 1]):
                raise ScenarioError(
                    f"neuron fault ({nf.layer}, {nf.index}): layer has {sizes[nf.layer - 1]} neurons"
                )
            if (nf.layer, nf.index) in seen_neurons:
                raise ScenarioError(f"duplicate neuron fault ({nf.layer}, {nf.index})")
            seen_neurons.add((nf.layer, nf.index))
            self._check_policy(nf.mode)
        senders = (net.input_dim,) + sizes
        receivers = sizes + (1,)
        seen_synapses = set()
        for sf in self.synapse_faults:
            if not (1 <= sf.layer <= net.depth + 1):
                raise ScenarioError(f"synapse fault at set {sf.layer}: valid sets are 1..{net.depth + 1}")
            if not (0 <= sf.receiver < receivers[sf.layer - 1]):
                raise ScenarioError(f"synapse fault receiver {sf.receiver} out of range at set {sf.layer}")
            if not (0 <= sf.sender < senders[sf.layer - 1]):
                raise ScenarioError(f"synapse fault sender {sf.sender} out of range at set {sf.layer}")
            key = (sf.layer, sf.receiver, sf.sender)
            if key in seen_synapses:
                raise ScenarioError(f"duplicate synapse fault {key}")
            seen_synapses.add(key)
            self._check_policy(sf.mode)

    def _check_policy(self, mode: Mode) -> None:
        if isinstance(mode, Byzantine) and self.capacity is None:
            if isinstance(mode.policy, (WorstCaseSign, RandomInCapacity)):
                raise PolicyError(
                    f"{type(mode.policy).__name__} needs a bounded capacity: "
                    "no finite worst-case value exists when transmission is unbounded"
                )


# --- scenario documents -------------------------------------------------------

def _mode_to_doc(mode: Mode) -> Any:
    if isinstance(mode, Crash):
        return "crash"
    p = mode.policy
    if isinstance(p, WorstCaseSign):
        strategy: dict[str, Any] = {"kind": "worst_case_sign"}
    elif isinstance(p, Constant):
        strategy = {"kind": "constant", "value": p.value}
    elif isinstance(p, RandomInCapacity):
        strategy = {"kind": "random_in_capacity", "seed": p.seed}
    else:
        strategy = {"kind": "offset", "delta": p.delta}
    return {"byzantine": {"strategy": strategy}}


def _mode_from_doc(raw: Any) -> Mode:
    if raw == "crash":
        return Crash()
    if isinstance(raw, dict) and "byzantine" in raw:
        strategy = raw["byzantine"].get("strategy", {})
        kind = strategy.get("kind")
        if kind == "worst_case_sign":
            return Byzantine(WorstCaseSign())
        if kind == "constant":
            return Byzantine(Constant(float(strategy["value"])))
        if kind == "random_in_capacity":
            return Byzantine(RandomInCapacity(int(strategy["seed"])))
        if kind == "offset":
            return Byzantine(Offset(float(strategy["delta"])))
    raise ScenarioError(f"unknown fault mode {raw!r}")


def scenario_to_document(scenario: FaultScenario) -> dict:
    return {
        "capacity": "unbounded" if scenario.capacity is None else scenario.capacity,
        "neurons": [
            {"layer": nf.layer, "index": nf.index, "mode": _mode_to_doc(nf.mode)}
            for nf in scenario.neuron_faults
        ],
        "synapses": [
            {
                "layer": sf.layer,
                "receiver": sf.receiver,
                "sender": sf.sender,
                "mode": _mode_to_doc(sf.mode),
            }
            for sf in scenario.synapse_faults
        ],
    }


def scenario_from_document(doc: dict) -> FaultScenario:
    cap = doc.get("capacity", "unbounded")
    capacity = None if cap == "unbounded" else float(cap)
    neurons = tuple(
        NeuronFault(int(d["layer"]), int(d["index"]), _mode_from_doc(d["mode"]))
        for d in doc.get("neurons", [])
    )
    synapses = tuple(
        SynapseFault(
            int(d["layer"]), int(d["receiver"]), int(d["sender"]), _mode_from_doc(d["mode"])
        )
        for d in doc.get("synapses", [])
    )
    return FaultScenario(capacity=capacity, neuron_faults=neurons, synapse_faults=synapses)


# --- transmitted values -------------------------------------------------------

def _clamp_deviation(nominal: np.ndarray, proposed: np.ndarray, capacity: float | None) -> np.ndarray:
    if capacity is None:
        return proposed
    return nominal + np.clip(proposed - nominal, -capacity, capacity)


def _transmitted(
    mode: Mode,
    nominal: np.ndarray,
    weights: np.ndarray,
    capacity: float | None,
    rng_key: tuple[int, ...],
) -> np.ndarray:
    """Values carried by the faulty channels, shape (n, n_channels).

    ``nominal`` has shape (n,): the sender's fault-free signal; ``weights``
    has shape (n_channels,): the receiving weights of the channels.
    """
    n = nominal.shape[0]
    m = weights.shape[0]
    nom = np.repeat(nominal[:, None], m, axis=1)
    if isinstance(mode, Crash):
        return np.zeros((n, m))
    policy = mode.policy
    if isinstance(policy, WorstCaseSign):
        if capacity is None:
            raise PolicyError("worst_case_sign needs a bounded capacity")
        dev = np.where(weights >= 0.0, capacity, -capacity)
        return nom + dev[None, :]
    if isinstance(policy, Constant):
        return _clamp_deviation(nom, np.full((n, m), policy.value), capacity)
    if isinstance(policy, Offset):
        return _clamp_deviation(nom, nom + policy.delta, capacity)
    if isinstance(policy, RandomInCapacity):
        if capacity is None:
            raise PolicyError("random_in_capacity needs a bounded capacity")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((policy.seed,) + rng_key)))
        dev = rng.uniform(-capacity, capacity, size=m)
        return nom + dev[None, :]
    raise PolicyError(f"unknown policy {policy!r}")


def faulty_layer_outputs(net: Network, X: np.ndarray, scenario: FaultScenario) -> list[np.ndarray]:
    """Layer outputs of the faulty evaluation for a batch of inputs.

    Faulty transmissions are resolved against the fault-free nominal pass on
    the same inputs; a synapse fault overrides a fault of its sending neuron
    on that one channel.
    """
    scenario.validate_for(net)
    X = np.asarray(X, dtype=float)
    nominal = layer_outputs(net, X)
    cap = scenario.capacity

    neuron_by_layer: dict[int, list[NeuronFault]] = {}
    for nf in scenario.neuron_faults:
        neuron_by_layer.setdefault(nf.layer, []).append(nf)
    synapse_by_set: dict[int, list[SynapseFault]] = {}
    for sf in scenario.synapse_faults:
        synapse_by_set.setdefault(sf.layer, []).append(sf)

    outs = [X]
    y = X
    L = net.depth
    for l in range(1, L + 2):
        if l <= L:
            W = net.layers[l - 1].weights  # (n_recv, n_send)
        else:
            W = net.output_weights[None, :]
        S = y @ W.T
        sender_nominal = nominal[l - 1]
        # per-channel values actually carried from faulty senders
        channel_value: dict[int, np.ndarray] = {}
        for nf in neuron_by_layer.get(l - 1, []):
            channel_value[nf.index] = _transmitted(
                nf.mode, sender_nominal[:, nf.index], W[:, nf.index], cap, (l - 1, nf.index)
            )
        for j, values in channel_value.items():
            S += (values - y[:, [j]]) * W[:, j][None, :]
        for sf in synapse_by_set.get(l, []):
            w = W[sf.receiver, sf.sender]
            v = _transmitted(
                sf.mode,
                sender_nominal[:, sf.sender],
                np.array([w]),
                cap,
                (l, sf.receiver, sf.sender),
            )[:, 0]
            if sf.sender in channel_value:
                current = channel_value[sf.sender][:, sf.receiver]
            else:
                current = y[:, sf.sender]
            S[:, sf.receiver] += w * (v - current)
        if l <= L:
            from .net import _phi  # local import keeps the public surface tidy

            y = _phi(net.activation, S)
            layer = net.layers[l - 1]
            if layer.constant_neuron is not None:
                y[:, layer.constant_neuron] = 1.0
            outs.append(y)
        else:
            outs.append(S[:, 0])
    return outs


def forward_faulty_batch(net: Network, X: np.ndarray, scenario: FaultScenario) -> np.ndarray:
    return faulty_layer_outputs(net, X, scenario)[-1]


def forward_faulty(net: Network, x, scenario: FaultScenario) -> float:
    """Evaluate the network on one input with the scenario's faults applied."""
    arr = check_input(net, x)
    return float(forward_faulty_batch(net, arr[None, :], scenario)[0])


# --- scenario construction ----------------------------------------------------

def _eligible_neurons(net: Network, layer: int, include_constant: bool) -> list[int]:
    lay = net.layers[layer - 1]
    idx = list(range(lay.n_neurons))
    if not include_constant and lay.constant_neuron is not None:
        idx.remove(lay.constant_neuron)
    return idx


def _outgoing_score(net: Network, layer: int, index: int) -> float:
    """Largest absolute weight on the neuron's outgoing synapses."""
    if layer == net.depth:
        return abs(float(net.output_weights[index]))
    return float(np.max(np.abs(net.layers[layer].weights[:, index])))


def _synapse_channels(net: Network, l: int) -> list[tuple[int, int, float]]:
    """(receiver, sender, weight) triples for synapse set l (1..L+1)."""
    if l <= net.depth:
        W = net.layers[l - 1].weights
        return [(i, j, float(W[i, j])) for i in range(W.shape[0]) for j in range(W.shape[1])]
    return [(0, j, float(w)) for j, w in enumerate(net.output_weights)]


def adversarial_scenario(
    net: Network,
    dist: FaultDistribution,
    capacity: float | None,
    *,
    crash: bool = False,
    include_constant: bool = False,
) -> FaultScenario:
    """Worst-case selection: per layer, fail the units with the largest
    outgoing (neuron) or own (synapse) absolute weight, ties broken by lowest
    index.  Byzantine faults use the sign-matched maximal-deviation policy
    unless ``crash`` is set."""
    dist.validate_for(net)
    mode: Mode = Crash() if crash else Byzantine(WorstCaseSign())
    neuron_faults = []
    synapse_faults = []
    if dist.kind == NEURON:
        for l, f in enumerate(dist.per_layer, start=1):
            if f == 0:
                continue
            pool = _eligible_neurons(net, l, include_constant)
            if f > len(pool):
                raise ScenarioError(f"layer {l}: {f} faults exceed {len(pool)} eligible neurons")
            ranked = sorted(pool, key=lambda j: (-_outgoing_score(net, l, j), j))
            neuron_faults.extend(NeuronFault(l, j, mode) for j in sorted(ranked[:f]))
    else:
        for l, f in enumerate(dist.per_layer, start=1):
            if f == 0:
                continue
            channels = _synapse_channels(net, l)
            ranked = sorted(channels, key=lambda c: (-abs(c[2]), c[0], c[1]))
            synapse_faults.extend(
                SynapseFault(l, i, j, mode) for i, j, _ in sorted((c[:2] for c in ranked[:f]))
            )
    scenario = FaultScenario(
        capacity=capacity,
        neuron_faults=tuple(neuron_faults),
        synapse_faults=tuple(synapse_faults),
    )
    scenario.validate_for(net)
    return scenario


def random_scenario(
    net: Network,
    dist: FaultDistribution,
    capacity: float | None,
    seed: int,
    *,
    mode: str = "byzantine",
    policy: Policy | None = None,
    include_constant: bool = False,
) -> FaultScenario:
    """Uniformly sample the failing units; a pure function of (net, dist, seed, flags)."""
    dist.validate_for(net)
    if mode not in ("crash", "byzantine"):
        raise ValueError("mode must be 'crash' or 'byzantine'")
    fault_mode: Mode = Crash() if mode == "crash" else Byzantine(policy or WorstCaseSign())
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    neuron_faults = []
    synapse_faults = []
    if dist.kind == NEURON:
        for l, f in enumerate(dist.per_layer, start=1):
            if f == 0:
                continue
            pool = _eligible_neurons(net, l, include_constant)
            if f > len(pool):
                raise ScenarioError(f"layer {l}: {f} faults exceed {len(pool)} eligible neurons")
            chosen = rng.choice(len(pool), size=f, replace=False)
            neuron_faults.extend(NeuronFault(l, pool[i], fault_mode) for i in sorted(chosen))
    else:
        for l, f in enumerate(dist.per_layer, start=1):
            if f == 0:
                continue
            channels = _synapse_channels(net, l)
            chosen = rng.choice(len(channels), size=f, replace=False)
            synapse_faults.extend(
                SynapseFault(l, channels[i][0], channels[i][1], fault_mode) for i in sorted(chosen)
            )
    scenario = FaultScenario(
        capacity=capacity,
        neuron_faults=tuple(neuron_faults),
        synapse_faults=tuple(synapse_faults),
    )
    scenario.validate_for(net)
    return scenario


def count_scenarios(net: Network, dist: FaultDistribution, *, include_constant: bool = False) -> int:
    dist.validate_for(net)
    total = 1
    if dist.kind == NEURON:
        for l, f in enumerate(dist.per_layer, start=1):
            total *= math.comb(len(_eligible_neurons(net, l, include_constant)), f)
    else:
        for l, f in enumerate(dist.per_layer, start=1):
            total *= math.comb(len(_synapse_channels(net, l)), f)
    return total


def enumerate_scenarios(
    net: Network,
    dist: FaultDistribution,
    capacity: float | None,
    *,
    mode: str = "crash",
    policy: Policy | None = None,
    include_constant: bool = False,
    cap: int = 10**6,
) -> Iterator[FaultScenario]:
    """Yield every subset combination of the distribution exactly once, in
    deterministic lexicographic order.  Refuses with a count estimate when the
    total exceeds ``cap``.  Each call returns a fresh iterator."""
    total = count_scenarios(net, dist, include_constant=include_constant)
    if total > cap:
        raise EnumerationCapError(total, cap)
    fault_mode: Mode = Crash() if mode == "crash" else Byzantine(policy or WorstCaseSign())

    def gen() -> Iterator[FaultScenario]:
        if dist.kind == NEURON:
            pools = [
                list(combinations(_eligible_neurons(net, l, include_constant), f))
                for l, f in enumerate(dist.per_layer, start=1)
            ]
            for combo in product(*pools):
                faults = tuple(
                    NeuronFault(l, j, fault_mode)
                    for l, chosen in enumerate(combo, start=1)
                    for j in chosen
                )
                yield FaultScenario(capacity=capacity, neuron_faults=faults)
        else:
            pools = [
                list(combinations(range(len(_synapse_channels(net, l))), f))
                for l, f in enumerate(dist.per_layer, start=1)
            ]
            channel_maps = [_synapse_channels(net, l) for l in range(1, net.depth + 2)]
            for combo in product(*pools):
                faults = tuple(
                    SynapseFault(l, channel_maps[l - 1][i][0], channel_maps[l - 1][i][1], fault_mode)
                    for l, chosen in enumerate(combo, start=1)
                    for i in chosen
                )
                yield FaultScenario(capacity=capacity, synapse_faults=faults)

    return gen()
