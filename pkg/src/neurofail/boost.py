"""Early-cutoff scheduling: layers proceed after enough signals have arrived,
treating the stragglers as crashed.

Semantics are layer-synchronous: every receiver of layer l+1 shares the same
dropped set, namely the f_l globally latest senders of layer l (ties broken
towards keeping the lowest index).  The shared set is what keeps the dropped
count within the certified per-layer budget; per-receiver independent cuts
could exceed it.  A reset costs nothing and a dropped neuron contributes
exactly 0, so the boosted output is by construction identical to evaluating
the network under the induced crash scenario - the simulator adds timing,
never new numerics.  Constant neurons answer instantly and are never dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import CRASH_CAPACITY, FepReport, certify_neurons
from .faults import Crash, FaultDistribution, FaultScenario, NeuronFault, forward_faulty_batch
from .net import Network, check_input, forward_batch
from .targets import TargetFunction

UNIFORM = "uniform"
EXPONENTIAL = "exponential"
HEAVY_TAIL = "heavy_tail"


@dataclass(frozen=True)
class LatencyModel:
    """Per-neuron reaction times; sampling is a pure function of
    (seed, trial, layer, neuron)."""

    kind: str
    seed: int = 0
    lo: float = 0.1
    hi: float = 1.0
    mean: float = 1.0
    p_straggler: float = 0.1
    straggler_factor: float = 10.0

    def __post_init__(self):
        if self.kind not in (UNIFORM, EXPONENTIAL, HEAVY_TAIL):
            raise ValueError(f"unknown latency kind {self.kind!r}")
        if self.kind == UNIFORM and not (0 <= self.lo <= self.hi):
            raise ValueError("uniform latency needs 0 <= lo <= hi")
        if self.kind in (EXPONENTIAL, HEAVY_TAIL) and self.mean <= 0:
            raise ValueError("mean latency must be positive")
        if self.kind == HEAVY_TAIL and not (
            0 <= self.p_straggler <= 1 and self.straggler_factor >= 1
        ):
            raise ValueError("heavy_tail needs p_straggler in [0,1] and straggler_factor >= 1")

    def sample_layer(self, layer: int, n: int, trial: int) -> np.ndarray:
        """Latencies for all n neurons of a layer; element j belongs to neuron j."""
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((self.seed, trial, layer)))
        )
        if self.kind == UNIFORM:
            return rng.uniform(self.lo, self.hi, size=n)
        base = rng.exponential(self.mean, size=n)
        if self.kind == HEAVY_TAIL:
            straggler = rng.random(size=n) < self.p_straggler
            base = np.where(straggler, base * self.straggler_factor, base)
        return base

    def sample(self, layer: int, neuron: int, trial: int) -> float:
        return float(self.sample_layer(layer, neuron + 1, trial)[neuron])


@dataclass(frozen=True)
class BoostPolicy:
    """Per-layer cut budgets, only constructible with a valid certificate."""

    cut_counts: tuple[int, ...]
    certificate: FepReport

    def __post_init__(self):
        object.__setattr__(self, "cut_counts", tuple(int(f) for f in self.cut_counts))


def make_boost_policy(
    net: Network, eps: float, eps_prime: float, cut_counts: Sequence[int]
) -> BoostPolicy:
    """Validate the cut budgets against the crash-mode certificate
    (capacity replaced by the activation maximum).  Refuses uncertifiable
    budgets."""
    dist = FaultDistribution("neuron", tuple(int(f) for f in cut_counts))
    report = certify_neurons(net, dist, eps, eps_prime, CRASH_CAPACITY)
    if not report.certified:
        raise ValueError(
            f"cut budget {tuple(cut_counts)} is not certified for eps={eps}, eps_prime={eps_prime}: "
            f"worst-case error {report.fep!r} vs threshold {report.threshold!r}"
        )
    return BoostPolicy(cut_counts=tuple(int(f) for f in cut_counts), certificate=report)


@dataclass(frozen=True)
class BoostOutcome:
    output: float
    nominal_output: float
    observed_error: float
    per_layer_dropped: tuple[tuple[int, ...], ...]
    makespan_boosted: float
    makespan_full: float
    scenario: FaultScenario

    @property
    def speedup(self) -> float:
        if self.makespan_boosted == 0.0:
            return 1.0
        return self.makespan_full / self.makespan_boosted


def simulate_boost(
    net: Network, x, latency: LatencyModel, policy: BoostPolicy, *, trial: int = 0
) -> BoostOutcome:
    """Event-driven run of one input: layer l starts once N_{l-1} - f_{l-1}
    signals are in, resets the rest to 0, and the output node itself waits for
    N_L - f_L last-layer signals.  The full-wait makespan is computed from the
    same latency draws."""
    arr = check_input(net, x)
    if len(policy.cut_counts) != net.depth:
        raise ValueError("policy length must match the network depth")
    sizes = net.layer_sizes
    lat = []
    for l in range(1, net.depth + 1):
        draws = latency.sample_layer(l, sizes[l - 1], trial)
        const = net.layers[l - 1].constant_neuron
        if const is not None:
            draws = draws.copy()
            draws[const] = 0.0  # a pinned output is available instantly
        lat.append(draws)

    def run(cuts: Sequence[int]) -> tuple[float, list[tuple[int, ...]]]:
        ready = 0.0  # inputs are the clients: present at t = 0
        dropped_all: list[tuple[int, ...]] = []
        for l in range(1, net.depth + 1):
            completions = [(ready + lat[l - 1][j], j) for j in range(sizes[l - 1])]
            f = cuts[l - 1]
            const = net.layers[l - 1].constant_neuron
            droppable = [(t, j) for t, j in completions if j != const]
            # latest f senders are reset; ties keep the lowest index running
            droppable.sort(key=lambda tj: (-tj[0], -tj[1]))
            dropped = tuple(sorted(j for _, j in droppable[:f]))
            dropped_all.append(dropped)
            kept = [(t, j) for t, j in completions if j not in dropped]
            ready = max(t for t, _ in kept)
        return ready, dropped_all

    makespan_boosted, dropped = run(policy.cut_counts)
    makespan_full, _ = run([0] * net.depth)

    scenario = FaultScenario(
        capacity=CRASH_CAPACITY,
        neuron_faults=tuple(
            NeuronFault(l, j, Crash())
            for l, js in enumerate(dropped, start=1)
            for j in js
        ),
    )
    output = float(forward_faulty_batch(net, arr[None, :], scenario)[0])
    nominal = float(forward_batch(net, arr[None, :])[0])
    return BoostOutcome(
        output=output,
        nominal_output=nominal,
        observed_error=abs(output - nominal),
        per_layer_dropped=tuple(dropped),
        makespan_boosted=makespan_boosted,
        makespan_full=makespan_full,
        scenario=scenario,
    )


class EpsViolation(AssertionError):
    """A boosted output left the certified accuracy band."""


@dataclass(frozen=True)
class BoostCampaignResult:
    rows: tuple[tuple[int, float, float, float, float, float, float, float], ...]
    eps: float

    @property
    def mean_speedup(self) -> float:
        return sum(r[7] for r in self.rows) / len(self.rows)

    @property
    def max_abs_err(self) -> float:
        return max(r[3] for r in self.rows)

    def to_csv(self) -> str:
        lines = ["trial,output,target,abs_err,eps,makespan_full,makespan_boost,speedup"]
        lines += [
            f"{t},{out!r},{tgt!r},{err!r},{eps!r},{full!r},{boost!r},{sp!r}"
            for t, out, tgt, err, eps, full, boost, sp in self.rows
        ]
        return "\n".join(lines) + "\n"


def boost_campaign(
    net: Network,
    target: TargetFunction,
    eps: float,
    eps_prime: float,
    latency: LatencyModel,
    policy: BoostPolicy,
    trials: int,
    seed: int,
) -> BoostCampaignResult:
    """Random inputs and latency draws; asserts |target - output| <= eps on
    every trial and reports the speedup distribution."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    for i in range(trials):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, i))))
        x = rng.uniform(0.0, 1.0, size=net.input_dim)
        outcome = simulate_boost(net, x, latency, policy, trial=i)
        tgt = target.at(x)
        abs_err = abs(tgt - outcome.output)
        if abs_err > eps:
            raise EpsViolation(
                f"trial {i}: |target - boosted| = {abs_err!r} > eps = {eps!r} "
                f"(dropped {outcome.per_layer_dropped})"
            )
        rows.append(
            (
                i,
                outcome.output,
                tgt,
                abs_err,
                eps,
                outcome.makespan_full,
                outcome.makespan_boosted,
                outcome.speedup,
            )
        )
    return BoostCampaignResult(rows=tuple(rows), eps=eps)
