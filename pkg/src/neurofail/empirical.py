"""Empirical validation of the analytic bounds: accuracy measurement,
Monte Carlo soundness sweeps, worst-case tightness constructions, brute-force
enumeration, the unbounded-transmission breakage demo, and the sweep over the
activation's Lipschitz constant.

Every experiment here is a deterministic function of its seed; trial i draws
from a generator keyed on (master seed, i), so aggregation order never
matters.  The one hard invariant all sweeps enforce: with bounded capacity,
no observed error may exceed the analytic bound (up to 1e-9 of float
accumulation).  A violation raises :class:`SoundnessError` carrying the
serialized counterexample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import faults
from .bounds import CRASH_CAPACITY, fep_neurons, fep_synapses, certify_neurons
from .faults import (
    Byzantine,
    Constant,
    FaultDistribution,
    FaultScenario,
    NeuronFault,
    Offset,
    RandomInCapacity,
    WorstCaseSign,
    adversarial_scenario,
    enumerate_scenarios,
    forward_faulty_batch,
    random_scenario,
    scenario_to_document,
)
from .net import ActivationSpec, Layer, Network, forward_batch, layer_outputs
from .targets import TargetFunction

SOUNDNESS_TOL = 1e-9


class SoundnessError(AssertionError):
    """An observed error exceeded the analytic bound (should never happen
    with bounded capacity); carries the serialized counterexample."""

    def __init__(self, record: "ExperimentRecord", scenario: FaultScenario):
        self.record = record
        self.counterexample = {
            "scenario": scenario_to_document(scenario),
            "input": list(record.input),
            "observed_error": record.observed_error,
            "bound": record.bound,
        }
        super().__init__(
            f"soundness violation: observed {record.observed_error!r} > bound {record.bound!r}\n"
            + json.dumps(self.counterexample)
        )


@dataclass(frozen=True)
class ExperimentRecord:
    """One fault-injection trial."""

    scenario_id: int
    input: tuple[float, ...]
    nominal_output: float
    faulty_output: float
    observed_error: float
    bound: float

    @property
    def utilization(self) -> float:
        if self.bound == 0.0:
            return 0.0 if self.observed_error == 0.0 else math.inf
        return self.observed_error / self.bound


def grid_points(dim: int, per_dim: int) -> np.ndarray:
    """Uniform grid over [0, 1]^dim including the endpoints, shape (per_dim^dim, dim)."""
    if per_dim < 2:
        raise ValueError("grid_per_dim must be >= 2")
    pts = np.linspace(0.0, 1.0, per_dim)
    mesh = np.meshgrid(*([pts] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class EpsPrimeEstimate:
    value: float
    argmax: tuple[float, ...]
    grid_per_dim: int


def measure_eps_prime(net: Network, target: TargetFunction, grid_per_dim: int) -> EpsPrimeEstimate:
    """Grid maximum of |target - network| over [0, 1]^d.

    A lower estimate of the true supremum; refining the grid (2g-1 points
    nests g points) can only raise it.
    """
    if target.dim != net.input_dim:
        raise ValueError("network input dimension does not match the target")
    X = grid_points(net.input_dim, grid_per_dim)
    err = np.abs(target(X) - forward_batch(net, X))
    i = int(np.argmax(err))
    return EpsPrimeEstimate(value=float(err[i]), argmax=tuple(X[i]), grid_per_dim=grid_per_dim)


# --- Monte Carlo soundness ------------------------------------------------------

def _trial_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, i))))


def _policy_for_trial(rng: np.random.Generator, capacity: float, i: int):
    which = i % 4
    if which == 0:
        return WorstCaseSign()
    if which == 1:
        # aim past the capacity half the time to exercise the clamp
        return Constant(float(rng.uniform(-2.0 * capacity, 2.0 * capacity)))
    if which == 2:
        return Offset(float(rng.uniform(-2.0 * capacity, 2.0 * capacity)))
    return RandomInCapacity(int(rng.integers(0, 2**31)))


@dataclass(frozen=True)
class SweepResult:
    """Per-trial records plus their aggregates; rows come out sorted by trial."""

    records: tuple[ExperimentRecord, ...]
    bound: float

    @property
    def max_error(self) -> float:
        return max((r.observed_error for r in self.records), default=0.0)

    @property
    def mean_error(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.observed_error for r in self.records) / len(self.records)

    @property
    def max_utilization(self) -> float:
        return max((r.utilization for r in self.records), default=0.0)

    def to_csv(self) -> str:
        lines = ["trial,observed,bound,utilization"]
        lines += [
            f"{i},{r.observed_error!r},{r.bound!r},{r.utilization!r}"
            for i, r in enumerate(self.records)
        ]
        return "\n".join(lines) + "\n"


def soundness_sweep(
    net: Network,
    dist: FaultDistribution,
    capacity: float,
    trials: int,
    seed: int,
    *,
    adversarial_every: int = 4,
) -> SweepResult:
    """Independent (random input, random scenario, random policy) trials, with
    every ``adversarial_every``-th trial using the worst-case selection.  Each
    record must satisfy observed <= bound; the first violation aborts with the
    counterexample serialized."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if dist.kind == faults.NEURON:
        bound = fep_neurons(net, dist, capacity).fep
    else:
        bound = fep_synapses(net, dist, capacity).fep
    records = []
    for i in range(trials):
        rng = _trial_rng(seed, i)
        x = rng.uniform(0.0, 1.0, size=net.input_dim)
        policy = _policy_for_trial(rng, capacity, i)
        if adversarial_every and i % adversarial_every == adversarial_every - 1 and dist.kind == faults.NEURON:
            scenario = adversarial_scenario(net, dist, capacity)
        else:
            scenario = random_scenario(
                net, dist, capacity, int(rng.integers(0, 2**31)), mode="byzantine", policy=policy
            )
        nominal = float(forward_batch(net, x[None, :])[0])
        faulty = float(forward_faulty_batch(net, x[None, :], scenario)[0])
        record = ExperimentRecord(
            scenario_id=i,
            input=tuple(x),
            nominal_output=nominal,
            faulty_output=faulty,
            observed_error=abs(nominal - faulty),
            bound=bound,
        )
        if record.observed_error > bound + SOUNDNESS_TOL:
            raise SoundnessError(record, scenario)
        records.append(record)
    return SweepResult(records=tuple(records), bound=bound)


# --- single-layer worst case ----------------------------------------------------

@dataclass(frozen=True)
class TightnessResult:
    network: Network
    scenario: FaultScenario
    observed_error: float
    bound: float
    utilization: float


def tightness_experiment(
    *,
    n_neurons: int,
    n_fail: int,
    w_m: float,
    alpha: float,
    k: float = 1.0,
) -> TightnessResult:
    """The degenerate single-layer construction that drives the crash bound to
    equality: every output weight equals +w_m and the incoming weights push
    each neuron's output above 1 - alpha at input 1, so crashing any n_fail
    neurons removes almost exactly n_fail * w_m from the output.
    Guarantees utilization >= 1 - alpha (up to rounding)."""
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    if not (0 <= n_fail <= n_neurons):
        raise ValueError("need 0 <= n_fail <= n_neurons")
    if w_m <= 0:
        raise ValueError("w_m must be positive")
    spec = ActivationSpec(kind="sigmoid", lipschitz_k=k)
    # sigmoid(4k * w_in) > 1 - alpha  <=>  4k * w_in > log((1 - alpha) / alpha)
    w_in = (math.log((1.0 - alpha) / alpha) + 1e-2) / (4.0 * k)
    net = Network(
        input_dim=1,
        layers=(Layer(weights=np.full((n_neurons, 1), w_in)),),
        output_weights=np.full(n_neurons, w_m),
        activation=spec,
    )
    dist = FaultDistribution(faults.NEURON, (n_fail,))
    scenario = adversarial_scenario(net, dist, CRASH_CAPACITY, crash=True)
    x = np.array([1.0])
    nominal = float(forward_batch(net, x[None, :])[0])
    faulty = float(forward_faulty_batch(net, x[None, :], scenario)[0])
    observed = abs(nominal - faulty)
    bound = n_fail * w_m
    utilization = 0.0 if bound == 0.0 else observed / bound
    return TightnessResult(
        network=net, scenario=scenario, observed_error=observed, bound=bound, utilization=utilization
    )


# --- brute force -----------------------------------------------------------------

@dataclass(frozen=True)
class BruteForceResult:
    passed: bool
    worst_error: float
    worst_scenario: FaultScenario | None
    n_scenarios: int
    eps: float
    eps_prime: float


def brute_force_certify(
    net: Network,
    dist: FaultDistribution,
    eps: float,
    eps_prime: float,
    target: TargetFunction,
    capacity: float,
    grid_per_dim: int,
    *,
    mode: str = "crash",
    cap: int = 10**6,
) -> BruteForceResult:
    """Ground truth by exhaustion: every scenario of the distribution times
    every grid input.  Passes iff max |target - faulty| <= eps.  Crash mode
    uses crash scenarios; byzantine mode uses the sign-matched worst-case
    policy at the given capacity."""
    X = grid_points(net.input_dim, grid_per_dim)
    T = target(X)
    worst = 0.0
    worst_scenario = None
    count = 0
    for scenario in enumerate_scenarios(net, dist, capacity, mode=mode, cap=cap):
        count += 1
        err = float(np.max(np.abs(T - forward_faulty_batch(net, X, scenario))))
        if err > worst:
            worst = err
            worst_scenario = scenario
    if count == 0:  # all-zero distribution: only the nominal network remains
        worst = float(np.max(np.abs(T - forward_batch(net, X))))
    return BruteForceResult(
        passed=worst <= eps,
        worst_error=worst,
        worst_scenario=worst_scenario,
        n_scenarios=count,
        eps=eps,
        eps_prime=eps_prime,
    )


# --- unbounded transmission demo --------------------------------------------------

@dataclass(frozen=True)
class UnboundedDemoResult:
    scenario: FaultScenario
    input: tuple[float, ...]
    nominal_output: float
    faulty_output: float
    observed_error: float
    eps: float


def lemma1_demo(net: Network, eps: float, x: Sequence[float] | None = None) -> UnboundedDemoResult:
    """One Byzantine neuron with unbounded transmission defeats any accuracy
    target: make the strongest last-layer neuron shout

        v = (eps + 1 + |F(x)| + |rest|) / |w|

    (sign-matched to its output weight) and the output moves by more than
    eps.  The returned scenario is verified by evaluation."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    w_out = np.asarray(net.output_weights)
    j = int(np.argmax(np.abs(w_out)))
    w = float(w_out[j])
    if w == 0.0:
        raise ValueError("degenerate network: all output weights are zero, no demo possible")
    xs = np.full(net.input_dim, 0.5) if x is None else np.asarray(x, dtype=float)
    trace = layer_outputs(net, xs[None, :])
    y_last = trace[-1][0]
    nominal = float(y_last @ w_out)
    rest = float(nominal - w * y_last[j])
    v = math.copysign((eps + 1.0 + abs(nominal) + abs(rest)) / abs(w), w)
    scenario = FaultScenario(
        capacity=None,
        neuron_faults=(NeuronFault(net.depth, j, Byzantine(Constant(v))),),
    )
    faulty = float(forward_faulty_batch(net, xs[None, :], scenario)[0])
    observed = abs(nominal - faulty)
    if observed <= eps:
        raise AssertionError(f"construction failed: observed {observed} <= eps {eps}")
    return UnboundedDemoResult(
        scenario=scenario,
        input=tuple(xs),
        nominal_output=nominal,
        faulty_output=faulty,
        observed_error=observed,
        eps=eps,
    )


def clamped_scenario(scenario: FaultScenario, capacity: float) -> FaultScenario:
    """The same fault assignment with transmission capacity bounded by C."""
    return FaultScenario(
        capacity=capacity,
        neuron_faults=scenario.neuron_faults,
        synapse_faults=scenario.synapse_faults,
    )


# --- single-synapse injection (sum-error model) ------------------------------------

def synapse_injection_shift(
    net: Network, x: Sequence[float], layer: int, receiver: int, lam: float
) -> float:
    """Output shift of one receiving neuron when an error lam is added to its
    received sum (the per-synapse corruption model behind the synapse-to-
    neuron error conversion)."""
    X = np.asarray(x, dtype=float)[None, :]
    trace = layer_outputs(net, X)
    s = float(trace[layer - 1][0] @ net.layers[layer - 1].weights[receiver])
    from .net import _phi

    y0 = float(_phi(net.activation, np.asarray(s)))
    y1 = float(_phi(net.activation, np.asarray(s + lam)))
    return abs(y1 - y0)


# --- sweep over the Lipschitz constant ----------------------------------------------

@dataclass(frozen=True)
class KSweepResult:
    rows: tuple[tuple[float, float, float, float, int], ...]  # (k, fep, max_err, mean_err, trials)

    def to_csv(self) -> str:
        lines = ["k,fep,max_err,mean_err,trials"]
        lines += [
            f"{k!r},{fep!r},{mx!r},{mean!r},{n}" for k, fep, mx, mean, n in self.rows
        ]
        return "\n".join(lines) + "\n"

    def fep_slope(self) -> float:
        ks = [r[0] for r in self.rows]
        return fit_loglog_slope(ks, [r[1] for r in self.rows])

    def observed_slope(self) -> float:
        ks = [r[0] for r in self.rows]
        return fit_loglog_slope(ks, [r[2] for r in self.rows])


def fit_loglog_slope(xs: Iterable[float], ys: Iterable[float]) -> float:
    lx = np.log(np.asarray(list(xs), dtype=float))
    ly = np.log(np.asarray(list(ys), dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def k_sweep(
    net: Network,
    dist: FaultDistribution,
    k_values: Sequence[float],
    trials: int,
    seed: int,
    capacity: float,
) -> KSweepResult:
    """Retune structurally identical networks over ``k_values``, inject the
    same adversarial fault distribution, and record the bound next to the
    observed worst error.  Emits rows ready for log-log plotting."""
    ks = [float(k) for k in k_values]
    if any(k <= 0 for k in ks) or sorted(ks) != ks:
        raise ValueError("k_values must be positive and sorted ascending")
    rows = []
    for ki, k in enumerate(ks):
        tuned = net.with_activation(ActivationSpec(kind=net.activation.kind, lipschitz_k=k))
        bound = fep_neurons(tuned, dist, capacity).fep
        scenario = adversarial_scenario(tuned, dist, capacity)
        errs = []
        for i in range(trials):
            rng = _trial_rng(seed, ki * trials + i)
            x = rng.uniform(0.0, 1.0, size=tuned.input_dim)
            nominal = float(forward_batch(tuned, x[None, :])[0])
            faulty = float(forward_faulty_batch(tuned, x[None, :], scenario)[0])
            err = abs(nominal - faulty)
            if err > bound + SOUNDNESS_TOL:
                record = ExperimentRecord(i, tuple(x), nominal, faulty, err, bound)
                raise SoundnessError(record, scenario)
            errs.append(err)
        rows.append((k, bound, max(errs), sum(errs) / len(errs), trials))
    return KSweepResult(rows=tuple(rows))


def linear_regime_network(
    layer_sizes: Sequence[int] = (4, 4, 4),
    *,
    input_dim: int = 2,
    weight: float = 0.5,
    output_weight: float = 0.5,
    k: float = 1.0,
) -> Network:
    """A family member engineered to operate where the activation's slope is
    exactly its Lipschitz constant: zero input weights pin every sum to the
    tanh center, all-positive hidden weights propagate injected deviations
    without cancellation."""
    sizes = [int(n) for n in layer_sizes]
    layers = [Layer(weights=np.zeros((sizes[0], input_dim)))]
    for prev, n in zip(sizes, sizes[1:]):
        layers.append(Layer(weights=np.full((n, prev), float(weight))))
    return Network(
        input_dim=input_dim,
        layers=tuple(layers),
        output_weights=np.full(sizes[-1], float(output_weight)),
        activation=ActivationSpec(kind="tanh", lipschitz_k=k),
        metadata={"family": "linear_regime"},
    )
