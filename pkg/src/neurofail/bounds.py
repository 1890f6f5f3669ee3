"""Analytic worst-case bounds and robustness certificates.

The central quantity is the forward error propagation (fep): the worst-case
output deviation a given per-layer fault distribution can cause, computable
from topology, weights, the activation's Lipschitz constant K, and the
transmission capacity C alone.  A network that approximates its target within
eps_prime keeps an eps-approximation under the faults whenever
fep < eps - eps_prime (strict, the conservative side of the tightness
results); certificates here use the strict comparison for both neuron and
synapse distributions.

For pure crash studies, pass capacity=1.0: a crashed unit's deviation from
nominal is bounded by the activation maximum rather than by the synaptic
capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .faults import NEURON, SYNAPSE, FaultDistribution, ScenarioError
from .net import Network, max_weights

CONDITION_NEURONS = "byzantine-neurons"
CONDITION_SYNAPSES = "byzantine-synapses"

CRASH_CAPACITY = 1.0


@dataclass(frozen=True)
class FepReport:
    """Bound value, per-layer contributions, and the certificate verdict.

    ``slack`` is eps - eps_prime - fep and ``certified`` is set only when the
    accuracy pair was supplied; ``threshold`` echoes eps - eps_prime, the
    boundary the strict comparison is made against.  ``degenerate`` flags a
    synapse distribution whose correct-sender counts hit zero, in which case
    certification is refused.
    """

    fep: float
    per_layer: tuple[float, ...]
    condition: str
    capacity: float
    distribution: tuple[int, ...]
    max_weights: tuple[float, ...]
    eps: float | None = None
    eps_prime: float | None = None
    slack: float | None = None
    threshold: float | None = None
    certified: bool | None = None
    degenerate: bool = False

    def to_document(self) -> dict:
        return {
            "fep": self.fep,
            "per_layer": list(self.per_layer),
            "condition": self.condition,
            "capacity": self.capacity,
            "distribution": list(self.distribution),
            "max_weights": list(self.max_weights),
            "eps": self.eps,
            "eps_prime": self.eps_prime,
            "slack": self.slack,
            "threshold": self.threshold,
            "certified": self.certified,
            "degenerate": self.degenerate,
        }


def _check_accuracy_pair(eps: float, eps_prime: float) -> None:
    if not (math.isfinite(eps) and math.isfinite(eps_prime)):
        raise ValueError("eps and eps_prime must be finite")
    if eps_prime <= 0 or eps_prime > eps:
        raise ValueError("need 0 < eps_prime <= eps")


def _require_capacity(capacity: float) -> float:
    if capacity is None or not (math.isfinite(capacity) and capacity > 0):
        raise ValueError(
            "bounds need a positive finite capacity; with unbounded transmission "
            "no finite bound exists (a single Byzantine neuron already breaks any accuracy level)"
        )
    return float(capacity)


def neuron_fep_terms(net: Network, dist: FaultDistribution, capacity: float) -> list[float]:
    """Per-layer contributions to the neuron-failure bound.

    Faults at layer l are amplified by K per remaining activation stage and
    fanned through the correct neurons of every later layer, i.e. by
    (N_l' - f_l') * w_m^(l') for l' = l+1..L, then weighted into the output:

        term_l = C * f_l * K^(L-l) * w_out_max * prod_{l'>l} (N_l' - f_l') * w_m^(l')
    """
    C = _require_capacity(capacity)
    if dist.kind != NEURON:
        raise ScenarioError("neuron-kind distribution required")
    dist.validate_for(net)
    L = net.depth
    N = net.layer_sizes
    f = dist.per_layer
    wm = max_weights(net)  # wm[l-1] = max |w| into layer l, wm[L] = output weights
    K = net.activation.lipschitz_k
    terms = []
    for l in range(1, L + 1):
        prod = 1.0
        for l2 in range(l + 1, L + 1):
            prod *= (N[l2 - 1] - f[l2 - 1]) * wm[l2 - 1]
        terms.append(C * f[l - 1] * K ** (L - l) * wm[L] * prod)
    return terms


def fep_neurons(
    net: Network,
    dist: FaultDistribution,
    capacity: float,
    *,
    eps: float | None = None,
    eps_prime: float | None = None,
) -> FepReport:
    """Worst-case output error for a per-layer distribution of Byzantine
    neurons with per-synapse deviations bounded by ``capacity``."""
    terms = neuron_fep_terms(net, dist, capacity)
    fep = float(sum(terms))
    extra: dict = {}
    if eps is not None and eps_prime is not None:
        _check_accuracy_pair(eps, eps_prime)
        threshold = eps - eps_prime
        all_strict = all(f < n for f, n in zip(dist.per_layer, net.layer_sizes))
        extra = {
            "eps": float(eps),
            "eps_prime": float(eps_prime),
            "slack": threshold - fep,
            "threshold": threshold,
            "certified": bool(all_strict and fep < threshold),
        }
    return FepReport(
        fep=fep,
        per_layer=tuple(terms),
        condition=CONDITION_NEURONS,
        capacity=float(capacity),
        distribution=dist.per_layer,
        max_weights=tuple(max_weights(net)),
        **extra,
    )


def certify_neurons(
    net: Network, dist: FaultDistribution, eps: float, eps_prime: float, capacity: float
) -> FepReport:
    """Certificate for a Byzantine-neuron distribution: holds when every layer
    keeps at least one correct neuron and fep stays strictly below
    eps - eps_prime."""
    return fep_neurons(net, dist, capacity, eps=eps, eps_prime=eps_prime)


def synapse_fep_terms(
    net: Network, dist: FaultDistribution, capacity: float
) -> tuple[list[float], bool]:
    """Per-set contributions to the synapse-failure bound, plus a degeneracy flag.

    A corrupted synapse into layer l carries a deviation of at most C, which
    the receiving weight and activation turn into at most C * w_m^(l) * K at
    the receiving neuron; from there the error chains forward exactly one
    stage earlier than a neuron fault would:

        term_l = C * f_l * K^(L+1-l) * w_m^(l) * prod_{l'=l..L} (N_l' - f_{l'+1}) * w_m^(l'+1)

    The correct-sender counts subtract the faulty synapses of the following
    set; if a count reaches zero or below the formula degenerates and the
    distribution is flagged (and never certified).
    """
    C = _require_capacity(capacity)
    if dist.kind != SYNAPSE:
        raise ScenarioError("synapse-kind distribution required")
    dist.validate_for(net)
    L = net.depth
    N = net.layer_sizes
    f = dist.per_layer  # f[l-1] = faults in synapse set l, l = 1..L+1
    wm = max_weights(net)
    K = net.activation.lipschitz_k
    degenerate = False
    terms = []
    for l in range(1, L + 2):
        prod = 1.0
        for l2 in range(l, L + 1):
            factor = N[l2 - 1] - f[l2]
            if factor <= 0 and f[l - 1] > 0:
                degenerate = True  # an active term lost all correct senders
            prod *= factor * wm[l2]
        terms.append(C * f[l - 1] * K ** (L + 1 - l) * wm[l - 1] * prod)
    return terms, degenerate


def fep_synapses(
    net: Network,
    dist: FaultDistribution,
    capacity: float,
    *,
    eps: float | None = None,
    eps_prime: float | None = None,
) -> FepReport:
    """Worst-case output error for a distribution of Byzantine synapses."""
    terms, degenerate = synapse_fep_terms(net, dist, capacity)
    fep = float(sum(terms))
    extra: dict = {}
    if eps is not None and eps_prime is not None:
        _check_accuracy_pair(eps, eps_prime)
        threshold = eps - eps_prime
        extra = {
            "eps": float(eps),
            "eps_prime": float(eps_prime),
            "slack": threshold - fep,
            "threshold": threshold,
            "certified": bool(not degenerate and fep < threshold),
        }
    return FepReport(
        fep=fep,
        per_layer=tuple(terms),
        condition=CONDITION_SYNAPSES,
        capacity=float(capacity),
        distribution=dist.per_layer,
        max_weights=tuple(max_weights(net)),
        degenerate=degenerate,
        **extra,
    )


def certify_synapses(
    net: Network, dist: FaultDistribution, eps: float, eps_prime: float, capacity: float
) -> FepReport:
    return fep_synapses(net, dist, capacity, eps=eps, eps_prime=eps_prime)


def crash_bound_single_layer(net: Network, eps: float, eps_prime: float) -> int:
    """Largest number of crashed neurons a single-layer network provably
    tolerates: the biggest integer n with n * w_m <= eps - eps_prime, where
    w_m is the largest absolute output weight.  Capped at the layer width; if
    no neuron affects the output (w_m = 0) the whole layer may crash."""
    if net.depth != 1:
        raise ValueError("crash_bound_single_layer needs a single-layer network")
    _check_accuracy_pair(eps, eps_prime)
    n1 = net.layer_sizes[0]
    wm = float(max(abs(w) for w in net.output_weights))
    if wm == 0.0:
        return n1
    slack = eps - eps_prime
    n = int(math.floor(slack / wm))
    # float division can land on either side of the exact integer boundary
    while (n + 1) * wm <= slack:
        n += 1
    while n > 0 and n * wm > slack:
        n -= 1
    return min(max(n, 0), n1)


def synapse_error_as_neuron_error(lam: float, spec, capacity: float | None = None) -> float:
    """Worst-case output shift of the neuron receiving a corrupted synapse sum.

    An additive error lam on a neuron's received sum moves its output by at
    most K * |lam|; with the deviation at full capacity this is C * K.
    """
    if not math.isfinite(lam):
        raise ValueError("lam must be finite")
    if capacity is not None and abs(lam) > capacity + 1e-12:
        raise ValueError(f"|lam| = {abs(lam)} exceeds the capacity {capacity}")
    return spec.lipschitz_k * abs(lam)


def quantization_bound(net: Network, lambdas: list[float]) -> float:
    """Worst-case output error when every neuron of layer l rounds its output
    within lambdas[l-1].

    Per-neuron errors hit all N_l' neurons downstream (no fault subtraction):

        sum_l K^(L-l) * lambda_l * prod_{l'=l..L} N_l' * w_m^(l'+1)
    """
    L = net.depth
    if len(lambdas) != L:
        raise ValueError(f"need one lambda per layer ({L}), got {len(lambdas)}")
    lams = [float(v) for v in lambdas]
    if any(not math.isfinite(v) or v < 0 for v in lams):
        raise ValueError("lambdas must be non-negative finite reals")
    N = net.layer_sizes
    wm = max_weights(net)
    K = net.activation.lipschitz_k
    total = 0.0
    for l in range(1, L + 1):
        prod = 1.0
        for l2 in range(l, L + 1):
            prod *= N[l2 - 1] * wm[l2]
        total += K ** (L - l) * lams[l - 1] * prod
    return total


@dataclass(frozen=True)
class MaxTolerableResult:
    distributions: tuple[FaultDistribution, ...]
    complete: bool


def max_tolerable(
    net: Network,
    eps: float,
    eps_prime: float,
    capacity: float,
    *,
    search_cap: int = 10**6,
) -> MaxTolerableResult:
    """Maximal certified neuron fault distributions: every returned (f_l)
    certifies while no single-layer +1 increment still does.

    The feasible region is enumerated over the whole box of candidate counts
    rather than walked monotonically: draining a downstream layer can lower
    the bound (failed neurons stop forwarding amplified upstream error and
    contribute only capacity-bounded noise), so feasibility is not a down-set
    when K times the weights exceeds 1.  Output is sorted lexicographically;
    a box larger than ``search_cap`` yields a partial result flagged
    incomplete.
    """
    if not (0 < eps_prime < eps):
        raise ValueError("need 0 < eps_prime < eps")
    from itertools import product as iter_product

    L = net.depth
    sizes = net.layer_sizes
    box = 1
    for n in sizes:
        box *= n  # candidates per layer: 0..N_l-1 (the certificate needs f_l < N_l)
    complete = box <= search_cap

    def feasible(f: tuple[int, ...]) -> bool:
        report = certify_neurons(net, FaultDistribution(NEURON, f), eps, eps_prime, capacity)
        return bool(report.certified)

    feasible_set: set[tuple[int, ...]] = set()
    for count, f in enumerate(iter_product(*(range(n) for n in sizes))):
        if count >= search_cap:
            break
        if feasible(f):
            feasible_set.add(f)

    maximal = []
    for f in feasible_set:
        if all(
            f[l] + 1 >= sizes[l] or (f[:l] + (f[l] + 1,) + f[l + 1 :]) not in feasible_set
            for l in range(L)
        ):
            maximal.append(f)
    maximal.sort()
    return MaxTolerableResult(
        distributions=tuple(FaultDistribution(NEURON, f) for f in maximal),
        complete=complete,
    )
