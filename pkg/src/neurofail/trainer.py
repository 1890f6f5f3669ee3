"""Backpropagation trainer, activation quantization, and the constructive
over-provisioning workflow.

Training is plain full-batch gradient descent on mean squared error by
default (minibatches are available with seeded shuffling), deterministic given
the seed.  Per-neuron bias terms are realized as one constant neuron (output
pinned to 1) appended to each layer; units of the first layer have no
upstream constant and are therefore bias-free.  Weight decay and an optional
per-group max-weight clamp are the levers for shrinking weights, which is
what buys fault-tolerance slack at fixed accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .bounds import FepReport, certify_neurons
from .faults import FaultDistribution
from .net import ActivationSpec, Layer, Network, _phi, _phi_prime, forward_batch
from .targets import TargetFunction


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    layer_sizes: tuple[int, ...]
    activation: ActivationSpec = field(default_factory=ActivationSpec)
    learning_rate: float = 0.5
    epochs: int = 2000
    batch_size: int | None = None  # None = full batch
    n_samples: int = 256
    seed: int = 0
    target_eps_prime: float | None = None
    weight_decay: float = 0.0
    momentum: float = 0.0
    max_output_weight: float | None = None
    max_hidden_weight: float | None = None
    bias: bool = True
    freeze_hidden: bool = False  # descend on the output weights only (convex)
    grid_samples: bool = False   # train on the uniform grid instead of random draws
    eval_grid: int = 256
    log_every: int = 50

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.layer_sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise ValueError("layer_sizes must be positive integers")
        object.__setattr__(self, "layer_sizes", sizes)
        if self.learning_rate <= 0 or self.epochs < 1 or self.n_samples < 1:
            raise ValueError("learning_rate, epochs and n_samples must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive when given")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")


@dataclass
class _Params:
    """Mutable training view: weight matrices per layer plus output weights."""

    weights: list[np.ndarray]
    out: np.ndarray
    const_idx: list[int | None]
    activation: ActivationSpec

    def forward_trace(self, X: np.ndarray):
        acts = [X]
        pre_const = []
        y = X
        for W, c in zip(self.weights, self.const_idx):
            y = _phi(self.activation, y @ W.T)
            pre_const.append(y)
            if c is not None:
                y = y.copy()
                y[:, c] = 1.0
            acts.append(y)
        pred = acts[-1] @ self.out
        return acts, pre_const, pred


def _init_params(cfg: TrainConfig, input_dim: int, rng: np.random.Generator) -> _Params:
    sizes = [n + 1 if cfg.bias else n for n in cfg.layer_sizes]
    const_idx: list[int | None] = [sizes[i] - 1 if cfg.bias else None for i in range(len(sizes))]
    k = cfg.activation.lipschitz_k
    gain = 4.0 * k if cfg.activation.kind == "sigmoid" else k
    weights = []
    prev = input_dim
    for n, c in zip(sizes, const_idx):
        if prev == 1:
            # 1-D fan-in, no upstream bias: mirrored log-spaced input scales so
            # the tuned activations bend at staggered positions, and each +/-
            # pair sums to a constant
            half = max((n + 1) // 2, 1)
            mags = np.geomspace(0.25, 48.0, half) / gain
            signed = np.empty(2 * half)
            signed[0::2] = mags
            signed[1::2] = -mags
            W = signed[:n, None].copy()
        else:
            r = 1.0 / (gain * math.sqrt(prev))
            W = rng.uniform(-r, r, size=(n, prev))
        if c is not None:
            W[c, :] = 0.0
        weights.append(W)
        prev = n
    out = rng.uniform(-0.5, 0.5, size=prev) / math.sqrt(prev)
    return _Params(weights=weights, out=out, const_idx=const_idx, activation=cfg.activation)


def loss_and_grads(params: _Params, X: np.ndarray, t: np.ndarray, weight_decay: float = 0.0):
    """Mean squared error and its exact gradients for every weight group."""
    acts, pre_const, pred = params.forward_trace(X)
    resid = pred - t
    n = X.shape[0]
    loss = float(np.mean(resid**2))
    g_pred = 2.0 * resid / n
    grad_out = acts[-1].T @ g_pred
    grads = [np.zeros_like(W) for W in params.weights]
    G = np.outer(g_pred, params.out)
    for l in range(len(params.weights) - 1, -1, -1):
        c = params.const_idx[l]
        if c is not None:
            G[:, c] = 0.0  # a pinned output passes no gradient
        D = G * _phi_prime(params.activation, pre_const[l])
        grads[l] = D.T @ acts[l]
        G = D @ params.weights[l]
    if weight_decay > 0.0:
        loss += 0.5 * weight_decay * (
            sum(float(np.sum(W**2)) for W in params.weights) + float(np.sum(params.out**2))
        )
        grads = [g + weight_decay * W for g, W in zip(grads, params.weights)]
        grad_out = grad_out + weight_decay * params.out
    return loss, grads, grad_out


def _clip_params(params: _Params, cfg: TrainConfig) -> None:
    if cfg.max_hidden_weight is not None:
        m = cfg.max_hidden_weight
        for W in params.weights:
            np.clip(W, -m, m, out=W)
    if cfg.max_output_weight is not None:
        m = cfg.max_output_weight
        np.clip(params.out, -m, m, out=params.out)


def _to_network(params: _Params, input_dim: int, cfg: TrainConfig, metadata: dict) -> Network:
    layers = tuple(
        Layer(weights=W.copy(), constant_neuron=c)
        for W, c in zip(params.weights, params.const_idx)
    )
    return Network(
        input_dim=input_dim,
        layers=layers,
        output_weights=params.out.copy(),
        activation=cfg.activation,
        metadata=metadata,
    )


def _grid_eps_prime(params: _Params, input_dim: int, target: TargetFunction, grid: int) -> float:
    pts = np.linspace(0.0, 1.0, grid)
    mesh = np.meshgrid(*([pts] * input_dim), indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)
    _, _, pred = params.forward_trace(X)
    return float(np.max(np.abs(pred - target(X))))


@dataclass(frozen=True)
class TrainResult:
    network: Network
    history: tuple[tuple[int, float, float], ...]  # (epoch, loss, grid_eps_prime)
    eps_prime: float

    def history_csv(self) -> str:
        lines = ["epoch,loss,grid_eps_prime"]
        lines += [f"{e},{loss!r},{ep!r}" for e, loss, ep in self.history]
        return "\n".join(lines) + "\n"


def _sample_inputs(cfg: TrainConfig, d: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.grid_samples:
        per_dim = max(2, int(round(cfg.n_samples ** (1.0 / d))))
        pts = np.linspace(0.0, 1.0, per_dim)
        mesh = np.meshgrid(*([pts] * d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    return rng.uniform(0.0, 1.0, size=(cfg.n_samples, d))


def train(target: TargetFunction, cfg: TrainConfig) -> TrainResult:
    """Fit a network to the target by seeded gradient descent (heavy-ball
    momentum optional).

    Best effort: training stops early once the grid accuracy reaches
    ``target_eps_prime`` (when set) but makes no promise of getting there.
    Raises :class:`TrainingError` with the epoch index if the loss diverges.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    d = target.dim
    params = _init_params(cfg, d, rng)
    X = _sample_inputs(cfg, d, rng)
    t = target(X)

    vel = [np.zeros_like(W) for W in params.weights]
    vel_out = np.zeros_like(params.out)
    frozen_acts = params.forward_trace(X)[0][-1] if cfg.freeze_hidden else None

    def step(Xb, tb, acts_last=None):
        if acts_last is not None:
            resid = acts_last @ params.out - tb
            loss = float(np.mean(resid**2))
            grad_out = 2.0 * (acts_last.T @ resid) / Xb.shape[0]
            if cfg.weight_decay > 0.0:
                loss += 0.5 * cfg.weight_decay * float(np.sum(params.out**2))
                grad_out = grad_out + cfg.weight_decay * params.out
            grads = None
        else:
            loss, grads, grad_out = loss_and_grads(params, Xb, tb, cfg.weight_decay)
        if grads is not None:
            for W, g, v in zip(params.weights, grads, vel):
                v *= cfg.momentum
                v -= cfg.learning_rate * g
                W += v
        nonlocal vel_out
        vel_out = cfg.momentum * vel_out - cfg.learning_rate * grad_out
        params.out += vel_out
        return loss

    history: list[tuple[int, float, float]] = []
    stop_epoch = cfg.epochs
    for epoch in range(cfg.epochs):
        if cfg.freeze_hidden or cfg.batch_size is None or cfg.batch_size >= cfg.n_samples:
            loss = step(X, t, frozen_acts)
        else:
            order = rng.permutation(X.shape[0])
            loss = math.nan
            for start in range(0, X.shape[0], cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                loss = step(X[idx], t[idx])
        _clip_params(params, cfg)
        if not math.isfinite(loss):
            raise TrainingError(f"loss diverged at epoch {epoch}")
        if epoch % cfg.log_every == 0 or epoch == cfg.epochs - 1:
            ep = _grid_eps_prime(params, d, target, cfg.eval_grid)
            history.append((epoch, loss, ep))
            if cfg.target_eps_prime is not None and ep <= cfg.target_eps_prime:
                stop_epoch = epoch + 1
                break

    eps_prime = _grid_eps_prime(params, d, target, cfg.eval_grid)
    metadata = {
        "target": target.name,
        "seed": cfg.seed,
        "epochs_run": stop_epoch,
        "grid_eps_prime": eps_prime,
        "eval_grid": cfg.eval_grid,
    }
    return TrainResult(network=_to_network(params, d, cfg, metadata), history=tuple(history), eps_prime=eps_prime)


# --- quantization -------------------------------------------------------------

@dataclass(frozen=True)
class QuantizedNetwork:
    """Evaluation wrapper that rounds every neuron output to the nearest
    multiple of 2^-fractional_bits (the inputs and the linear output node are
    untouched)."""

    network: Network
    fractional_bits: int

    def forward_batch(self, X: np.ndarray) -> np.ndarray:
        scale = float(2**self.fractional_bits)
        y = np.asarray(X, dtype=float)
        for layer in self.network.layers:
            y = _phi(self.network.activation, y @ layer.weights.T)
            y = np.round(y * scale) / scale
            if layer.constant_neuron is not None:
                y = y.copy()
                y[:, layer.constant_neuron] = 1.0
        return y @ self.network.output_weights

    def forward(self, x) -> float:
        from .net import check_input

        arr = check_input(self.network, x)
        return float(self.forward_batch(arr[None, :])[0])


def quantize(net: Network, fractional_bits: int) -> tuple[QuantizedNetwork, list[float]]:
    """Reduced-precision evaluation plus the per-layer half-ulp error budgets
    lambda_l = 2^-(fractional_bits+1) that feed the quantization bound."""
    if fractional_bits < 1:
        raise ValueError("fractional_bits must be >= 1")
    lam = 2.0 ** (-(fractional_bits + 1))
    return QuantizedNetwork(net, fractional_bits), [lam] * net.depth


# --- constructive over-provisioning -------------------------------------------

def split_to_weight_budget(net: Network, max_output_weight: float) -> Network:
    """Replicate last-layer neurons until every output weight's magnitude is
    at most ``max_output_weight``; the computed function is unchanged.

    A neuron with output weight w becomes r = ceil(|w| / budget) identical
    copies with weight w / r each.  This is the weight-vs-neuron-count
    trade-off in its purest form: more neurons sum to the same value with
    lower synaptic weights, buying fault-tolerance slack for free accuracy.
    """
    if max_output_weight <= 0:
        raise ValueError("max_output_weight must be positive")
    last = net.layers[-1]
    if last.constant_neuron is not None:
        raise ValueError("cannot split a layer with a constant neuron (it must stay unique)")
    rows = []
    out = []
    for j in range(last.n_neurons):
        w = float(net.output_weights[j])
        r = max(1, math.ceil(abs(w) / max_output_weight))
        for _ in range(r):
            rows.append(last.weights[j])
            out.append(w / r)
    new_last = Layer(weights=np.array(rows), constant_neuron=None)
    meta = dict(net.metadata)
    meta["split_output_budget"] = max_output_weight
    return Network(
        input_dim=net.input_dim,
        layers=net.layers[:-1] + (new_last,),
        output_weights=np.array(out),
        activation=net.activation,
        metadata=meta,
    )


@dataclass(frozen=True)
class OverprovisionResult:
    network: Network
    report: FepReport
    eps_prime_measured: float
    attempts: int
    capped: bool


def overprovision_pair(
    target: TargetFunction,
    eps: float,
    eps_prime: float,
    dist: FaultDistribution,
    capacity: float,
    cfg_base: TrainConfig,
    *,
    max_total_neurons: int = 8192,
) -> OverprovisionResult:
    """Constructive path to a network that is both accurate and certified.

    Each attempt trains at the current widths, then (when the certificate
    fails only on output-weight size) splits last-layer neurons down to the
    weight budget the slack allows; failing that, widths are doubled and
    training repeats.  Widening raises the layer counts in the bound, so the
    split is what jointly shrinks weights, as the weight-vs-learning-cost
    trade-off demands.  A capped run returns the best attempt flagged
    uncertified; no exception."""
    if not (0 < eps_prime < eps):
        raise ValueError("need 0 < eps_prime < eps")
    if len(dist.per_layer) != len(cfg_base.layer_sizes):
        raise ValueError("distribution length must match cfg_base.layer_sizes")
    sizes = cfg_base.layer_sizes
    attempts = 0
    best: OverprovisionResult | None = None
    while True:
        attempts += 1
        cfg = replace(cfg_base, layer_sizes=sizes)
        result = train(target, cfg)
        net = result.network
        measured = result.eps_prime
        report = certify_neurons(net, dist, eps, eps_prime, capacity)
        if not report.certified and report.fep > 0:
            # fep is linear in the output-weight maximum; split to the largest
            # budget that leaves 10% headroom under the threshold
            wm_out = report.max_weights[-1]
            coef = report.fep / wm_out if wm_out > 0 else 0.0
            if coef > 0:
                budget = 0.9 * (eps - eps_prime) / coef
                if budget < wm_out and not cfg.bias:
                    candidate_net = split_to_weight_budget(net, budget)
                    if sum(candidate_net.layer_sizes) <= max_total_neurons:
                        candidate_report = certify_neurons(
                            candidate_net, dist, eps, eps_prime, capacity
                        )
                        if candidate_report.certified:
                            net = candidate_net
                            report = candidate_report
                            from .empirical import measure_eps_prime

                            measured = measure_eps_prime(net, target, cfg.eval_grid).value
        ok = measured <= eps_prime and bool(report.certified)
        candidate = OverprovisionResult(
            network=net,
            report=report,
            eps_prime_measured=measured,
            attempts=attempts,
            capped=False,
        )
        if ok:
            return candidate
        if best is None or measured < best.eps_prime_measured:
            best = candidate
        sizes = tuple(2 * n for n in sizes)
        if sum(sizes) > max_total_neurons:
            return OverprovisionResult(
                network=best.network,
                report=best.report,
                eps_prime_measured=best.eps_prime_measured,
                attempts=attempts,
                capped=True,
            )
