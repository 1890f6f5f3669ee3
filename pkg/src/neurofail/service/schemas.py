"""Pydantic request/response models for the analysis service.

Shape-level validation lives here; the numeric invariants (weight matrix
consistency, index ranges, finiteness) are enforced by the core document
parsers, so there is exactly one authority for each rule.
"""

from __future__ import annotations

from typing import Any, Literal, Union

from pydantic import BaseModel, Field


class ActivationModel(BaseModel):
    kind: Literal["sigmoid", "tanh"] = "sigmoid"
    k: float = 1.0


class LayerModel(BaseModel):
    weights: list[list[float]]
    constant_neuron: int | None = None


class NetworkModel(BaseModel):
    input_dim: int
    activation: ActivationModel
    layers: list[LayerModel]
    output_weights: list[float]
    metadata: dict[str, Any] = Field(default_factory=dict)


class DistributionModel(BaseModel):
    kind: Literal["neuron", "synapse"] = "neuron"
    per_layer: list[int]


Capacity = Union[float, Literal["unbounded"]]


class ScenarioModel(BaseModel):
    capacity: Capacity = "unbounded"
    neurons: list[dict[str, Any]] = Field(default_factory=list)
    synapses: list[dict[str, Any]] = Field(default_factory=list)


class TargetModel(BaseModel):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)


class LatencyModelSpec(BaseModel):
    kind: Literal["uniform", "exponential", "heavy_tail"] = "heavy_tail"
    seed: int = 0
    lo: float = 0.1
    hi: float = 1.0
    mean: float = 1.0
    p_straggler: float = 0.1
    straggler_factor: float = 10.0


class TrainConfigModel(BaseModel):
    layer_sizes: list[int]
    activation: ActivationModel = Field(default_factory=ActivationModel)
    learning_rate: float = 0.5
    epochs: int = 2000
    batch_size: int | None = None
    n_samples: int = 256
    seed: int = 0
    target_eps_prime: float | None = None
    weight_decay: float = 0.0
    momentum: float = 0.0
    max_output_weight: float | None = None
    max_hidden_weight: float | None = None
    bias: bool = True
    freeze_hidden: bool = False
    grid_samples: bool = False
    eval_grid: int = 256
    log_every: int = 50


# --- requests ---------------------------------------------------------------

class ForwardRequest(BaseModel):
    network: NetworkModel
    input: list[float]


class InjectRequest(BaseModel):
    network: NetworkModel
    input: list[float]
    scenario: ScenarioModel
    distribution: DistributionModel | None = None  # enables the bound column


class AnalyzeRequest(BaseModel):
    network: NetworkModel
    distribution: DistributionModel
    capacity: float
    eps: float | None = None
    eps_prime: float | None = None


class CertifyRequest(BaseModel):
    network: NetworkModel
    distribution: DistributionModel
    eps: float
    eps_prime: float
    capacity: float


class TrainRequest(BaseModel):
    target: TargetModel
    config: TrainConfigModel


class SweepKRequest(BaseModel):
    network: NetworkModel
    distribution: DistributionModel
    capacity: float
    k_values: list[float]
    trials: int = 8
    seed: int = 0


class QuantizeRequest(BaseModel):
    network: NetworkModel
    fractional_bits: list[int]
    grid_per_dim: int = 1000


class BoostRequest(BaseModel):
    network: NetworkModel
    target: TargetModel
    eps: float
    eps_prime: float
    cut_counts: list[int]
    latency: LatencyModelSpec
    trials: int = 100
    seed: int = 0


class BruteCheckRequest(BaseModel):
    network: NetworkModel
    target: TargetModel
    distribution: DistributionModel
    eps: float
    eps_prime: float
    capacity: float
    grid_per_dim: int = 17
    mode: Literal["crash", "byzantine"] = "crash"


class UnboundedDemoRequest(BaseModel):
    network: NetworkModel
    eps: float
    input: list[float] | None = None
    clamp_capacity: float | None = None


class TightnessRequest(BaseModel):
    n_neurons: int
    n_fail: int
    w_m: float
    alpha: float = 0.01
    k: float = 1.0


class EpsPrimeRequest(BaseModel):
    network: NetworkModel
    target: TargetModel
    grid_per_dim: int = 512


class MaxTolerableRequest(BaseModel):
    network: NetworkModel
    eps: float
    eps_prime: float
    capacity: float


class SoundnessSweepRequest(BaseModel):
    network: NetworkModel
    distribution: DistributionModel
    capacity: float
    trials: int = 100
    seed: int = 0


# --- responses ---------------------------------------------------------------

class ForwardResponse(BaseModel):
    output: float


class InjectResponse(BaseModel):
    nominal: float
    faulty: float
    observed_error: float
    bound: float | None = None
    utilization: float | None = None
    sound: bool | None = None


class ReportResponse(BaseModel):
    report: dict[str, Any]
    exit_hint: int  # 0 when certified/sound, 1 otherwise


class TrainResponse(BaseModel):
    network: NetworkModel
    eps_prime: float
    history_csv: str


class SweepKResponse(BaseModel):
    rows: list[list[float]]
    csv: str
    fep_slope: float
    observed_slope: float


class QuantizeRow(BaseModel):
    bits: int
    lam: float
    bound: float
    max_error: float
    sound: bool


class QuantizeResponse(BaseModel):
    rows: list[QuantizeRow]
    csv: str
    all_sound: bool


class BoostResponse(BaseModel):
    csv: str
    mean_speedup: float
    max_abs_err: float
    violations: int
    certificate: dict[str, Any]


class BruteCheckResponse(BaseModel):
    certified: bool
    brute_force_passed: bool
    agreement: bool
    worst_error: float
    n_scenarios: int


class UnboundedDemoResponse(BaseModel):
    scenario: dict[str, Any]
    input: list[float]
    observed_error: float
    broke: bool
    clamped_error: float | None = None
    clamped_bound: float | None = None
    clamped_sound: bool | None = None


class TightnessResponse(BaseModel):
    utilization: float
    observed_error: float
    bound: float
    network: NetworkModel


class EpsPrimeResponse(BaseModel):
    eps_prime: float
    argmax: list[float]
    grid_per_dim: int


class MaxTolerableResponse(BaseModel):
    distributions: list[list[int]]
    complete: bool


class SoundnessSweepResponse(BaseModel):
    csv: str
    max_error: float
    mean_error: float
    bound: float
    max_utilization: float
    violations: int
    counterexample: dict[str, Any] | None = None
