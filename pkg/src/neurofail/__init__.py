"""Fault-tolerance analysis for feed-forward neural networks.

Analytic worst-case bounds on the output error caused by crashed or Byzantine
neurons and synapses, robustness certificates against accuracy budgets, and
the empirical machinery to validate them: fault injection, adversarial
constructions, brute-force enumeration, quantization experiments, and an
early-cutoff scheduling simulator.
"""

from .net import (
    ActivationSpec,
    Layer,
    Network,
    SchemaError,
    activate,
    forward,
    forward_batch,
    from_document,
    load,
    max_weights,
    save,
    to_document,
)
from .faults import (
    Byzantine,
    Constant,
    Crash,
    FaultDistribution,
    FaultScenario,
    NeuronFault,
    Offset,
    PolicyError,
    RandomInCapacity,
    ScenarioError,
    SynapseFault,
    WorstCaseSign,
    adversarial_scenario,
    enumerate_scenarios,
    forward_faulty,
    random_scenario,
    scenario_from_document,
    scenario_to_document,
)
from .bounds import (
    CRASH_CAPACITY,
    FepReport,
    certify_neurons,
    certify_synapses,
    crash_bound_single_layer,
    fep_neurons,
    fep_synapses,
    max_tolerable,
    quantization_bound,
    synapse_error_as_neuron_error,
)
from .targets import TargetFunction, make_target
from .trainer import TrainConfig, TrainingError, overprovision_pair, quantize, train
from .empirical import (
    SoundnessError,
    brute_force_certify,
    k_sweep,
    lemma1_demo,
    linear_regime_network,
    measure_eps_prime,
    soundness_sweep,
    tightness_experiment,
)
from .boost import BoostPolicy, LatencyModel, boost_campaign, make_boost_policy, simulate_boost

__version__ = "0.1.0"
