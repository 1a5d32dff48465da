"""Amplitude-encoded variational solver for QUBO and MaxCut problems.

n_c binary variables ride on ceil(log2 n_c) + 1 qubits: the amplitudes of
a small register address the variables and one ancilla carries each
variable's one-probability. A parameterized circuit is trained with exact
parameter-shift gradients (optionally estimated from measurement shots)
against a relaxed quadratic cost whose vertex values coincide with the
classical objective. Linear exclusivity constraints are enforced at the
circuit level with postselected detector blocks, and hybrid pipelines
combine training with warm starts and classical bit-flip refinement.
"""

from .analysis import (FidelityHistogram, brute_force_min_cost,
                       brute_force_optimum, classical_expressibility,
                       fidelity_histogram, kl_divergence,
                       quantum_expressibility)
from .ansatz import AnsatzSpec, build_circuit, prepare_warmstart_state
from .constraints import (Constraint, ConstrainedCircuit,
                          build_constrained_circuit, constrained_train)
from .hybrid import (LocalSearchStage, PipelineSpec, QuencStage,
                     global_opt_probability, local_search, run_pipeline,
                     shot_scaling_experiment)
from .objective import (SolutionDistribution, decode, extract_exact,
                        extract_shots, qubits_for, quenc_cost,
                        register_width)
from .problems import (IsingModel, MaxCutGraph, QuboProblem, graph_to_qubo,
                       ising_to_maxcut, maxcut_energy, normalized_cost,
                       qubo_cost, random_complete_graph, star_graph)
from .records import RunRecord
from .rng import derive_seed, make_rng
from .statevector import (Circuit, GateDescriptor, PostselectionError,
                          StateVector, apply, postselect,
                          projector_expectation, run_circuit,
                          run_circuit_batch, sample)
from .training import (TrainConfig, TrainingAborted, TrainState, adam_step,
                       cost_gradient, gd_step, shift_derivative, train)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AnsatzSpec",
    "Circuit",
    "ConstrainedCircuit",
    "Constraint",
    "FidelityHistogram",
    "GateDescriptor",
    "IsingModel",
    "LocalSearchStage",
    "MaxCutGraph",
    "PipelineSpec",
    "PostselectionError",
    "QuboProblem",
    "QuencStage",
    "RunRecord",
    "SolutionDistribution",
    "StateVector",
    "TrainConfig",
    "TrainState",
    "TrainingAborted",
    "adam_step",
    "apply",
    "brute_force_min_cost",
    "brute_force_optimum",
    "build_circuit",
    "build_constrained_circuit",
    "classical_expressibility",
    "constrained_train",
    "cost_gradient",
    "decode",
    "derive_seed",
    "extract_exact",
    "extract_shots",
    "fidelity_histogram",
    "gd_step",
    "global_opt_probability",
    "graph_to_qubo",
    "ising_to_maxcut",
    "kl_divergence",
    "local_search",
    "make_rng",
    "maxcut_energy",
    "normalized_cost",
    "postselect",
    "prepare_warmstart_state",
    "projector_expectation",
    "qubits_for",
    "qubo_cost",
    "quantum_expressibility",
    "quenc_cost",
    "random_complete_graph",
    "register_width",
    "run_circuit",
    "run_circuit_batch",
    "run_pipeline",
    "sample",
    "shift_derivative",
    "shot_scaling_experiment",
    "star_graph",
    "train",
]
