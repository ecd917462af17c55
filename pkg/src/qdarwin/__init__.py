"""Redundancy-profile simulations of a qubit watched by a small register.

Two engines share one measurement pipeline: a stroboscopic collision
model (repeated pairwise unitaries with fresh thermal units) and a
continuous master-equation integrator (dephasing, thermal, and a
time-local memory-kernel variant).  Both report mutual information
between the system and every fragment size of the accessible register,
rescaled by the system entropy, plus l1 coherences.
"""

from .cli import ConfigError, RunSpec, main, parse_config, run, write_csv
from .collision import (
    CollisionConfig,
    StroboscopicState,
    accessible_labels,
    build_hsa,
    build_hse,
    collision_step,
    initial_state,
    run_collision_sim,
)
from .lindblad import (
    LindbladConfig,
    TrajectoryRecord,
    analytic_coherences,
    blp_witness,
    dephasing_factor_nm,
    integrate,
    integrate_nonmarkov,
    liouvillian_apply,
    nonmarkov_rate,
)
from .metrics import (
    FragmentSelection,
    MIProfile,
    mi_profile,
    mutual_information,
    rescaled_mi,
)
from .qcore import (
    DensityMatrix,
    InvariantViolation,
    TensorSpace,
    all_plus_state,
    embed,
    gibbs_qubit,
    hermitian_eig,
    kron,
    l1_coherence,
    partial_trace,
    trace_distance,
    unitary_from_hamiltonian,
    von_neumann_entropy,
)
from .selfcheck import run_property_suite

__version__ = "0.1.0"

__all__ = [
    "CollisionConfig",
    "ConfigError",
    "DensityMatrix",
    "FragmentSelection",
    "InvariantViolation",
    "LindbladConfig",
    "MIProfile",
    "RunSpec",
    "StroboscopicState",
    "TensorSpace",
    "TrajectoryRecord",
    "accessible_labels",
    "all_plus_state",
    "analytic_coherences",
    "blp_witness",
    "build_hsa",
    "build_hse",
    "collision_step",
    "dephasing_factor_nm",
    "embed",
    "gibbs_qubit",
    "hermitian_eig",
    "initial_state",
    "integrate",
    "integrate_nonmarkov",
    "kron",
    "l1_coherence",
    "liouvillian_apply",
    "main",
    "mi_profile",
    "mutual_information",
    "nonmarkov_rate",
    "parse_config",
    "partial_trace",
    "rescaled_mi",
    "run",
    "run_collision_sim",
    "run_property_suite",
    "trace_distance",
    "unitary_from_hamiltonian",
    "von_neumann_entropy",
    "write_csv",
]
