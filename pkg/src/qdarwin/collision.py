"""Stroboscopic collision dynamics with one accessible register and a
stream of single-use thermal qubits.

Each round: couple the system to every accessible qubit (zz), then to a
fresh thermal unit, then discard the unit.  The unit interaction either
commutes with the register coupling (dephasing, zz) or does not
(thermalising, xx + yy); that single property decides whether the register
keeps its record of the system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .metrics import FragmentSelection, MIProfile, mi_profile
from .qcore import (
    DensityMatrix,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    TensorSpace,
    all_plus_state,
    embed,
    gibbs_qubit,
    kron,
    partial_trace,
    unitary_from_hamiltonian,
)

# Reference couplings: register coupling per round and unit coupling per
# round, both as dimensionless angles.
DEFAULT_J_SA_TAU1 = 0.0075 * math.pi / 4
DEFAULT_J_SE_TAU2 = 0.015 * math.pi / 2

INTERACTIONS = ("dephasing", "thermalising")

SYSTEM_LABEL = "S"
UNIT_LABEL = "E"


def accessible_labels(n: int) -> tuple[str, ...]:
    return tuple(f"A{i}" for i in range(1, n + 1))


@dataclass(frozen=True)
class CollisionConfig:
    """Parameters of a stroboscopic run.

    j_sa_tau1 and j_se_tau2 are the per-round coupling angles (coupling
    rate times stage duration).  beta sets the unit temperature; beta = 0
    is maximally mixed.
    """

    n_accessible: int = 3
    j_sa_tau1: float = DEFAULT_J_SA_TAU1
    j_se_tau2: float = DEFAULT_J_SE_TAU2
    beta: float = 0.0
    interaction: str = "dephasing"
    steps: int = 2000
    include_free_evolution: bool = False

    def __post_init__(self):
        if not 1 <= self.n_accessible <= 4:
            raise ValueError(f"n_accessible must be 1..4, got {self.n_accessible}")
        if self.interaction not in INTERACTIONS:
            raise ValueError(
                f"interaction must be one of {INTERACTIONS}, got {self.interaction!r}"
            )
        if self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        for name in ("j_sa_tau1", "j_se_tau2", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def space(self) -> TensorSpace:
        return TensorSpace.qubits(SYSTEM_LABEL, *accessible_labels(self.n_accessible))


@dataclass(frozen=True)
class StroboscopicState:
    """Register state after a given number of completed collisions."""

    step: int
    rho: DensityMatrix


def build_hsa(config: CollisionConfig) -> np.ndarray:
    """zz coupling of the system to every accessible qubit, as one matrix."""
    space = config.space()
    z_s = embed(SIGMA_Z, SYSTEM_LABEL, space)
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for lab in accessible_labels(config.n_accessible):
        h += z_s @ embed(SIGMA_Z, lab, space)
    return config.j_sa_tau1 * h


def build_hse(interaction: str, j_se_tau2: float) -> np.ndarray:
    """System-unit pair Hamiltonian on the two-qubit (system, unit) space."""
    if interaction == "dephasing":
        return j_se_tau2 * kron(SIGMA_Z, SIGMA_Z)
    if interaction == "thermalising":
        return j_se_tau2 * (kron(SIGMA_X, SIGMA_X) + kron(SIGMA_Y, SIGMA_Y))
    raise ValueError(f"interaction must be one of {INTERACTIONS}, got {interaction!r}")


def _lift_pair(op: np.ndarray, label_a: str, label_b: str, space: TensorSpace) -> np.ndarray:
    """Lift a two-factor operator acting on (label_a, label_b) to the space."""
    rest = [lab for lab in space.labels if lab not in (label_a, label_b)]
    ordered = [label_a, label_b] + rest
    dims_ordered = [space.dims[space.axis(lab)] for lab in ordered]
    rest_dim = int(np.prod(dims_ordered[2:])) if rest else 1
    big = np.kron(op, np.eye(rest_dim, dtype=complex))
    n = len(space.labels)
    perm = [ordered.index(lab) for lab in space.labels]
    tensor = big.reshape(dims_ordered + dims_ordered)
    tensor = tensor.transpose(perm + [n + p for p in perm])
    return tensor.reshape(space.dim, space.dim)


@lru_cache(maxsize=16)
def _round_operator(config: CollisionConfig) -> tuple[TensorSpace, np.ndarray]:
    """Unitary of one full round on the register + fresh unit space."""
    full = config.space().extend(UNIT_LABEL)
    u_sa = kron(unitary_from_hamiltonian(build_hsa(config), 1.0), np.eye(2, dtype=complex))
    u_se_pair = unitary_from_hamiltonian(build_hse(config.interaction, config.j_se_tau2), 1.0)
    u = _lift_pair(u_se_pair, SYSTEM_LABEL, UNIT_LABEL, full) @ u_sa
    if config.include_free_evolution:
        # Free system phase over the round, with the splitting as the rate
        # unit; a local z phase, so recorded observables cannot change.
        angle = config.j_sa_tau1 + config.j_se_tau2
        u_free = unitary_from_hamiltonian(embed(SIGMA_Z, SYSTEM_LABEL, full), angle)
        u = u_free @ u
    return full, u


def collision_step(state: StroboscopicState, config: CollisionConfig) -> StroboscopicState:
    """One round: attach a fresh unit, evolve, discard the unit."""
    space = config.space()
    if state.rho.space != space:
        raise ValueError(
            f"state lives on {state.rho.space.labels}, config wants {space.labels}"
        )
    full, u = _round_operator(config)
    rho_full = np.kron(state.rho.matrix, gibbs_qubit(config.beta, UNIT_LABEL).matrix)
    rho_full = u @ rho_full @ u.conj().T
    rho_next = partial_trace(DensityMatrix(full, rho_full), space.labels)
    return StroboscopicState(state.step + 1, rho_next)


def initial_state(config: CollisionConfig) -> StroboscopicState:
    """Everything in |+>: system and register all start fully coherent."""
    return StroboscopicState(0, all_plus_state(config.space()))


def run_collision_sim(
    config: CollisionConfig,
    policy: str = "all-subsets-average",
    record_every: int = 1,
) -> list[MIProfile]:
    """Run the configured number of rounds and profile after each recorded one.

    The profile of round n carries step_or_time = n (1-based collision
    count).  record_every thins the records; the final round is always
    recorded.
    """
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    selection = FragmentSelection(accessible_labels(config.n_accessible), policy)
    state = initial_state(config)
    profiles: list[MIProfile] = []
    for _ in range(config.steps):
        state = collision_step(state, config)
        if state.step % record_every == 0 or state.step == config.steps:
            profiles.append(
                mi_profile(state.rho, SYSTEM_LABEL, selection, step_or_time=state.step)
            )
    return profiles
