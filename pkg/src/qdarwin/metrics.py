"""Mutual-information profiles over growing environment fragments.

The central observable: how much a fragment of the accessible environment
knows about the system, as a function of fragment size.  A flat stretch at
one system entropy (the redundancy plateau) is the signature that pointer
information has proliferated; the rise toward twice the system entropy at
full fragment size survives only while the global state stays pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from .qcore import (
    DensityMatrix,
    l1_coherence,
    partial_trace,
    von_neumann_entropy,
)

MI_ROUNDOFF_FLOOR = -1e-10
ENTROPY_DENOM_TOL = 1e-12

_POLICIES = ("all-subsets-average", "first-k")


@dataclass(frozen=True)
class FragmentSelection:
    """Which accessible qubits count as fragments, and how sizes are sampled.

    policy "all-subsets-average" averages the mutual information over every
    size-k subset; "first-k" uses the single subset of the first k labels.
    For permutation-symmetric states the two agree.
    """

    labels: tuple[str, ...]
    policy: str = "all-subsets-average"

    def __post_init__(self):
        if not self.labels:
            raise ValueError("need at least one fragment label")
        if self.policy not in _POLICIES:
            raise ValueError(f"policy must be one of {_POLICIES}, got {self.policy!r}")

    def subsets(self, k: int) -> tuple[tuple[str, ...], ...]:
        if not 1 <= k <= len(self.labels):
            raise ValueError(f"fragment size {k} out of range")
        if self.policy == "first-k":
            return (self.labels[:k],)
        return tuple(combinations(self.labels, k))


@dataclass(frozen=True)
class MIProfile:
    """Fragment-size scan of one state.

    step_or_time is the collision index or the physical time of the record.
    mi_rescaled entries are NaN where the system entropy is too small for
    the ratio to mean anything (a pure system, e.g. the initial state).
    """

    step_or_time: float
    ks: tuple[int, ...]
    fractions: tuple[float, ...]
    mi_bits: tuple[float, ...]
    mi_rescaled: tuple[float, ...]
    entropy_s_bits: float
    coherence_s: float
    coherence_a1: float


def mutual_information(rho: DensityMatrix, part_a: Iterable[str], part_b: Iterable[str]) -> float:
    """I(A:B) = H(A) + H(B) - H(AB) in bits.

    Tiny negative round-off (above -1e-10) is clamped to zero.
    """
    a = tuple(part_a)
    b = tuple(part_b)
    overlap = set(a) & set(b)
    if overlap:
        raise ValueError(f"parts overlap on {sorted(overlap)}")
    if not a or not b:
        raise ValueError("both parts must be non-empty")
    h_a = von_neumann_entropy(partial_trace(rho, a))
    h_b = von_neumann_entropy(partial_trace(rho, b))
    h_ab = von_neumann_entropy(partial_trace(rho, a + b))
    mi = h_a + h_b - h_ab
    if MI_ROUNDOFF_FLOOR <= mi < 0.0:
        return 0.0
    return mi


def rescaled_mi(mi_bits: float, entropy_s_bits: float) -> float:
    """Mutual information in units of the system entropy."""
    if entropy_s_bits <= ENTROPY_DENOM_TOL:
        raise ValueError(
            f"system entropy {entropy_s_bits:.3e} too small to rescale by; "
            "skip this record (pure system state)"
        )
    return mi_bits / entropy_s_bits


def mi_profile(
    rho: DensityMatrix,
    system: str,
    selection: FragmentSelection,
    step_or_time: float = 0.0,
) -> MIProfile:
    """Scan fragment sizes k = 1..N and collect the profile of one state."""
    if system in selection.labels:
        raise ValueError(f"system label {system!r} cannot be a fragment")
    n = len(selection.labels)
    h_s = von_neumann_entropy(partial_trace(rho, [system]))
    ks, fractions, mi_bits, mi_resc = [], [], [], []
    for k in range(1, n + 1):
        vals = [mutual_information(rho, (system,), sub) for sub in selection.subsets(k)]
        mean_mi = sum(vals) / len(vals)
        ks.append(k)
        fractions.append(k / n)
        mi_bits.append(mean_mi)
        if h_s > ENTROPY_DENOM_TOL:
            mi_resc.append(rescaled_mi(mean_mi, h_s))
        else:
            mi_resc.append(math.nan)
    return MIProfile(
        step_or_time=float(step_or_time),
        ks=tuple(ks),
        fractions=tuple(fractions),
        mi_bits=tuple(mi_bits),
        mi_rescaled=tuple(mi_resc),
        entropy_s_bits=h_s,
        coherence_s=l1_coherence(partial_trace(rho, [system])),
        coherence_a1=l1_coherence(partial_trace(rho, [selection.labels[0]])),
    )
