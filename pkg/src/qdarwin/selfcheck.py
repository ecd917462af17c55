"""Randomized property suite over the quantum-core primitives.

Backs the CLI --check flag and the bulk-invariant acceptance test.  Each
round draws random states on 2..4 qubits and counts eight independent
checks: spectral reconstruction, eigenvalue ordering, unitarity, partial
trace composition, state validity after tracing, entropy invariance,
entropy range, and mutual-information symmetry/positivity.  Tolerances
are the ones the core enforces, not fresh numbers.
"""

from __future__ import annotations

import numpy as np

from .metrics import mutual_information
from .qcore import (
    DensityMatrix,
    HERMITICITY_TOL,
    TRACE_TOL,
    TensorSpace,
    hermitian_eig,
    partial_trace,
    unitary_from_hamiltonian,
    von_neumann_entropy,
)

DEFAULT_ROUNDS = 150
DEFAULT_SEED = 20240817
CHECKS_PER_ROUND = 8
_RECON_TOL = 1e-10
_ENTROPY_TOL = 1e-9


def _random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    if rng.random() < 0.25:
        ket = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        ket /= np.linalg.norm(ket)
        m = np.outer(ket, ket.conj())
    else:
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        m = g @ g.conj().T
        m /= np.trace(m).real
    return 0.5 * (m + m.conj().T)


def _random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + g.conj().T)


def run_property_suite(
    rounds: int = DEFAULT_ROUNDS, seed: int = DEFAULT_SEED
) -> tuple[int, list[str]]:
    """Run ``rounds`` randomized rounds; return (checks run, failure messages)."""
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    checks = 0

    def record(ok: bool, label: str, round_no: int) -> None:
        nonlocal checks
        checks += 1
        if not ok:
            failures.append(f"round {round_no}: {label}")

    for r in range(rounds):
        n_qubits = int(rng.integers(2, 5))
        labels = tuple(f"Q{i}" for i in range(n_qubits))
        space = TensorSpace.qubits(*labels)
        dim = space.dim
        rho = DensityMatrix(space, _random_density(rng, dim))

        # 1-2: spectral decomposition reconstructs and sorts.
        h = _random_hermitian(rng, dim)
        w, v = hermitian_eig(h)
        recon = (v * w) @ v.conj().T
        scale = max(1.0, float(np.max(np.abs(h))))
        record(np.max(np.abs(recon - h)) <= _RECON_TOL * scale, "eig reconstruction", r)
        record(bool(np.all(np.diff(w) >= -_RECON_TOL)), "eig ordering", r)

        # 3: generated unitaries stay unitary.
        u = unitary_from_hamiltonian(h, float(rng.uniform(0.0, 5.0)))
        defect = np.max(np.abs(u @ u.conj().T - np.eye(dim)))
        record(defect <= HERMITICITY_TOL, "unitarity", r)

        # 4: tracing out in two hops equals one hop.
        keep_small = tuple(sorted(rng.choice(n_qubits, size=1, replace=False)))
        extra = [i for i in range(n_qubits) if i not in keep_small]
        rng.shuffle(extra)
        mid_idx = sorted(set(keep_small) | set(extra[: max(0, n_qubits - 2)]))
        small = tuple(labels[i] for i in keep_small)
        mid = tuple(labels[i] for i in mid_idx)
        direct = partial_trace(rho, small)
        via_mid = partial_trace(partial_trace(rho, mid), small)
        record(
            np.max(np.abs(direct.matrix - via_mid.matrix)) <= TRACE_TOL * 10,
            "partial trace composition",
            r,
        )

        # 5: the reduced state is still a state at core tolerances.
        red = direct.matrix
        trace_ok = abs(np.trace(red).real - 1.0) <= TRACE_TOL
        herm_ok = np.max(np.abs(red - red.conj().T)) <= HERMITICITY_TOL
        record(trace_ok and herm_ok, "reduced state validity", r)

        # 6: entropy is basis independent.
        u_rho = DensityMatrix(space, u @ rho.matrix @ u.conj().T)
        s0 = von_neumann_entropy(rho)
        s1 = von_neumann_entropy(u_rho)
        record(abs(s0 - s1) <= _ENTROPY_TOL, "entropy unitary invariance", r)

        # 7: entropy lands in [0, log2 dim].
        record(-_ENTROPY_TOL <= s0 <= n_qubits + _ENTROPY_TOL, "entropy range", r)

        # 8: mutual information is symmetric and nonnegative.
        part_a = (labels[0],)
        part_b = (labels[-1],)
        mi_ab = mutual_information(rho, part_a, part_b)
        mi_ba = mutual_information(rho, part_b, part_a)
        record(
            mi_ab >= 0.0 and abs(mi_ab - mi_ba) <= _ENTROPY_TOL,
            "mutual information symmetry",
            r,
        )

    return checks, failures
