"""Dense linear algebra for small labelled qubit registers.

Everything here works on explicit complex matrices.  Registers are kept
small on purpose (a handful of qubits), so eigendecompositions and full
Kronecker products are always affordable and no sparse or symbolic
machinery is needed.

Conventions:
    * Tensor factors are ordered left to right; the leftmost label is the
      slowest (most significant) index of the flattened matrix.
    * Entropies are in bits (log base 2) and 0 * log(0) is taken as 0.
    * sigma_z |0> = +|0>, sigma_z |1> = -|1>.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

# Pauli matrices and friends, used throughout the package.
ID2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# |0><1| lowers toward the |0> ground state used by gibbs_qubit.
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)
RAISE = LOWER.conj().T
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIG_FLOOR = -1e-10


class InvariantViolation(ValueError):
    """A state or operator failed one of the hard numerical invariants."""


@dataclass(frozen=True)
class TensorSpace:
    """An ordered list of labelled tensor factors.

    The label order fixes the Kronecker ordering of every matrix that
    lives on the space.  Intended for total dimensions up to a few dozen;
    nothing here scales past that.
    """

    labels: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.dims):
            raise ValueError("labels and dims must have equal length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")
        if any(d < 1 for d in self.dims):
            raise ValueError("every factor dimension must be positive")

    @classmethod
    def qubits(cls, *labels: str) -> "TensorSpace":
        return cls(tuple(labels), (2,) * len(labels))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown label {label!r}, have {self.labels}") from None

    def subspace(self, keep: Iterable[str]) -> "TensorSpace":
        """Sub-register of `keep`, preserving the original label order."""
        keep = set(keep)
        missing = keep - set(self.labels)
        if missing:
            raise ValueError(f"unknown labels {sorted(missing)}, have {self.labels}")
        idx = [i for i, lab in enumerate(self.labels) if lab in keep]
        return TensorSpace(
            tuple(self.labels[i] for i in idx), tuple(self.dims[i] for i in idx)
        )

    def extend(self, label: str, dim: int = 2) -> "TensorSpace":
        """New space with one more factor appended on the right."""
        return TensorSpace(self.labels + (label,), self.dims + (dim,))


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density matrix attached to a TensorSpace.

    Construction enforces unit trace (within 1e-12), Hermiticity (within
    1e-12) and spectrum bounded below by -1e-10.  Code that produces
    intermediate non-states (integrator stages, operator differences)
    should work on raw arrays and only wrap results that must be states.
    """

    space: TensorSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        d = self.space.dim
        if m.shape != (d, d):
            raise InvariantViolation(f"matrix shape {m.shape} != space dim {d}")
        if abs(m.trace() - 1.0) > TRACE_TOL:
            raise InvariantViolation(f"trace {m.trace():.16g} deviates from 1")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise InvariantViolation("matrix is not Hermitian within 1e-12")
        low = float(np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))))
        if low < EIG_FLOOR:
            raise InvariantViolation(f"negative eigenvalue {low:.3e} below floor")

    @classmethod
    def from_ket(cls, ket: np.ndarray, space: TensorSpace) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(ket)
        if nrm == 0:
            raise ValueError("zero vector is not a state")
        ket = ket / nrm
        return cls(space, np.outer(ket, ket.conj()))


def all_plus_state(space: TensorSpace) -> DensityMatrix:
    """|+>^n on an all-qubit space."""
    if any(d != 2 for d in space.dims):
        raise ValueError("all_plus_state needs qubit factors")
    ket = reduce(np.kron, [KET_PLUS] * len(space.labels))
    return DensityMatrix.from_ket(ket, space)


# ---------------------------------------------------------------------------
# operator construction
# ---------------------------------------------------------------------------

def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product; leftmost argument is the slowest index."""
    if not ops:
        raise ValueError("kron needs at least one operator")
    return reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def embed(op: np.ndarray, target: str, space: TensorSpace) -> np.ndarray:
    """Lift a single-factor operator to the full space (identity elsewhere)."""
    op = np.asarray(op, dtype=complex)
    ax = space.axis(target)
    if op.shape != (space.dims[ax], space.dims[ax]):
        raise ValueError(f"operator shape {op.shape} does not fit factor {target!r}")
    factors = [np.eye(d, dtype=complex) for d in space.dims]
    factors[ax] = op
    return kron(*factors)


def hermitian_eig(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvectors as columns) and checks the
    spectral reconstruction to 1e-10.
    """
    h = np.asarray(h, dtype=complex)
    if np.max(np.abs(h - h.conj().T)) > 1e-10:
        raise InvariantViolation("hermitian_eig got a non-Hermitian matrix")
    w, v = np.linalg.eigh(h)
    recon = (v * w) @ v.conj().T
    if np.max(np.abs(recon - h)) > 1e-10 * max(1.0, np.max(np.abs(h))):
        raise InvariantViolation("spectral reconstruction failed")
    return w, v


def unitary_from_hamiltonian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) via the spectral decomposition of the Hermitian h."""
    w, v = hermitian_eig(h)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    defect = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
    if defect > 1e-12:
        raise InvariantViolation(f"unitarity defect {defect:.3e} after exponentiation")
    return u


# ---------------------------------------------------------------------------
# state operations
# ---------------------------------------------------------------------------

_AXIS_CHARS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Trace out every factor not in `keep`; kept labels retain their order."""
    space = rho.space
    sub = space.subspace(keep)
    if sub.labels == space.labels:
        return rho
    n = len(space.labels)
    keep_idx = [space.axis(lab) for lab in sub.labels]
    tensor = rho.matrix.reshape(space.dims + space.dims)
    in_idx = list(range(2 * n))
    for i in range(n):
        if i not in keep_idx:
            in_idx[n + i] = i
    out_idx = keep_idx + [n + i for i in keep_idx]
    expr = (
        "".join(_AXIS_CHARS[i] for i in in_idx)
        + "->"
        + "".join(_AXIS_CHARS[i] for i in out_idx)
    )
    reduced = np.einsum(expr, tensor).reshape(sub.dim, sub.dim)
    return DensityMatrix(sub, reduced)


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def von_neumann_entropy(rho) -> float:
    """Entropy in bits.  Eigenvalues in [-1e-10, 0) are clamped to zero."""
    m = _as_matrix(rho)
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if np.min(w) < EIG_FLOOR:
        raise InvariantViolation(f"eigenvalue {np.min(w):.3e} below clamp floor")
    w = np.clip(w, 0.0, None)
    nz = w[w > 0.0]
    # + 0.0 turns the pure-state result -0.0 into a plain 0.0
    return float(-np.sum(nz * np.log2(nz))) + 0.0


def l1_coherence(rho) -> float:
    """Sum of |rho_ij| over off-diagonal entries (i != j) only."""
    m = _as_matrix(rho)
    a = np.abs(m)
    return float(np.sum(a) - np.sum(np.diag(a)))


def gibbs_qubit(beta: float, label: str = "E") -> DensityMatrix:
    """Thermal qubit diag((1 + tanh(beta))/2, (1 - tanh(beta))/2).

    beta = 0 gives the maximally mixed state; beta -> inf pins the qubit
    to |0>, the same ground state the thermal dissipators relax toward.
    """
    p = 0.5 * (1.0 + np.tanh(beta))
    return DensityMatrix(
        TensorSpace.qubits(label), np.diag([p, 1.0 - p]).astype(complex)
    )


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2) * sum |eig(a - b)| for states on the same space."""
    if a.space != b.space:
        raise ValueError("trace_distance needs states on the same space")
    w = np.linalg.eigvalsh(a.matrix - b.matrix)
    return float(0.5 * np.sum(np.abs(w)))
