"""Continuous-time master equation for the system + accessible register.

The register coupling is the same zz form as the stroboscopic model; the
inaccessible bath enters as a dissipator acting on the system alone.
Three baths are supported:

    dephasing            constant-rate z dephasing
    thermalising         decay/excitation pair with detailed balance
    nonmarkov-dephasing  z dephasing whose rate tan(Jt)/2 changes sign

Integration is fixed-step RK4 on the raw matrix, re-Hermitized after each
step.  The trace is never renormalized; drift beyond 1e-9 aborts the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .collision import SYSTEM_LABEL, accessible_labels
from .metrics import FragmentSelection, MIProfile, mi_profile
from .qcore import (
    DensityMatrix,
    InvariantViolation,
    LOWER,
    RAISE,
    SIGMA_Z,
    TensorSpace,
    all_plus_state,
    embed,
    partial_trace,
    trace_distance,
)

BATHS = ("dephasing", "thermalising", "nonmarkov-dephasing")

TRACE_DRIFT_TOL = 1e-9
# Exclusion window around the poles of tan, in units of calJ * t.
POLE_WINDOW = 1e-3
RATE_CLAMP_FACTOR = 1e3
# Per-substep decay increment 2*(gamma + rate)*dt_sub kept below this.
# RK4 only reaches first order across the rate's sign flip at the pole,
# so the one-off crossing error scales with this increment; 5e-4 leaves
# margin under CROSSCHECK_REL_TOL.
SUBSTEP_DECAY_TARGET = 5e-4
CROSSCHECK_REL_TOL = 1e-3


@dataclass(frozen=True)
class LindbladConfig:
    """Parameters of a continuous run.

    calj is the memory-rate scale of the nonmarkov-dephasing bath; when
    omitted it defaults to j_z.
    """

    n_accessible: int = 1
    j_z: float = 1.0
    bath: str = "dephasing"
    gamma: float = 0.1
    nbar: float = 0.0
    calj: float | None = None
    t_max: float = 10.0
    dt: float = 1e-3

    def __post_init__(self):
        if not 1 <= self.n_accessible <= 4:
            raise ValueError(f"n_accessible must be 1..4, got {self.n_accessible}")
        if self.bath not in BATHS:
            raise ValueError(f"bath must be one of {BATHS}, got {self.bath!r}")
        if not math.isfinite(self.j_z):
            raise ValueError("j_z must be finite")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.nbar < 0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_max < self.dt:
            raise ValueError("t_max must cover at least one step")
        if self.calj is not None and self.calj <= 0:
            raise ValueError(f"calj must be positive, got {self.calj}")
        if self.bath == "nonmarkov-dephasing" and self.cal_j <= 0:
            raise ValueError("nonmarkov-dephasing needs a positive calj (or j_z)")

    @property
    def cal_j(self) -> float:
        return self.j_z if self.calj is None else self.calj

    def space(self) -> TensorSpace:
        return TensorSpace.qubits(SYSTEM_LABEL, *accessible_labels(self.n_accessible))

    def n_steps(self) -> int:
        n = int(round(self.t_max / self.dt))
        if n < 1:
            raise ValueError("t_max/dt rounds to zero steps")
        return n


@dataclass(frozen=True)
class TrajectoryRecord:
    """State and derived scalars at one time on the integration grid."""

    t: float
    rho: DensityMatrix
    system_coherence: complex
    fragment_coherence: complex
    profile: MIProfile


class _Ops:
    """Embedded operators reused across a run."""

    def __init__(self, config: LindbladConfig):
        space = config.space()
        self.space = space
        z_s = embed(SIGMA_Z, SYSTEM_LABEL, space)
        h = np.zeros((space.dim, space.dim), dtype=complex)
        for lab in accessible_labels(config.n_accessible):
            h += z_s @ embed(SIGMA_Z, lab, space)
        self.h = config.j_z * h
        self.z_s = z_s
        # l_up is l_down's adjoint, so l_down @ m @ l_up is the decay term.
        self.l_down = embed(LOWER, SYSTEM_LABEL, space)
        self.l_up = embed(RAISE, SYSTEM_LABEL, space)
        self.ldl = self.l_down.conj().T @ self.l_down
        self.lul = self.l_up.conj().T @ self.l_up


@lru_cache(maxsize=16)
def _ops(config: LindbladConfig) -> _Ops:
    return _Ops(config)


def _clamped_memory_rate(t: float, cal_j: float) -> float:
    """tan(cal_j t)/2 clamped to 1e3 * cal_j in magnitude (pole-safe)."""
    g = 0.5 * math.tan(cal_j * t)
    cap = RATE_CLAMP_FACTOR * cal_j
    return max(-cap, min(cap, g))


def _adaptive_substeps(config: LindbladConfig, t_lo: float, t_hi: float) -> int:
    """Substep count keeping each RK4 substep's decay increment small.

    tan is monotone within a branch, so the peak clamped rate over the
    interval sits at an endpoint unless a pole lies inside, in which
    case it is the cap itself.
    """
    cal_j = config.cal_j
    branch_lo = math.floor((cal_j * t_lo - math.pi / 2.0) / math.pi)
    branch_hi = math.floor((cal_j * t_hi - math.pi / 2.0) / math.pi)
    if branch_lo != branch_hi:
        peak = RATE_CLAMP_FACTOR * cal_j
    else:
        peak = max(
            abs(_clamped_memory_rate(t_lo, cal_j)),
            abs(_clamped_memory_rate(t_hi, cal_j)),
        )
    z = 2.0 * (config.gamma + peak) * (t_hi - t_lo)
    return max(1, math.ceil(z / SUBSTEP_DECAY_TARGET))


def _make_deriv(config: LindbladConfig):
    ops = _ops(config)
    h = ops.h
    gamma = config.gamma
    if config.bath == "dephasing":
        z = ops.z_s

        def deriv(m, t):
            return -1j * (h @ m - m @ h) + gamma * (z @ m @ z - m)

    elif config.bath == "thermalising":
        rate_down = gamma * (config.nbar + 1.0)
        rate_up = gamma * config.nbar
        ld, lu, ldl, lul = ops.l_down, ops.l_up, ops.ldl, ops.lul

        def deriv(m, t):
            out = -1j * (h @ m - m @ h)
            out += rate_down * (ld @ m @ lu - 0.5 * (ldl @ m + m @ ldl))
            out += rate_up * (lu @ m @ ld - 0.5 * (lul @ m + m @ lul))
            return out

    else:  # nonmarkov-dephasing
        z = ops.z_s
        cal_j = config.cal_j

        def deriv(m, t):
            rate = gamma + _clamped_memory_rate(t, cal_j)
            return -1j * (h @ m - m @ h) + rate * (z @ m @ z - m)

    return deriv


def liouvillian_apply(rho: DensityMatrix, config: LindbladConfig, t: float = 0.0) -> np.ndarray:
    """Right-hand side of the master equation at time t.

    Inside the pole exclusion window of the nonmarkov bath the clamped
    rate is used, matching what the integrator does there.
    """
    if rho.space != config.space():
        raise ValueError("state space does not match config")
    return _make_deriv(config)(rho.matrix, t)


def _rk4_step(m: np.ndarray, t: float, dt: float, deriv) -> np.ndarray:
    k1 = deriv(m, t)
    k2 = deriv(m + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = deriv(m + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = deriv(m + dt * k3, t + dt)
    out = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (out + out.conj().T)


def _check_trace(m: np.ndarray, t: float):
    drift = abs(m.trace() - 1.0)
    if drift > TRACE_DRIFT_TOL:
        raise InvariantViolation(f"trace drift {drift:.3e} at t = {t:.6g}")


def _record(config: LindbladConfig, t: float, matrix: np.ndarray,
            selection: FragmentSelection) -> TrajectoryRecord:
    rho = DensityMatrix(config.space(), matrix)
    rho_s = partial_trace(rho, [SYSTEM_LABEL])
    rho_a1 = partial_trace(rho, [selection.labels[0]])
    return TrajectoryRecord(
        t=t,
        rho=rho,
        system_coherence=complex(rho_s.matrix[0, 1]),
        fragment_coherence=complex(rho_a1.matrix[0, 1]),
        profile=mi_profile(rho, SYSTEM_LABEL, selection, step_or_time=t),
    )


def integrate(config: LindbladConfig, record_every: int = 1) -> list[TrajectoryRecord]:
    """Fixed-step RK4 trajectory for the two memoryless baths.

    Starts from |+> everywhere and records every record_every-th grid
    point (t = 0 and the final point always included).
    """
    if config.bath == "nonmarkov-dephasing":
        raise ValueError("use integrate_nonmarkov for the nonmarkov-dephasing bath")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    deriv = _make_deriv(config)
    selection = FragmentSelection(accessible_labels(config.n_accessible))
    m = all_plus_state(config.space()).matrix
    n = config.n_steps()
    records = [_record(config, 0.0, m, selection)]
    for i in range(1, n + 1):
        m = _rk4_step(m, (i - 1) * config.dt, config.dt, deriv)
        _check_trace(m, i * config.dt)
        if i % record_every == 0 or i == n:
            try:
                records.append(_record(config, i * config.dt, m, selection))
            except InvariantViolation as exc:
                raise InvariantViolation(
                    f"state invalid at t = {i * config.dt:.6g}, dt too large: {exc}"
                ) from None
    return records


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def analytic_coherences(config: LindbladConfig, t) -> tuple[complex, complex]:
    """Closed-form (system, fragment) coherences for a single fragment.

    The zz coupling gives the two system pointer sectors opposite phases
    j_z * t, so every coherence oscillates at omega = 2 * j_z; the factor
    of two was pinned by fitting the oscillation of the brute-force
    integrator (see the tests).  The system entries carry unit amplitude
    at t = 0 by convention; comparisons against the integrator normalize
    both sides at t = 0.
    """
    if config.n_accessible != 1:
        raise ValueError("closed forms hold for a single fragment only")
    t = np.asarray(t, dtype=float)
    omega = 2.0 * config.j_z
    gamma = config.gamma
    if config.bath == "dephasing":
        system = np.exp(-2.0 * gamma * t) * np.cos(omega * t) + 0j
        fragment = 0.5 * np.cos(omega * t) + 0j
    elif config.bath == "thermalising":
        nbar = config.nbar
        gamma_n = gamma * (2.0 * nbar + 1.0)
        alpha = np.sqrt(complex(-4.0 * omega * (omega + 1j * gamma) + gamma_n**2))
        system = np.exp(-gamma * (nbar + 0.5) * t) * np.cos(omega * t) + 0j
        if alpha == 0:
            fragment = np.exp(-(gamma + 2.0 * nbar * gamma) * t / 2.0) * (
                0.5 + 0.25 * gamma_n * t
            )
        else:
            fragment = (
                np.exp(-(gamma + 2.0 * nbar * gamma + alpha) * t / 2.0)
                / (4.0 * alpha)
                * ((np.exp(alpha * t) + 1.0) * alpha + gamma_n * (np.exp(alpha * t) - 1.0))
            )
    else:
        raise ValueError("closed forms cover the dephasing and thermalising baths")
    if t.ndim == 0:
        return complex(system), complex(fragment)
    return system, fragment


def nonmarkov_rate(t: float, cal_j: float) -> float:
    """Memory-kernel dephasing rate tan(cal_j t)/2.

    Raises within the pole exclusion window |cal_j t - (pi/2 + k pi)| <
    1e-3, where the rate is not usable directly; the integrator clamps it
    there instead.
    """
    if cal_j <= 0:
        raise ValueError(f"cal_j must be positive, got {cal_j}")
    distance = abs(math.remainder(cal_j * t - math.pi / 2.0, math.pi))
    if distance < POLE_WINDOW:
        raise ValueError(
            f"cal_j * t = {cal_j * t:.6g} is inside the pole exclusion window"
        )
    return 0.5 * math.tan(cal_j * t)


def dephasing_factor_nm(t, gamma: float, cal_j: float):
    """Coherence envelope exp(-2 gamma t) |cos(cal_j t)|^(1/cal_j).

    This is exp(-2 integral of (rate + gamma)) with the principal-value
    continuation across the rate poles; it touches zero at the poles and
    recovers fully by cal_j t = pi when gamma = 0.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if cal_j <= 0:
        raise ValueError(f"cal_j must be positive, got {cal_j}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    out = np.exp(-2.0 * gamma * t) * np.abs(np.cos(cal_j * t)) ** (1.0 / cal_j)
    return float(out) if out.ndim == 0 else out


class _SectorStructure:
    """Energy gaps and the system-coherence mask of the zz register coupling.

    Both the register coupling and the z dephasing are diagonal in the
    pointer basis, so the flow is elementwise: populations frozen, each
    coherence rotating at its energy gap, the system-offdiagonal sectors
    additionally multiplied by the dephasing envelope.
    """

    def __init__(self, config: LindbladConfig):
        energies = np.real(np.diag(_ops(config).h))
        self.gaps = energies[:, None] - energies[None, :]
        n_frag = config.n_accessible
        s_bit = (np.arange(config.space().dim) >> n_frag) & 1
        self.s_mask = s_bit[:, None] != s_bit[None, :]


@lru_cache(maxsize=16)
def _sectors(config: LindbladConfig) -> _SectorStructure:
    return _SectorStructure(config)


def _closed_form_state(config: LindbladConfig, rho0: np.ndarray, t: float) -> np.ndarray:
    struct = _sectors(config)
    factor = dephasing_factor_nm(t, config.gamma, config.cal_j)
    scale = np.where(struct.s_mask, factor, 1.0)
    return rho0 * np.exp(-1j * struct.gaps * t) * scale


def _outside_pole_window(t: float, cal_j: float, margin: float = 2.0) -> bool:
    distance = abs(math.remainder(cal_j * t - math.pi / 2.0, math.pi))
    return distance >= margin * POLE_WINDOW


def integrate_nonmarkov(config: LindbladConfig, record_every: int = 1) -> list[TrajectoryRecord]:
    """Trajectory under the sign-changing dephasing rate.

    The elementwise closed form is exact here (everything commutes), so it
    is the source of truth for the records.  A clamped-rate RK4 path runs
    alongside as a redundancy check and must agree to 1e-3 (relative,
    max-norm) at every recorded time outside the pole windows.
    """
    if config.bath != "nonmarkov-dephasing":
        raise ValueError("integrate_nonmarkov needs bath = nonmarkov-dephasing")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    deriv = _make_deriv(config)
    selection = FragmentSelection(accessible_labels(config.n_accessible))
    rho0 = all_plus_state(config.space()).matrix
    n = config.n_steps()
    m = rho0.copy()
    records = [_record(config, 0.0, rho0, selection)]
    for i in range(1, n + 1):
        t_lo = (i - 1) * config.dt
        substeps = _adaptive_substeps(config, t_lo, t_lo + config.dt)
        dt_sub = config.dt / substeps
        for j in range(substeps):
            m = _rk4_step(m, t_lo + j * dt_sub, dt_sub, deriv)
        t = i * config.dt
        _check_trace(m, t)
        if i % record_every == 0 or i == n:
            exact = _closed_form_state(config, rho0, t)
            if _outside_pole_window(t, config.cal_j):
                gap = np.max(np.abs(m - exact)) / np.max(np.abs(exact))
                if gap > CROSSCHECK_REL_TOL:
                    raise InvariantViolation(
                        f"clamped-rate path diverged from the closed form by "
                        f"{gap:.3e} at t = {t:.6g} (pole window too wide?)"
                    )
            records.append(_record(config, t, exact, selection))
    return records


def blp_witness(
    config: LindbladConfig,
    initial_pair: tuple[DensityMatrix, DensityMatrix],
    record_every: int = 1,
) -> list[tuple[float, float]]:
    """Trace distance between two evolving states on the config's grid.

    Any strictly increasing stretch (beyond numerical noise) witnesses
    information flowing back from the inaccessible bath.
    """
    a, b = initial_pair
    space = config.space()
    if a.space != space or b.space != space:
        raise ValueError("both initial states must live on the config space")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    n = config.n_steps()
    out = [(0.0, trace_distance(a, b))]
    if config.bath == "nonmarkov-dephasing":
        for i in range(record_every, n + 1, record_every):
            t = i * config.dt
            da = DensityMatrix(space, _closed_form_state(config, a.matrix, t))
            db = DensityMatrix(space, _closed_form_state(config, b.matrix, t))
            out.append((t, trace_distance(da, db)))
        if n % record_every:
            t = n * config.dt
            da = DensityMatrix(space, _closed_form_state(config, a.matrix, t))
            db = DensityMatrix(space, _closed_form_state(config, b.matrix, t))
            out.append((t, trace_distance(da, db)))
        return out
    deriv = _make_deriv(config)
    ma, mb = a.matrix.copy(), b.matrix.copy()
    for i in range(1, n + 1):
        t_prev = (i - 1) * config.dt
        ma = _rk4_step(ma, t_prev, config.dt, deriv)
        mb = _rk4_step(mb, t_prev, config.dt, deriv)
        if i % record_every == 0 or i == n:
            t = i * config.dt
            out.append(
                (t, trace_distance(DensityMatrix(space, ma), DensityMatrix(space, mb)))
            )
    return out
