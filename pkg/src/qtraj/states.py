"""Density-matrix value types and the deterministic geodesic collapse flow.

During a projective measurement the density matrix is dragged toward one of
the measurement eigenstates.  Everything observable about that motion lives
in the diagonal weights ``d_j = Tr(P_j rho P_j)``: the off-diagonal blocks
are slaved to the diagonal through a square-root ratio with frozen phases,
so pure states stay pure along every trajectory.  For a qubit the whole
trajectory collapses onto one unbounded coordinate ``z`` with
``tanh(z) = rho00 - rho11``, which is the coordinate the stochastic engines
in this package actually step.

The measurement basis is the computational basis throughout; a projector is
identified by its basis index, never materialized as a matrix.  All types
are immutable values and all functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Clamp for |z|: tanh(40) is indistinguishable from 1 at double precision.
Z_MAX = 40.0

#: States within this distance of a fixed point are snapped onto it.
ABSORB_EPS = 1e-9

#: Positivity slack for validating |rho01|^2 <= rho00*rho11 under rounding.
_PSD_TOL = 1e-12


def _sech(z: float | np.ndarray):
    """Overflow-safe sech: 2 e^{-|z|} / (1 + e^{-2|z|})."""
    a = np.abs(z)
    e = np.exp(-a)
    return 2.0 * e / (1.0 + e * e)


@dataclass(frozen=True)
class QubitState:
    """One trajectory state of a qubit under measurement.

    Only ``rho00`` and the complex ``rho01`` are stored; ``rho11 = 1 - rho00``
    and ``rho10 = conj(rho01)`` are implied, so the trace is exactly one by
    construction.

    Parameters
    ----------
    rho00 : float
        Population of eigenstate 0, in [0, 1].
    rho01 : complex, optional
        Coherence between the eigenstates.  Must satisfy
        ``|rho01|^2 <= rho00 * (1 - rho00)`` (positivity), with equality for
        pure states.
    """

    rho00: float
    rho01: complex = 0j

    def __post_init__(self) -> None:
        if not (0.0 <= self.rho00 <= 1.0):
            raise ValueError(f"rho00 must lie in [0, 1], got {self.rho00}")
        bound = self.rho00 * (1.0 - self.rho00)
        if abs(self.rho01) ** 2 > bound + _PSD_TOL:
            raise ValueError(
                "state not positive semidefinite: |rho01|^2 = "
                f"{abs(self.rho01)**2:.3e} exceeds rho00*rho11 = {bound:.3e}"
            )

    @property
    def rho11(self) -> float:
        return 1.0 - self.rho00

    @property
    def at_fixed_point(self) -> bool:
        """True once either population is within ``ABSORB_EPS`` of 1."""
        return self.rho00 <= ABSORB_EPS or self.rho00 >= 1.0 - ABSORB_EPS

    def matrix(self) -> np.ndarray:
        """The full 2x2 density matrix as a complex array."""
        return np.array(
            [[self.rho00, self.rho01], [np.conj(self.rho01), self.rho11]],
            dtype=complex,
        )


def pure_state(rho00: float, phase: float = 0.0) -> QubitState:
    """Pure state with population ``rho00`` and coherence phase ``phase``."""
    amp = math.sqrt(max(rho00 * (1.0 - rho00), 0.0))
    return QubitState(rho00, amp * complex(math.cos(phase), math.sin(phase)))


@dataclass(frozen=True)
class ZCoordinate:
    """Unbounded collapse coordinate with ``tanh(z) = rho00 - rho11``.

    The pair ``(rho01_init, sech_z_init)`` is the reference needed to
    reconstruct the coherence at any later time:
    ``rho01(t) = rho01_init * sech(z(t)) / sech_z_init``.
    """

    z: float
    rho01_init: complex = 0j
    sech_z_init: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.z):
            raise ValueError("z must be finite")
        if not (0.0 < self.sech_z_init <= 1.0):
            raise ValueError("sech of the reference z must lie in (0, 1]")

    def with_z(self, z: float) -> "ZCoordinate":
        """Same trajectory references, new position."""
        return ZCoordinate(z, self.rho01_init, self.sech_z_init)


def to_z(state: QubitState) -> ZCoordinate:
    """Map a qubit state to its collapse coordinate.

    Raises
    ------
    ValueError
        If the state sits exactly at a fixed point (``rho00`` is 0 or 1),
        where z is infinite.  Away from the fixed points |z| is clamped at
        ``Z_MAX``, beyond which double precision cannot tell the state from
        the eigenstate anyway.
    """
    if state.rho00 in (0.0, 1.0):
        raise ValueError("at fixed point, z infinite")
    z = math.atanh(2.0 * state.rho00 - 1.0)
    z = max(-Z_MAX, min(Z_MAX, z))
    return ZCoordinate(z, state.rho01, float(_sech(z)))


def from_z(zc: ZCoordinate) -> QubitState:
    """Reconstruct the qubit state, coherence phase frozen.

    ``rho00 = (1 + tanh z)/2`` and the coherence magnitude is rescaled by
    ``sech(z)/sech(z_init)``, which keeps pure states exactly pure.
    """
    rho00 = 0.5 * (1.0 + math.tanh(zc.z))
    rho01 = zc.rho01_init * (_sech(zc.z) / zc.sech_z_init)
    return QubitState(rho00, complex(rho01))


@dataclass(frozen=True)
class DiagonalWeights:
    """The n populations ``d_j = Tr(P_j rho P_j)`` of an n-level system."""

    d: np.ndarray = field(repr=True)

    def __post_init__(self) -> None:
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 1 or d.size < 2:
            raise ValueError("d must be a 1-d vector with at least 2 entries")
        if np.any(d < -_PSD_TOL):
            raise ValueError(f"populations must be nonnegative, got {d}")
        if abs(d.sum() - 1.0) > 1e-9:
            raise ValueError(f"populations must sum to 1, got sum {d.sum()!r}")
        d = np.where(d < 0.0, 0.0, d)
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.size


@dataclass(frozen=True)
class TrajectoryWeights:
    """Evolution-trajectory weights ``w_i``.

    They sum to one but individual entries may be negative: these are weights
    of the instantaneous evolution direction, not probabilities.
    """

    w: np.ndarray = field(repr=True)

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("w must be a 1-d vector with at least 2 entries")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got sum {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.w.size


def geodesic_rhs(d: DiagonalWeights, target: int, g: float) -> np.ndarray:
    """Population time-derivative for collapse toward one eigenstate.

    ``d(d_j)/dt = 2 g d_j (delta_{j,target} - d_target)``: attraction of the
    whole distribution toward the target eigenstate at coupling ``g``.  The
    entries always sum to zero (trace preservation) and every eigenstate
    ``d = e_i`` is a fixed point.

    Raises
    ------
    ValueError
        If ``target`` is not a valid eigenstate index ("unknown eigenstate").
    """
    if g <= 0.0:
        raise ValueError(f"coupling g must be positive, got {g}")
    if not (0 <= target < d.n):
        raise ValueError(f"unknown eigenstate index {target} for n={d.n}")
    delta = np.zeros(d.n)
    delta[target] = 1.0
    return 2.0 * g * d.d * (delta - d.d[target])


def weighted_geodesic_rhs(
    d: DiagonalWeights, w: TrajectoryWeights, g: float
) -> np.ndarray:
    """Population derivative ``d(d_j)/dt = 2 g d_j (w_j - sum_i w_i d_i)``.

    Equal weights carry no information about the state and give a zero
    derivative; components with ``w_j`` above the average ``sum_i w_i d_i``
    grow, those below shrink, and exact zeros stay zero.
    """
    if g <= 0.0:
        raise ValueError(f"coupling g must be positive, got {g}")
    if d.n != w.n:
        raise ValueError(f"dimension mismatch: d has n={d.n}, w has n={w.n}")
    w_av = float(w.w @ d.d)
    return 2.0 * g * d.d * (w.w - w_av)


def offdiag_evolve(
    initial: np.ndarray, d_t: DiagonalWeights, d_0: DiagonalWeights
) -> np.ndarray:
    """Evolved density matrix with off-diagonals slaved to the populations.

    Given the full initial matrix and the populations at times 0 and t,
    returns the matrix at t: diagonal replaced by ``d_t`` and every
    off-diagonal entry rescaled by
    ``sqrt(d_j(t) d_k(t) / (d_j(0) d_k(0)))`` with its phase untouched.

    Raises
    ------
    ValueError
        If some ``d_j(0)`` is zero while row/column j carries a nonzero
        initial off-diagonal (the ratio is then undefined), or on shape
        mismatch.
    """
    rho0 = np.asarray(initial, dtype=complex)
    n = d_t.n
    if rho0.shape != (n, n) or d_0.n != n:
        raise ValueError(
            f"dimension mismatch: matrix {rho0.shape}, d_t n={n}, d_0 n={d_0.n}"
        )
    offmask = ~np.eye(n, dtype=bool)
    dead = d_0.d == 0.0
    bad = (dead[:, None] | dead[None, :]) & offmask & (rho0 != 0.0)
    if np.any(bad):
        raise ValueError(
            "inconsistent input: zero initial population with nonzero coherence"
        )
    safe_d0 = np.where(dead, 1.0, d_0.d)
    ratio = np.sqrt(np.outer(d_t.d, d_t.d) / np.outer(safe_d0, safe_d0))
    out = rho0 * ratio
    out[np.eye(n, dtype=bool)] = d_t.d
    return out


def purity_defect(state: QubitState) -> float:
    """``rho00 rho11 - |rho01|^2``: zero for pure states, positive for mixed."""
    return state.rho00 * state.rho11 - abs(state.rho01) ** 2


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled time series of one measurement run.

    ``taus`` holds the dimensionless evolution parameter ``tau = g t`` at the
    recorded points, with matching ``rho00``/``rho01`` arrays.  ``outcome``
    is the eigenstate index the run was absorbed into (0 means ``rho00 -> 1``)
    or ``None`` if the tau budget ran out first (``absorbed`` False then).
    """

    taus: np.ndarray
    rho00: np.ndarray
    rho01: np.ndarray
    absorbed: bool
    outcome: int | None
    final_tau: float
