"""Diffusive (continuous-readout) stochastic trajectories of measurement collapse.

The measured populations follow the weighted collapse flow with trajectory
weights jittered by white noise of spectral density ``S_xi``:
``w0 - w1 = (rho00 - rho11) + sqrt(S_xi) xi(t)``.  For a qubit this closes
into a single stochastic differential equation,

    d rho00 = 2 g rho00 rho11 (rho00 - rho11)(1 - g S_xi) dt
              + 2 g sqrt(S_xi) rho00 rho11 dW,

whose drift cancels exactly at the Born coupling ``g S_xi = 1``: there
``rho00`` is a martingale, which is the dynamical origin of the Born rule.
In the collapse coordinate ``z`` (``tanh z = rho00 - rho11``) the same walk
reads ``dz = g tanh(z) dt + g sqrt(S_xi) dW`` -- additive noise, which is
what makes large ensembles cheap to step.

Three steppers share one law: ``integrated`` multiplies the population ratio
by ``exp(2 g dt wbar)`` with the step-averaged readout ``wbar`` (this is
exactly an Euler step of the z-walk, so it can never leave [0, 1]);
``ito`` is explicit Euler-Maruyama in ``rho00``; ``stratonovich_heun`` is a
Heun predictor-corrector for the Stratonovich form of the same equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _streams
from .states import (
    ABSORB_EPS,
    DiagonalWeights,
    QubitState,
    TrajectoryRecord,
    TrajectoryWeights,
    ZCoordinate,
)

NOISE_FAMILIES = ("gaussian", "z2")
SCHEMES = ("integrated", "ito", "stratonovich_heun")

#: Largest stable step in collapse time units; beyond this the discrete
#: update visibly distorts the distribution of a single step.
MAX_G_DT = 0.1


@dataclass(frozen=True)
class NoiseSpec:
    """Readout-noise model for a diffusive trajectory.

    Parameters
    ----------
    family : str
        ``"gaussian"`` for Gaussian white noise, ``"z2"`` for the two-point
        (+/-) noise with the same variance.  Both give the same diffusion
        limit; the two-point family exposes the biased-random-walk picture.
    s_xi : float
        Noise spectral density ``S_xi >= 0``.  The product ``g * S_xi`` is
        the one physical knob: 1 is the Born coupling, 0 is noiseless
        (deterministic collapse toward the likelier eigenstate).
    seed, stream_id : int
        Key of the counter-based RNG substream for this trajectory.
    """

    family: str = "gaussian"
    s_xi: float = 1.0
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self) -> None:
        if self.family not in NOISE_FAMILIES:
            raise ValueError(
                f"unknown noise family {self.family!r}; choose from {NOISE_FAMILIES}"
            )
        if self.s_xi < 0.0:
            raise ValueError(f"noise density s_xi must be >= 0, got {self.s_xi}")
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative integers")

    def rng(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this trajectory's stream."""
        return _streams.substream(self.seed, self.stream_id, _streams.SINGLE)


@dataclass(frozen=True)
class DiffusionParams:
    """Numerical parameters of a diffusive run.

    ``g`` is the measurement coupling and ``dt`` the step in physical time,
    with the stability cap ``g * dt <= 0.1``.  ``max_tau`` is the budget in
    collapse time ``tau = g t``.
    """

    g: float = 1.0
    dt: float = 1e-3
    scheme: str = "integrated"
    max_tau: float = 25.0

    def __post_init__(self) -> None:
        if self.g <= 0.0:
            raise ValueError(f"coupling g must be positive, got {self.g}")
        if self.dt <= 0.0:
            raise ValueError(f"time step dt must be positive, got {self.dt}")
        if self.g * self.dt > MAX_G_DT + 1e-12:
            raise ValueError(
                f"g*dt = {self.g * self.dt:.4g} exceeds the stability cap {MAX_G_DT}"
            )
        if self.scheme not in SCHEMES:
            raise ValueError(
                f"unknown scheme {self.scheme!r}; choose from {SCHEMES}"
            )
        if self.max_tau <= 0.0:
            raise ValueError(f"max_tau must be positive, got {self.max_tau}")

    @property
    def g_dt(self) -> float:
        return self.g * self.dt


def _noise_unit(spec: NoiseSpec, rng: np.random.Generator, size=None):
    """Unit-variance noise sample(s) of the requested family."""
    if spec.family == "gaussian":
        return rng.standard_normal(size)
    # two-point family: +/-1 with equal probability
    if size is None:
        return 1.0 if rng.random() < 0.5 else -1.0
    return np.where(rng.random(size) < 0.5, 1.0, -1.0)


def sample_wbar(
    state: QubitState, spec: NoiseSpec, dt: float, rng: np.random.Generator
) -> float:
    """Step-averaged readout ``wbar = (rho00 - rho11) + noise``.

    Averaging white noise of density ``S_xi`` over a window ``dt`` leaves a
    random variable of variance ``S_xi / dt`` centered on the population
    difference: Gaussian for the ``gaussian`` family, ``+/- sqrt(S_xi/dt)``
    for the two-point family.
    """
    if dt <= 0.0:
        raise ValueError(f"averaging window dt must be positive, got {dt}")
    sd = math.sqrt(spec.s_xi / dt)
    return (state.rho00 - state.rho11) + sd * float(_noise_unit(spec, rng))


def _require_interior(state: QubitState) -> None:
    if state.at_fixed_point:
        raise ValueError("state at a fixed point cannot be stepped")


def _snap(rho00: float, rho01: complex) -> QubitState:
    """Snap onto the nearer eigenstate once within ``ABSORB_EPS`` of it."""
    if rho00 >= 1.0 - ABSORB_EPS:
        return QubitState(1.0, 0j)
    if rho00 <= ABSORB_EPS:
        return QubitState(0.0, 0j)
    return QubitState(rho00, rho01)


def _offdiag_ratio(new00: float, new11: float, old00: float, old11: float) -> float:
    return math.sqrt((new00 * new11) / (old00 * old11))


def step_integrated(
    state: QubitState,
    spec: NoiseSpec,
    params: DiffusionParams,
    rng: np.random.Generator,
) -> QubitState:
    """One integrated step: population ratio times ``exp(2 g dt wbar)``.

    Works in the log of the population ratio, so the update is exact for a
    constant readout and positivity can never break; ratio overflow simply
    lands on the nearer fixed point (absorbed).  The coherence is rescaled
    by the square-root population ratio with frozen phase.
    """
    _require_interior(state)
    wbar = sample_wbar(state, spec, params.dt, rng)
    logratio = math.log(state.rho00 / state.rho11) + 2.0 * params.g_dt * wbar
    # stable logistic in both tails
    if logratio >= 0.0:
        new00 = 1.0 / (1.0 + math.exp(-logratio))
    else:
        e = math.exp(logratio)
        new00 = e / (1.0 + e)
    if new00 >= 1.0 - ABSORB_EPS or new00 <= ABSORB_EPS:
        return _snap(new00, 0j)
    rho01 = state.rho01 * _offdiag_ratio(
        new00, 1.0 - new00, state.rho00, state.rho11
    )
    return QubitState(new00, rho01)


def drift_ito(rho00: float, g: float, s_xi: float) -> float:
    """Ito drift ``2 g rho00 rho11 (rho00 - rho11)(1 - g S_xi)``."""
    rho11 = 1.0 - rho00
    return 2.0 * g * rho00 * rho11 * (rho00 - rho11) * (1.0 - g * s_xi)


def diffusion_amplitude(rho00: float, g: float, s_xi: float) -> float:
    """Noise amplitude ``2 g sqrt(S_xi) rho00 rho11`` in front of dW."""
    return 2.0 * g * math.sqrt(s_xi) * rho00 * (1.0 - rho00)


def step_ito(
    state: QubitState,
    spec: NoiseSpec,
    params: DiffusionParams,
    rng: np.random.Generator,
) -> QubitState:
    """One Euler-Maruyama step of the population equation.

    The drift vanishes identically at the Born coupling ``g S_xi = 1``.
    The raw update can leave [0, 1] for large noise, so the result is
    clamped and then snapped onto a fixed point when within ``ABSORB_EPS``.
    """
    _require_interior(state)
    dw = math.sqrt(params.dt) * float(_noise_unit(spec, rng))
    new00 = (
        state.rho00
        + drift_ito(state.rho00, params.g, spec.s_xi) * params.dt
        + diffusion_amplitude(state.rho00, params.g, spec.s_xi) * dw
    )
    new00 = min(1.0, max(0.0, new00))
    if new00 >= 1.0 - ABSORB_EPS or new00 <= ABSORB_EPS:
        return _snap(new00, 0j)
    rho01 = state.rho01 * _offdiag_ratio(
        new00, 1.0 - new00, state.rho00, state.rho11
    )
    return QubitState(new00, rho01)


def _drift_stratonovich(rho00: float, g: float) -> float:
    # Removing the Ito noise-induced term leaves the bare collapse drift
    # 2 g rho00 rho11 (rho00 - rho11), independent of S_xi.
    rho11 = 1.0 - rho00
    return 2.0 * g * rho00 * rho11 * (rho00 - rho11)


def step_stratonovich_heun(
    state: QubitState,
    spec: NoiseSpec,
    params: DiffusionParams,
    rng: np.random.Generator,
) -> QubitState:
    """Heun predictor-corrector step of the Stratonovich form.

    Predictor and corrector share one Wiener increment; drift and noise
    amplitude are averaged between the start point and the predictor.
    """
    _require_interior(state)
    g, s_xi, dt = params.g, spec.s_xi, params.dt
    dw = math.sqrt(dt) * float(_noise_unit(spec, rng))
    a0 = _drift_stratonovich(state.rho00, g)
    b0 = diffusion_amplitude(state.rho00, g, s_xi)
    pred = min(1.0, max(0.0, state.rho00 + a0 * dt + b0 * dw))
    a1 = _drift_stratonovich(pred, g)
    b1 = diffusion_amplitude(pred, g, s_xi)
    new00 = state.rho00 + 0.5 * (a0 + a1) * dt + 0.5 * (b0 + b1) * dw
    new00 = min(1.0, max(0.0, new00))
    if new00 >= 1.0 - ABSORB_EPS or new00 <= ABSORB_EPS:
        return _snap(new00, 0j)
    rho01 = state.rho01 * _offdiag_ratio(
        new00, 1.0 - new00, state.rho00, state.rho11
    )
    return QubitState(new00, rho01)


_STEPPERS = {
    "integrated": step_integrated,
    "ito": step_ito,
    "stratonovich_heun": step_stratonovich_heun,
}


def step_z(
    zc: ZCoordinate,
    spec: NoiseSpec,
    params: DiffusionParams,
    rng: np.random.Generator,
) -> ZCoordinate:
    """One Euler step of the collapse-coordinate walk, Born coupling only.

    ``z' = z + g dt tanh(z) + sqrt(g dt) xi`` with unit-variance ``xi`` of
    the requested family.  Off the Born coupling the z-walk would need an
    extra drift term, so this stepper refuses to run there.
    """
    if abs(params.g * spec.s_xi - 1.0) > 1e-12:
        raise ValueError(
            "z-form requires the Born constraint g*S_xi = 1; got "
            f"g*S_xi = {params.g * spec.s_xi!r}"
        )
    gdt = params.g_dt
    z = zc.z + gdt * math.tanh(zc.z) + math.sqrt(gdt) * float(
        _noise_unit(spec, rng)
    )
    return zc.with_z(z)


def _constraint_matrix(n: int) -> np.ndarray:
    """Rows: normalization, then pairwise-difference contrasts k = 1..n-1."""
    a = np.zeros((n, n))
    a[0, :] = 1.0
    for k in range(1, n):
        a[k, :k] = 1.0
        a[k, k] = -float(k)
    return a


_INV_CACHE: dict[int, np.ndarray] = {}


def _constraint_inverse(n: int) -> np.ndarray:
    inv = _INV_CACHE.get(n)
    if inv is None:
        inv = np.linalg.inv(_constraint_matrix(n))
        inv.setflags(write=False)
        _INV_CACHE[n] = inv
    return inv


def multidim_weights(
    d: DiagonalWeights,
    spec: NoiseSpec,
    dt: float,
    rng: np.random.Generator | None = None,
    xi: np.ndarray | None = None,
) -> TrajectoryWeights:
    """Draw the n noisy trajectory weights of an n-level measurement.

    The weights solve the linear system built from normalization plus the
    n-1 noisy contrasts

        sum_{i<k} w_i - k w_k
            = sum_{i<k} d_i - k d_k + sqrt(k(k+1) S_xi / 2) xibar_k,

    where each ``xibar_k`` is an independent step-averaged unit noise of
    variance ``1/dt``.  With all noises zero the weights equal the
    populations; for n = 2 the construction reduces to the qubit ``wbar``.

    Parameters
    ----------
    xi : array of shape (n-1,), optional
        Externally supplied unit-variance noise values (before the
        ``1/sqrt(dt)`` scaling), for deterministic tests.  If omitted they
        are drawn from ``rng``.
    """
    if dt <= 0.0:
        raise ValueError(f"averaging window dt must be positive, got {dt}")
    n = d.n
    if xi is None:
        if rng is None:
            raise ValueError("either rng or xi must be provided")
        xi = np.asarray(_noise_unit(spec, rng, size=n - 1), dtype=float)
    else:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (n - 1,):
            raise ValueError(f"xi must have shape ({n - 1},), got {xi.shape}")
    k = np.arange(1, n)
    coef = np.sqrt(k * (k + 1) * spec.s_xi / (2.0 * dt))
    cums = np.concatenate(([0.0], np.cumsum(d.d)))[:-1]  # sum_{i<k} d_i
    b = np.empty(n)
    b[0] = 1.0
    b[1:] = cums[1:] - k * d.d[1:] + coef * xi
    w = _constraint_inverse(n) @ b
    return TrajectoryWeights(w)


def simulate_trajectory(
    initial: QubitState,
    spec: NoiseSpec,
    params: DiffusionParams,
    record_stride: int = 1,
) -> TrajectoryRecord:
    """Run one diffusive trajectory to absorption or the tau budget.

    The state is recorded every ``record_stride`` steps plus at the final
    point.  A start exactly on a fixed point is an immediate absorption with
    that outcome.  Exhausting ``max_tau`` without absorbing is not an error:
    the record simply carries ``absorbed=False`` and ``outcome=None``.
    """
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride}")
    rng = spec.rng()
    stepper = _STEPPERS[params.scheme]
    state = _snap(initial.rho00, initial.rho01)
    taus = [0.0]
    rho00s = [state.rho00]
    rho01s = [state.rho01]
    if state.at_fixed_point:
        outcome = 0 if state.rho00 >= 0.5 else 1
        return TrajectoryRecord(
            np.array(taus), np.array(rho00s), np.array(rho01s, dtype=complex),
            True, outcome, 0.0,
        )
    n_steps = int(math.floor(params.max_tau / params.g_dt + 1e-9))
    step = 0
    for step in range(1, n_steps + 1):
        state = stepper(state, spec, params, rng)
        if state.at_fixed_point or step % record_stride == 0 or step == n_steps:
            taus.append(step * params.g_dt)
            rho00s.append(state.rho00)
            rho01s.append(state.rho01)
        if state.at_fixed_point:
            break
    absorbed = state.at_fixed_point
    outcome = (0 if state.rho00 >= 0.5 else 1) if absorbed else None
    return TrajectoryRecord(
        np.array(taus), np.array(rho00s), np.array(rho01s, dtype=complex),
        absorbed, outcome, step * params.g_dt,
    )


def sample_increments(
    state: QubitState,
    spec: NoiseSpec,
    params: DiffusionParams,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """n i.i.d. one-step increments of ``rho00 - rho11`` from a fixed state.

    Every sample is an independent Ito step started at the same state; the
    returned values are ``2 * d(rho00)``, the raw material of the
    fluctuation-dissipation checks.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    _require_interior(state)
    xi = np.asarray(_noise_unit(spec, rng, size=n), dtype=float)
    drho = (
        drift_ito(state.rho00, params.g, spec.s_xi) * params.dt
        + diffusion_amplitude(state.rho00, params.g, spec.s_xi)
        * math.sqrt(params.dt)
        * xi
    )
    return 2.0 * drho
