"""Jump (detector-click) stochastic trajectories of measurement collapse.

The jump unraveling replaces continuous readout noise by a point process:
between clicks the state drifts deterministically toward eigenstate 0 under

    d rho00 / dt = 2 g rho00 rho11,

and a click, fired with probability ``lambda * 2 g rho11 dt`` per step,
projects the state onto eigenstate 1 in one go.  At the Born rate
(``lambda = 1``) the no-click drift and the click statistics conspire so
that the probability of ending in eigenstate 0 equals the initial
population exactly; any other ``lambda`` measurably violates that rule,
which makes this model the clean testbed for rate-tampering experiments.

The no-click branch has a closed form: with ``tau = g t`` and initial
population ``x``,

    rho00(tau) = x / (x + (1 - x) e^{-2 tau}),
    rho01(tau) = rho01(0) / (x e^{tau} + (1 - x) e^{-tau}),

and the per-step update below composes to it exactly (each step applies the
same logistic map over ``g dt``), so discretization introduces no drift
error -- only rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _streams
from .states import ABSORB_EPS, QubitState, TrajectoryRecord

#: Cap on the per-step click probability at rho11 = 1.
MAX_P_STEP = 0.1


@dataclass(frozen=True)
class JumpParams:
    """Numerical parameters of a jump-unraveling run.

    ``rate_multiplier`` is the dimensionless ``lambda`` scaling the click
    rate away from the Born value 1.  The constructor enforces
    ``lambda * 2 g dt <= 0.1`` so the per-step click probability stays a
    faithful discretization of the rate.
    """

    g: float = 1.0
    dt: float = 1e-3
    rate_multiplier: float = 1.0
    seed: int = 0
    stream_id: int = 0
    max_tau: float = 25.0

    def __post_init__(self) -> None:
        if self.g <= 0.0:
            raise ValueError(f"coupling g must be positive, got {self.g}")
        if self.dt <= 0.0:
            raise ValueError(f"time step dt must be positive, got {self.dt}")
        if self.rate_multiplier < 0.0:
            raise ValueError(
                f"rate_multiplier must be >= 0, got {self.rate_multiplier}"
            )
        p_cap = self.rate_multiplier * 2.0 * self.g * self.dt
        if p_cap > MAX_P_STEP + 1e-12:
            raise ValueError(
                f"per-step click probability cap {p_cap:.4g} exceeds {MAX_P_STEP}; "
                "reduce dt or the rate multiplier"
            )
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative integers")
        if self.max_tau <= 0.0:
            raise ValueError(f"max_tau must be positive, got {self.max_tau}")

    @property
    def g_dt(self) -> float:
        return self.g * self.dt

    def rng(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this trajectory's stream."""
        return _streams.substream(self.seed, self.stream_id, _streams.SINGLE)


def nojump_rho00(x: float | np.ndarray, tau: float | np.ndarray):
    """Population on the no-click branch: ``x / (x + (1-x) e^{-2 tau})``."""
    return x / (x + (1.0 - x) * np.exp(-2.0 * tau))


def nojump_offdiag_factor(x: float | np.ndarray, tau: float | np.ndarray):
    """Coherence scale on the no-click branch: ``1 / (x e^tau + (1-x) e^{-tau})``."""
    return 1.0 / (x * np.exp(tau) + (1.0 - x) * np.exp(-tau))


def survival_probability(
    x: float | np.ndarray, tau: float | np.ndarray, rate_multiplier: float = 1.0
):
    """Probability that no click has fired by ``tau``.

    The click rate along the no-click branch integrates in closed form:
    ``S(tau) = (x + (1 - x) e^{-2 tau}) ** lambda``.  At the Born rate
    this is exactly the norm of the unnormalized no-click branch, and
    ``S -> x`` as ``tau -> inf``: the never-click probability reproduces
    the initial population.
    """
    if rate_multiplier < 0.0:
        raise ValueError(f"rate_multiplier must be >= 0, got {rate_multiplier}")
    base = x + (1.0 - x) * np.exp(-2.0 * tau)
    return base**rate_multiplier


def jump_probability(state: QubitState, params: JumpParams) -> float:
    """Click probability for one step: ``1 - exp(-lambda 2 g rho11 dt)``.

    The exponential form is the exact integral of a constant rate over the
    step, so it never exceeds 1 and matches the linear rate to first order.
    """
    rate = params.rate_multiplier * 2.0 * params.g * state.rho11
    return -math.expm1(-rate * params.dt)


def jump_step(
    state: QubitState, params: JumpParams, rng: np.random.Generator
) -> QubitState:
    """Advance one step: click with its Born-weighted probability, else drift.

    Both eigenstates are stationary: from ``rho00 = 1`` the click rate is
    zero and the drift vanishes; ``rho00 = 0`` is the post-click state
    itself.  A click returns exactly ``rho00 = 0`` with no coherence.
    """
    if state.rho00 >= 1.0 - ABSORB_EPS:
        return QubitState(1.0, 0j)
    if state.rho00 <= ABSORB_EPS:
        return QubitState(0.0, 0j)
    if rng.random() < jump_probability(state, params):
        return QubitState(0.0, 0j)
    gdt = params.g_dt
    y = state.rho00
    new00 = y / (y + (1.0 - y) * math.exp(-2.0 * gdt))
    rho01 = state.rho01 / (y * math.exp(gdt) + (1.0 - y) * math.exp(-gdt))
    if new00 >= 1.0 - ABSORB_EPS:
        return QubitState(1.0, 0j)
    return QubitState(new00, rho01)


def simulate_jump_trajectory(
    initial: QubitState, params: JumpParams, record_stride: int = 1
) -> TrajectoryRecord:
    """Run one jump trajectory to absorption or the tau budget.

    Absorption means either a click (outcome 1, the click time is the
    record's ``final_tau``) or the no-click drift carrying the state onto
    eigenstate 0, ``rho00 >= 1 - ABSORB_EPS`` (outcome 0).
    """
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride}")
    rng = params.rng()
    state = initial
    if state.rho00 >= 1.0 - ABSORB_EPS:
        state = QubitState(1.0, 0j)
    elif state.rho00 <= ABSORB_EPS:
        state = QubitState(0.0, 0j)
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
        state = jump_step(state, params, rng)
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
    params: JumpParams,
    n: int,
    rng: np.random.Generator,
    stratified: bool = False,
) -> np.ndarray:
    """n one-step increments of ``rho00`` from a fixed state.

    Each sample is an independent step: with the click probability the
    increment is ``-rho00`` (projection), otherwise the deterministic drift
    increment.  With ``stratified=True`` the click count is fixed at its
    rounded expectation instead of drawn, which removes the Bernoulli
    shot noise on the click fraction (the sample order carries no meaning
    either way); use it when the quantity under test is the conditional
    increment structure rather than the click-count fluctuation.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    if state.at_fixed_point:
        raise ValueError("state at a fixed point cannot be stepped")
    p = jump_probability(state, params)
    y = state.rho00
    drift = y / (y + (1.0 - y) * math.exp(-2.0 * params.g_dt)) - y
    out = np.full(n, drift)
    if stratified:
        k = int(round(p * n))
        out[:k] = -y
    else:
        out[rng.random(n) < p] = -y
    return out
