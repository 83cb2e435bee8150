"""Tests for the point-process (jump) unraveling."""

import math

import numpy as np
import pytest

from qtraj.analytic import fd_check_jump
from qtraj.jump import (
    JumpParams,
    jump_probability,
    jump_step,
    nojump_offdiag_factor,
    nojump_rho00,
    sample_increments,
    simulate_jump_trajectory,
    survival_probability,
)
from qtraj.states import QubitState, pure_state

NOJUMP_X06_TAU1 = 0.9172430971043683
SURVIVAL_X06_TAU1 = 0.6541341132946451
OFFDIAG_X06_TAU1 = 0.5623914633018634


class _ForcedUniform:
    """Generator stand-in returning a fixed uniform draw."""

    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


def test_params_validation():
    JumpParams()
    with pytest.raises(ValueError, match="cap"):
        JumpParams(g=1.0, dt=0.06)  # lambda * 2 g dt = 0.12
    with pytest.raises(ValueError, match="cap"):
        JumpParams(rate_multiplier=200.0)
    with pytest.raises(ValueError):
        JumpParams(rate_multiplier=-1.0)
    with pytest.raises(ValueError):
        JumpParams(g=0.0)


def test_nojump_rho00_frozen_value():
    assert nojump_rho00(0.6, 1.0) == pytest.approx(NOJUMP_X06_TAU1, abs=1e-15)
    assert nojump_rho00(0.6, 0.0) == pytest.approx(0.6, abs=1e-15)


def test_nojump_drift_composes_exactly():
    # drifting tau1 then tau2 equals drifting tau1 + tau2 in one go
    x = 0.37
    one_shot = nojump_rho00(x, 1.7)
    composed = nojump_rho00(nojump_rho00(x, 0.9), 0.8)
    assert composed == pytest.approx(one_shot, abs=1e-15)


@pytest.mark.parametrize(
    "lam,frozen",
    [(1.0, 0.6541341132946451), (2.0, 0.4278914381757716), (0.5, 0.8087855793068056)],
)
def test_survival_probability_frozen_values(lam, frozen):
    assert survival_probability(0.6, 1.0, lam) == pytest.approx(frozen, abs=1e-15)


def test_survival_probability_monotone_in_time():
    taus = np.linspace(0.0, 5.0, 40)
    vals = [survival_probability(0.6, t) for t in taus]
    assert vals[0] == pytest.approx(1.0, abs=1e-15)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # long-time limit: only the weight already on eigenstate 0 survives
    assert survival_probability(0.6, 60.0) == pytest.approx(0.6, abs=1e-12)


def test_nojump_offdiag_factor_frozen_value():
    assert nojump_offdiag_factor(0.6, 1.0) == pytest.approx(OFFDIAG_X06_TAU1, abs=1e-15)


def test_survivor_coherence_identity():
    # survival probability times the off-diagonal factor is exactly e^{-tau}
    for x in (0.2, 0.5, 0.8):
        for tau in (0.3, 1.0, 4.0):
            prod = survival_probability(x, tau) * nojump_offdiag_factor(x, tau)
            assert prod == pytest.approx(math.exp(-tau), abs=1e-14)


def test_jump_probability_scales_with_population_and_rate():
    params = JumpParams(g=1.0, dt=1e-3)
    p = jump_probability(QubitState(0.6), params)
    assert p == pytest.approx(-math.expm1(-2.0 * 0.4 * 1e-3), abs=1e-18)
    doubled = jump_probability(QubitState(0.6), JumpParams(rate_multiplier=2.0))
    assert doubled == pytest.approx(-math.expm1(-2.0 * 2.0 * 0.4 * 1e-3), abs=1e-18)


def test_jump_step_click_resets_to_eigenstate_one():
    out = jump_step(pure_state(0.6, 0.5), JumpParams(), _ForcedUniform(0.0))
    assert out.rho00 == 0.0
    assert out.rho01 == 0j


def test_jump_step_noclick_follows_exact_drift():
    params = JumpParams(g=1.0, dt=1e-3)
    state = pure_state(0.6, 0.5)
    out = jump_step(state, params, _ForcedUniform(1.0))
    assert out.rho00 == pytest.approx(nojump_rho00(0.6, 1e-3), abs=1e-15)
    expected_offd = state.rho01 * nojump_offdiag_factor(0.6, 1e-3)
    assert out.rho01 == pytest.approx(expected_offd, abs=1e-15)


def test_jump_step_eigenstates_are_stationary():
    params = JumpParams()
    for x in (0.0, 1.0):
        out = jump_step(QubitState(x), params, _ForcedUniform(0.0))
        assert out.rho00 == x
        assert out.rho01 == 0j


def test_simulate_jump_trajectory_outcomes_and_absorption():
    outcomes = set()
    for stream in range(12):
        params = JumpParams(g=1.0, dt=1e-3, seed=4, stream_id=stream, max_tau=25.0)
        rec = simulate_jump_trajectory(QubitState(0.6), params)
        assert rec.absorbed
        assert rec.rho00[-1] in (0.0, 1.0)
        outcomes.add(rec.outcome)
        # a click is a single-step drop to rho00 = 0
        if rec.outcome == 1:
            assert rec.rho00[-2] > 0.5
    assert outcomes == {0, 1}


def test_simulate_jump_trajectory_reproducible():
    params = JumpParams(seed=8, stream_id=3, max_tau=2.0)
    a = simulate_jump_trajectory(QubitState(0.6), params)
    b = simulate_jump_trajectory(QubitState(0.6), params)
    np.testing.assert_array_equal(a.rho00, b.rho00)


def test_sample_increments_stratified_click_count_is_exact():
    params = JumpParams(g=1.0, dt=1e-3, seed=6)
    n = 10_000
    inc = sample_increments(QubitState(0.7), params, n, params.rng(), stratified=True)
    p = jump_probability(QubitState(0.7), params)
    clicks = int(np.sum(inc < -0.5))
    assert clicks == round(p * n)
    # every sample is either the click drop or the tiny no-click drift
    drops = inc[inc < -0.5]
    np.testing.assert_allclose(drops, -0.7, rtol=0, atol=1e-15)


def test_sample_increments_iid_click_count_is_binomial():
    params = JumpParams(g=1.0, dt=1e-3, seed=6)
    n = 200_000
    inc = sample_increments(QubitState(0.7), params, n, params.rng())
    p = jump_probability(QubitState(0.7), params)
    clicks = int(np.sum(inc < -0.5))
    assert abs(clicks - p * n) < 5 * math.sqrt(p * (1 - p) * n)


def test_fd_ratio_reads_the_rate_multiplier():
    # with the click rate doubled the noise-to-dissipation ratio reads 2
    params = JumpParams(g=1.0, dt=1e-3, rate_multiplier=2.0, seed=10)
    inc = sample_increments(QubitState(0.7), params, 300_000, params.rng(),
                            stratified=True)
    ratio = fd_check_jump(inc, 0.7, 1.0, 1e-3) + 1.0
    assert ratio == pytest.approx(2.0, abs=0.02)
