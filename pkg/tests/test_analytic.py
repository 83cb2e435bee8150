"""Tests for closed-form densities, channels, walks, and checks."""

import math

import numpy as np
import pytest

from qtraj.analytic import (
    GaussianMixture,
    KrausPair,
    biased_walk_step,
    diffusion_ensemble_mean,
    fd_check_diffusion,
    fd_check_jump,
    fokker_planck_density,
    jump_distribution,
    kraus_apply,
    lindblad_gamma,
    lindblad_solution,
    walk_epsilon,
)
from qtraj.states import QubitState, ZCoordinate, pure_state, purity_defect, to_z

Z0_X06 = 0.2027325540540822
MIXTURE_PEAK_DENSITY = 0.2609617548461348  # x=0.6, tau=1, at z = z0 + tau
SECH_MOMENT_X06_TAU1 = 0.5942762518598439  # e^{-1/2} sech(z0)
KRAUS_EPS_TAU1 = 1.0850385019483878  # arccosh(e^{1/2})
WALK_EPS_001 = 0.10008335412945348  # arccosh(e^{0.005})


def test_mixture_from_initial_structure():
    mix = GaussianMixture.from_initial(0.6, 1.0)
    assert mix.weight_plus == pytest.approx(0.6, abs=1e-15)
    assert mix.z_plus == pytest.approx(Z0_X06 + 1.0, abs=1e-12)
    assert mix.z_minus == pytest.approx(Z0_X06 - 1.0, abs=1e-12)
    assert mix.variance == 1.0


@pytest.mark.parametrize("x", [0.0, 1.0])
def test_mixture_rejects_degenerate_initial_population(x):
    with pytest.raises(ValueError, match="degenerate"):
        GaussianMixture.from_initial(x, 1.0)


def test_mixture_density_frozen_peak_value():
    mix = GaussianMixture.from_initial(0.6, 1.0)
    assert mix.density(Z0_X06 + 1.0) == pytest.approx(MIXTURE_PEAK_DENSITY, abs=1e-12)


def test_mixture_density_is_vectorized():
    mix = GaussianMixture.from_initial(0.6, 1.0)
    z = np.linspace(-4.0, 4.0, 7)
    vals = mix.density(z)
    assert vals.shape == z.shape
    assert np.all(vals > 0.0)


@pytest.mark.parametrize("tau", [0.5, 2.0, 10.0])
def test_mixture_normalization_and_tanh_moment(tau):
    mix = GaussianMixture.from_initial(0.6, tau)
    assert mix.normalization() == pytest.approx(1.0, abs=1e-9)
    # the population difference is a martingale: <tanh z> = 2x - 1 forever
    assert mix.tanh_moment() == pytest.approx(0.2, abs=1e-9)


def test_mixture_sech_moment_decays_at_half_rate():
    mix = GaussianMixture.from_initial(0.6, 1.0)
    assert mix.sech_moment() == pytest.approx(SECH_MOMENT_X06_TAU1, abs=1e-9)


def test_mixture_bin_masses_match_quadrature():
    mix = GaussianMixture.from_initial(0.6, 1.0)
    edges = np.array([-2.0, -0.5, 0.7, 3.0])
    masses = mix.bin_masses(edges)
    assert masses.shape == (3,)
    from scipy.integrate import quad

    for k in range(3):
        ref, _ = quad(mix.density, edges[k], edges[k + 1])
        assert masses[k] == pytest.approx(ref, abs=1e-12)


def test_fokker_planck_density_matches_mixture():
    mix = GaussianMixture.from_initial(0.3, 2.0)
    z = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(
        fokker_planck_density(0.3, 2.0, z), mix.density(z), rtol=0, atol=1e-15
    )


def test_diffusion_ensemble_mean_keeps_populations():
    state = pure_state(0.3, 1.1)
    out = diffusion_ensemble_mean(state, 2.0)
    assert out.rho00 == 0.3
    assert out.rho01 == pytest.approx(state.rho01 * math.exp(-1.0), abs=1e-15)


def test_lindblad_gamma_frozen_values():
    assert lindblad_gamma(1.0, "diffusion") == 0.25
    assert lindblad_gamma(1.0, "jump") == 0.5
    assert lindblad_gamma(2.0, "diffusion") == 0.5
    with pytest.raises(ValueError):
        lindblad_gamma(1.0, "ballistic")


def test_lindblad_solution_dephases_only():
    state = pure_state(0.3, 0.4)
    out = lindblad_solution(state, 0.25, 2.0)
    assert out.rho00 == 0.3
    assert out.rho01 == pytest.approx(state.rho01 * math.exp(-1.0), abs=1e-15)


@pytest.mark.parametrize("form", ["orthogonal", "symmetric"])
def test_kraus_pair_is_a_channel(form):
    pair = KrausPair.from_tau(1.0, form)
    assert pair.epsilon == pytest.approx(KRAUS_EPS_TAU1, abs=1e-12)
    assert pair.completeness_defect() < 1e-15
    assert pair.cross_defect() < 1e-15


@pytest.mark.parametrize("form", ["orthogonal", "symmetric"])
@pytest.mark.parametrize("tau", [0.1, 1.0, 10.0])
def test_kraus_apply_matches_lindblad(form, tau):
    state = pure_state(0.3, 0.9)
    via_kraus = kraus_apply(state, KrausPair.from_tau(tau, form))
    via_lindblad = lindblad_solution(state, lindblad_gamma(1.0, "diffusion"), tau)
    np.testing.assert_allclose(
        via_kraus.matrix(), via_lindblad.matrix(), rtol=0, atol=1e-15
    )


def test_kraus_rejects_unknown_form():
    with pytest.raises(ValueError):
        KrausPair.from_tau(1.0, "unitary")


def test_walk_epsilon_frozen_value():
    # arccosh just above 1 amplifies the argument's rounding ~10x
    assert walk_epsilon(0.01) == pytest.approx(WALK_EPS_001, abs=5e-15)


def test_biased_walk_probabilities_and_martingale():
    eps = walk_epsilon(0.01)
    zc = to_z(QubitState(0.6))
    (up, p_up), (down, p_down) = biased_walk_step(zc, eps)
    assert up.z == pytest.approx(zc.z + eps, abs=1e-15)
    assert down.z == pytest.approx(zc.z - eps, abs=1e-15)
    assert p_up + p_down == pytest.approx(1.0, abs=1e-15)
    mean_tanh = p_up * math.tanh(up.z) + p_down * math.tanh(down.z)
    assert mean_tanh == pytest.approx(math.tanh(zc.z), abs=1e-14)


def test_biased_walk_keeps_purity_on_both_branches():
    from qtraj.states import from_z

    eps = walk_epsilon(0.05)
    zc = to_z(pure_state(0.6, 0.8))
    for branch, _ in biased_walk_step(zc, eps):
        assert purity_defect(from_z(branch)) == pytest.approx(0.0, abs=1e-15)


def test_jump_distribution_structure_and_mean():
    split = jump_distribution(0.6, 1.0)
    assert split.moving_position == pytest.approx(0.9172430971043683, abs=1e-15)
    assert split.moving_weight == pytest.approx(0.6541341132946451, abs=1e-15)
    assert split.stationary_weight == pytest.approx(1.0 - 0.6541341132946451, abs=1e-15)
    assert split.mean() == pytest.approx(0.6, abs=1e-15)
    assert split.coherence_factor() == pytest.approx(math.exp(-1.0), abs=1e-14)


def test_jump_distribution_long_time_limit():
    split = jump_distribution(0.6, 40.0)
    assert split.moving_position == pytest.approx(1.0, abs=1e-12)
    assert split.moving_weight == pytest.approx(0.6, abs=1e-12)
    assert split.mean() == pytest.approx(0.6, abs=1e-12)


def test_fd_check_diffusion_zero_for_matched_samples():
    # synthetic increments built to carry exactly the benchmark variance
    rho00, g, dt = 0.7, 1.0, 1e-3
    sd = math.sqrt(16.0 * g * rho00**2 * (1 - rho00) ** 2 * dt)
    samples = np.array([sd, -sd])
    assert fd_check_diffusion(samples, rho00, g, dt) == pytest.approx(0.0, abs=1e-12)


def test_fd_check_diffusion_rejects_symmetric_state():
    with pytest.raises(ValueError, match="asymmetric"):
        fd_check_diffusion(np.array([0.1, -0.1]), 0.5, 1.0, 1e-3)


def test_fd_check_jump_zero_for_matched_samples():
    rho00, g, dt = 0.7, 1.0, 1e-3
    rms = math.sqrt(2.0 * g * rho00**2 * (1 - rho00) * dt)
    samples = np.array([rms, -rms])
    assert fd_check_jump(samples, rho00, g, dt) == pytest.approx(0.0, abs=1e-12)
