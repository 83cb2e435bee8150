"""Tests for state containers, the z chart, and geodesic rates."""

import numpy as np
import pytest

from qtraj.states import (
    Z_MAX,
    DiagonalWeights,
    QubitState,
    TrajectoryWeights,
    ZCoordinate,
    from_z,
    geodesic_rhs,
    offdiag_evolve,
    pure_state,
    purity_defect,
    to_z,
    weighted_geodesic_rhs,
)

RHO_AT_Z1 = 0.8807970779778824


def test_qubit_state_defaults_and_rho11():
    s = QubitState(0.3)
    assert s.rho01 == 0j
    assert s.rho11 == 0.7
    assert not s.at_fixed_point


@pytest.mark.parametrize("rho00", [-0.1, 1.1, np.nan])
def test_qubit_state_rejects_bad_population(rho00):
    with pytest.raises(ValueError):
        QubitState(rho00)


def test_qubit_state_rejects_unphysical_coherence():
    # |rho01|^2 may not exceed rho00 * rho11.
    with pytest.raises(ValueError):
        QubitState(0.5, 0.51)
    QubitState(0.5, 0.5)  # boundary is allowed


def test_matrix_is_hermitian_with_unit_trace():
    s = pure_state(0.3, 0.9)
    m = s.matrix()
    assert m.shape == (2, 2)
    np.testing.assert_allclose(m, m.conj().T, rtol=0, atol=0)
    assert np.trace(m).real == 1.0


def test_pure_state_coherence_magnitude_and_phase():
    s = pure_state(0.3, 0.9)
    assert abs(s.rho01) == pytest.approx(np.sqrt(0.3 * 0.7), abs=1e-15)
    assert np.angle(s.rho01) == pytest.approx(0.9, abs=1e-15)
    assert purity_defect(s) == pytest.approx(0.0, abs=1e-16)


@pytest.mark.parametrize("x", [0.0, 1.0])
def test_fixed_points_are_detected(x):
    assert QubitState(x).at_fixed_point


def test_purity_defect_values():
    assert purity_defect(QubitState(0.5)) == 0.25
    assert purity_defect(QubitState(1.0)) == 0.0
    assert purity_defect(pure_state(0.6)) == pytest.approx(0.0, abs=1e-16)


def test_z_round_trip():
    zc = to_z(QubitState(RHO_AT_Z1))
    assert zc.z == pytest.approx(1.0, abs=1e-12)
    back = from_z(zc)
    assert back.rho00 == pytest.approx(RHO_AT_Z1, abs=1e-15)


def test_to_z_rejects_fixed_points():
    for x in (0.0, 1.0):
        with pytest.raises(ValueError, match="fixed point"):
            to_z(QubitState(x))


def test_to_z_is_finite_at_the_most_extreme_interior_state():
    # the largest double below 1 maps to z ~ 18.7, inside the clamp
    nearly_one = np.nextafter(1.0, 0.0)
    zc = to_z(QubitState(nearly_one))
    assert np.isfinite(zc.z)
    assert zc.z <= Z_MAX


def test_from_z_rescales_coherence_by_sech_ratio():
    start = pure_state(0.6, 0.4)
    zc = to_z(start)
    moved = from_z(zc.with_z(zc.z + 1.0))
    # coherence magnitude follows sech(z), so the state stays pure
    assert purity_defect(moved) == pytest.approx(0.0, abs=1e-15)
    assert np.angle(moved.rho01) == pytest.approx(0.4, abs=1e-15)


def test_z_coordinate_with_z_keeps_metadata():
    zc = ZCoordinate(0.5, rho01_init=0.1 + 0.2j, sech_z_init=0.9)
    moved = zc.with_z(2.0)
    assert moved.z == 2.0
    assert moved.rho01_init == zc.rho01_init
    assert moved.sech_z_init == zc.sech_z_init


def test_geodesic_rhs_frozen_rates():
    d = DiagonalWeights(np.array([0.5, 0.3, 0.2]))
    np.testing.assert_allclose(
        geodesic_rhs(d, 0, 1.0), [0.5, -0.3, -0.2], rtol=0, atol=1e-15
    )
    np.testing.assert_allclose(
        geodesic_rhs(d, 1, 1.0), [-0.3, 0.42, -0.12], rtol=0, atol=1e-15
    )


def test_geodesic_rhs_conserves_total_population():
    rng = np.random.default_rng(11)
    for _ in range(20):
        d = DiagonalWeights(rng.dirichlet(np.ones(4)))
        rate = geodesic_rhs(d, 2, 1.7)
        assert rate.sum() == pytest.approx(0.0, abs=1e-14)


def test_geodesic_rhs_rejects_bad_target():
    with pytest.raises(ValueError, match="unknown eigenstate index"):
        geodesic_rhs(DiagonalWeights(np.array([0.5, 0.5])), 2, 1.0)


def test_weighted_geodesic_matches_target_weights():
    d = DiagonalWeights(np.array([0.5, 0.3, 0.2]))
    w = TrajectoryWeights(np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(
        weighted_geodesic_rhs(d, w, 1.0), geodesic_rhs(d, 0, 1.0),
        rtol=0, atol=1e-15,
    )


def test_weighted_geodesic_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        weighted_geodesic_rhs(
            DiagonalWeights(np.array([0.5, 0.5])),
            TrajectoryWeights(np.array([0.5, 0.3, 0.2])),
            1.0,
        )


def test_offdiag_evolve_scales_by_population_ratio():
    initial = np.array([[0.5, 0.3], [0.3, 0.5]])
    out = offdiag_evolve(
        initial,
        DiagonalWeights(np.array([0.8, 0.2])),
        DiagonalWeights(np.array([0.5, 0.5])),
    )
    assert out[0, 1] == pytest.approx(0.24, abs=1e-15)
    assert out[0, 0] == 0.8
    assert out[1, 1] == 0.2


def test_offdiag_evolve_rejects_zero_population_with_coherence():
    initial = np.array([[0.5, 0.3], [0.3, 0.5]])
    with pytest.raises(ValueError, match="zero initial population"):
        offdiag_evolve(
            initial,
            DiagonalWeights(np.array([1.0, 0.0])),
            DiagonalWeights(np.array([0.0, 1.0])),
        )


def test_diagonal_weights_validation():
    DiagonalWeights(np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        DiagonalWeights(np.array([0.7]))
    with pytest.raises(ValueError):
        DiagonalWeights(np.array([0.6, 0.6]))
    with pytest.raises(ValueError):
        DiagonalWeights(np.array([-0.1, 1.1]))


def test_diagonal_weights_are_read_only():
    dw = DiagonalWeights(np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        dw.d[0] = 0.9


def test_trajectory_weights_allow_negative_entries():
    TrajectoryWeights(np.array([1.3, -0.3]))
    with pytest.raises(ValueError):
        TrajectoryWeights(np.array([0.5, 0.4]))
