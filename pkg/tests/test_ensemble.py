"""Tests for the batched ensemble engines and their statistics."""

import math

import numpy as np
import pytest

from qtraj.jump import nojump_offdiag_factor, nojump_rho00, survival_probability
from qtraj.ensemble import (
    EnsembleConfig,
    absorption_z,
    born_curve,
    decoherence_comparison,
    distribution_snapshots,
    initial_z,
    jump_ensemble,
    multilevel_ensemble,
    resolve_workers,
)

Z_EPS = 10.361632917973206  # atanh(1 - 2e-9)


def test_resolve_workers_env_contract(monkeypatch):
    monkeypatch.delenv("QTRAJ_THREADS", raising=False)
    assert resolve_workers() == 1
    monkeypatch.setenv("QTRAJ_THREADS", "")
    assert resolve_workers() == 1
    monkeypatch.setenv("QTRAJ_THREADS", "3")
    assert resolve_workers() == 3
    monkeypatch.setenv("QTRAJ_THREADS", "0")
    assert resolve_workers() >= 1
    monkeypatch.setenv("QTRAJ_THREADS", "many")
    with pytest.raises(ValueError):
        resolve_workers()
    # an explicit count always wins over the environment
    assert resolve_workers(5) == 5


def test_absorption_window_scales_with_noise():
    # atanh this close to 1 amplifies one ulp of argument error to ~3e-8
    assert absorption_z(1.0) == pytest.approx(Z_EPS, abs=1e-7)
    assert absorption_z(0.0) == pytest.approx(Z_EPS, abs=1e-7)
    assert absorption_z(100.0) == pytest.approx(345.3877639491069, abs=1e-9)


def test_initial_z_frozen_value_and_domain():
    assert initial_z(0.6) == pytest.approx(0.2027325540540822, abs=1e-15)
    for x in (0.0, 1.0):
        with pytest.raises(ValueError):
            initial_z(x)


def test_config_validation():
    EnsembleConfig(n_traj=10)
    with pytest.raises(ValueError):
        EnsembleConfig(model="ballistic")
    with pytest.raises(ValueError):
        EnsembleConfig(x_grid=(0.5, 1.2))
    with pytest.raises(ValueError):
        EnsembleConfig(tau_snapshots=(3.0, 1.0))
    with pytest.raises(ValueError):
        EnsembleConfig(tau_snapshots=(30.0,), tau_budget=25.0)
    with pytest.raises(ValueError, match="snapshot"):
        EnsembleConfig(scheme="ito", tau_snapshots=(1.0,))
    with pytest.raises(ValueError):
        EnsembleConfig(model="biased_walk", gs_xi=2.0)
    with pytest.raises(ValueError, match="cap"):
        EnsembleConfig(model="jump", rate_multiplier=100.0, dt=1e-3)
    with pytest.raises(ValueError):
        EnsembleConfig(n_traj=0)
    with pytest.raises(ValueError):
        EnsembleConfig(batch_size=0)


def test_born_curve_edge_points_are_exact():
    cfg = EnsembleConfig(n_traj=500, x_grid=(0.0, 1.0), seed=1)
    res = born_curve(cfg)
    by_x = {p.x: p for p in res.points}
    assert by_x[0.0].p_hat == 0.0
    assert by_x[1.0].p_hat == 1.0
    assert by_x[0.0].unabsorbed_fraction == 0.0
    assert by_x[1.0].n_absorbed == 500


def test_born_curve_interior_point_statistics():
    cfg = EnsembleConfig(n_traj=2000, x_grid=(0.3,), seed=2)
    p = born_curve(cfg).points[0]
    assert p.outcomes.dtype == np.int8
    assert p.n_total == 2000
    assert abs(p.p_hat - 0.3) < 5 * math.sqrt(0.3 * 0.7 / 2000)
    assert p.std_err == pytest.approx(
        math.sqrt(p.p_hat * (1 - p.p_hat) / 2000), abs=1e-12
    )


def test_born_curve_two_point_noise_family():
    cfg = EnsembleConfig(n_traj=2000, x_grid=(0.3,), noise_family="z2", seed=2)
    p = born_curve(cfg).points[0]
    assert abs(p.p_hat - 0.3) < 5 * math.sqrt(0.3 * 0.7 / 2000)


@pytest.mark.parametrize("scheme", ["ito", "stratonovich_heun"])
def test_born_curve_density_matrix_schemes_agree(scheme):
    cfg = EnsembleConfig(n_traj=1000, x_grid=(0.6,), scheme=scheme, seed=3)
    p = born_curve(cfg).points[0]
    assert abs(p.p_hat - 0.6) < 5 * math.sqrt(0.6 * 0.4 / 1000)
    assert p.unabsorbed_fraction < 0.05


def test_born_curve_biased_walk_model():
    cfg = EnsembleConfig(model="biased_walk", n_traj=2000, x_grid=(0.6,), seed=4)
    p = born_curve(cfg).points[0]
    assert abs(p.p_hat - 0.6) < 5 * math.sqrt(0.6 * 0.4 / 2000)


def test_born_curve_noiseless_step_function():
    cfg = EnsembleConfig(n_traj=300, x_grid=(0.2, 0.8), gs_xi=0.0, seed=5)
    res = born_curve(cfg)
    by_x = {p.x: p for p in res.points}
    assert by_x[0.2].p_hat == 0.0
    assert by_x[0.8].p_hat == 1.0


def test_born_curve_flags_starved_budget():
    cfg = EnsembleConfig(n_traj=400, x_grid=(0.5,), tau_budget=0.5, seed=6)
    res = born_curve(cfg)
    assert res.flagged
    assert res.points[0].unabsorbed_fraction > 0.5


def test_distribution_requires_interior_x():
    cfg = EnsembleConfig(n_traj=100, tau_snapshots=(1.0,))
    with pytest.raises(ValueError, match="interior"):
        distribution_snapshots(cfg, 0.0)


def test_distribution_snapshot_statistics():
    cfg = EnsembleConfig(n_traj=4000, tau_snapshots=(1.0, 3.0), tau_budget=25.0, seed=7)
    res = distribution_snapshots(cfg, 0.6)
    assert [s.tau for s in res.snapshots] == [1.0, 3.0]
    z0 = initial_z(0.6)
    for snap in res.snapshots:
        # martingale: mean tanh z stays at 2x - 1
        assert abs(snap.mean_tanh_z - 0.2) < 5 * snap.sem_tanh_z
        # ensemble coherence factor decays at half the collapse rate
        assert abs(snap.coh_factor_mean - math.exp(-snap.tau / 2)) < 5 * snap.coh_factor_sem
        assert snap.n == 4000
        assert snap.z_values.shape == (4000,)
        assert np.all(np.isfinite(snap.z_values))
        assert set(snap.within) == {0.01, 0.001}
        assert snap.hist_counts.sum() == 4000
    late = res.snapshots[-1]
    assert late.absorbed_fraction >= res.snapshots[0].absorbed_fraction
    for pk in late.peaks:
        target = z0 + late.tau if pk.outcome == 0 else z0 - late.tau
        assert abs(pk.mean_z - target) < 5 * pk.sem_mean
        assert abs(pk.var_z - late.tau) < 5 * pk.sem_var
    assert abs(res.p_hat - 0.6) < 5 * math.sqrt(0.6 * 0.4 / 4000)
    assert res.oracles[0] is not None
    assert res.oracles[0].tanh_moment() == pytest.approx(0.2, abs=1e-9)


def test_distribution_chi_square_is_sane():
    cfg = EnsembleConfig(n_traj=4000, tau_snapshots=(1.0,), tau_budget=25.0, seed=8)
    snap = distribution_snapshots(cfg, 0.6).snapshots[0]
    assert snap.chi2_dof > 20
    # chi2/dof of order one; 3 is a loose 5-sigma-ish ceiling for dof > 20
    assert snap.chi2 / snap.chi2_dof < 3.0


def test_jump_ensemble_requires_interior_x():
    cfg = EnsembleConfig(model="jump", n_traj=100, tau_snapshots=(1.0,), tau_budget=1.0)
    with pytest.raises(ValueError, match="interior"):
        jump_ensemble(cfg, 1.0)


def test_jump_ensemble_rows_match_closed_forms():
    cfg = EnsembleConfig(
        model="jump", n_traj=20_000, tau_snapshots=(0.5, 1.0), tau_budget=1.0, seed=9
    )
    res = jump_ensemble(cfg, 0.6)
    for row in res.rows:
        assert row.moving_pos_oracle == pytest.approx(
            nojump_rho00(0.6, row.tau), abs=1e-12
        )
        assert row.moving_wt_oracle == pytest.approx(
            survival_probability(0.6, row.tau), abs=1e-12
        )
        assert abs(row.moving_pos_emp - row.moving_pos_oracle) <= row.moving_pos_3sigma
        assert abs(row.moving_wt_emp - row.moving_wt_oracle) <= (
            5.0 / 3.0
        ) * row.moving_wt_3sigma
        assert row.coherence_oracle == pytest.approx(
            survival_probability(0.6, row.tau) * nojump_offdiag_factor(0.6, row.tau),
            abs=1e-12,
        )


def test_decoherence_comparison_rejects_unknown_model():
    with pytest.raises(ValueError):
        decoherence_comparison("ballistic", 0.5, (1.0,), n_traj=100)


@pytest.mark.parametrize("model,rate", [("diffusion", 0.5), ("jump", 1.0)])
def test_decoherence_comparison_tracks_channel(model, rate):
    rep = decoherence_comparison(model, 0.5, (0.5, 1.0), n_traj=8000, seed=11)
    for tau, emp, oracle, sem in zip(
        rep.taus, rep.factor_emp, rep.factor_oracle, rep.factor_sem
    ):
        assert oracle == pytest.approx(math.exp(-rate * tau), abs=1e-12)
        assert abs(emp - oracle) < 5 * sem
    assert rep.max_entry_deviation < 0.05


def test_multilevel_noiseless_picks_the_largest_population():
    res = multilevel_ensemble((0.5, 0.3, 0.2), n_traj=64, gs_xi=0.0, seed=12)
    assert res.counts[0] == 64
    assert res.unabsorbed_fraction == 0.0


def test_multilevel_born_frequencies():
    d0 = (0.5, 0.3, 0.2)
    res = multilevel_ensemble(d0, n_traj=5000, tau_budget=40.0, seed=13)
    assert res.counts.sum() + round(res.unabsorbed_fraction * 5000) == 5000
    for d, f in zip(d0, res.freqs):
        assert abs(f - d) < 5 * math.sqrt(d * (1 - d) / 5000)
    assert not res.flagged


def test_multilevel_rejects_bad_populations():
    with pytest.raises(ValueError):
        multilevel_ensemble((0.5, 0.6), n_traj=10)
    with pytest.raises(ValueError):
        multilevel_ensemble((1.0,), n_traj=10)


def test_multilevel_is_reproducible():
    a = multilevel_ensemble((0.4, 0.35, 0.25), n_traj=300, seed=14)
    b = multilevel_ensemble((0.4, 0.35, 0.25), n_traj=300, seed=14)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)
    c = multilevel_ensemble((0.4, 0.35, 0.25), n_traj=300, seed=15)
    assert not np.array_equal(a.outcomes, c.outcomes)
