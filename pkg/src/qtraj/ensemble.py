"""Reproducible vectorized ensembles of collapse trajectories.

This module turns the per-step physics of :mod:`qtraj.diffusion` and
:mod:`qtraj.jump` into batched Monte Carlo runs: Born-rule frequency curves,
distribution snapshots in the collapse coordinate ``z``, the two-point jump
ensemble against its closed form, decoherence curves against the Lindblad
channel, and n-level outcome frequencies.

Reproducibility contract
------------------------
Trajectories are processed in fixed-size batches.  Batch ``b`` of a run
always draws from the substream keyed by ``(seed, batch id)`` regardless of
which worker thread executes it, and partial results are merged in batch
order, so every result -- including full outcome arrays and histograms --
is bit-identical for any worker count.  The worker count comes from the
``workers`` field, else the ``QTRAJ_THREADS`` environment variable
(unset -> 1, ``0`` -> all cores).

Absorption windows
------------------
A diffusive trajectory is scored once ``|z|`` exceeds an absorption window.
At noise coupling ``g S_xi`` the walk returns to the origin from ``|z|``
with probability ``~ exp(-2 |z| / (g S_xi))``, so the window grows with the
noise: ``max(atanh(1 - 2 ABSORB_EPS), 0.5 g S_xi ln 1000)``, keeping the
probability of scoring a trajectory that would still flip below 1e-3.
Runs that collect distribution snapshots use a wider window,
``|z0| + tau_last + 6 sqrt(g S_xi tau_last)``, until the last snapshot so
that absorption cannot clip the distribution being measured.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _streams, analytic
from .diffusion import (
    NOISE_FAMILIES,
    SCHEMES,
    _drift_stratonovich,
    diffusion_amplitude,
    drift_ito,
)
from .jump import nojump_rho00, survival_probability
from .states import ABSORB_EPS

MODELS = ("diffusion", "jump", "biased_walk")

#: Trajectories per RNG batch; the unit of worker scheduling.
DEFAULT_BATCH = 4096

#: A run is flagged when any point leaves more than this fraction unabsorbed.
UNABSORBED_FLAG = 0.01

#: Histogram bins per distribution snapshot.
HIST_BINS = 200

#: Stream-id stride separating the x-grid points of one run.
_X_STRIDE = 1_000_000

#: z beyond which a state counts as collapsed at the default window.
Z_EPS = math.atanh(1.0 - 2.0 * ABSORB_EPS)


def resolve_workers(workers: int | None = None) -> int:
    """Worker thread count: explicit value, else ``QTRAJ_THREADS``, else 1.

    ``QTRAJ_THREADS=0`` means one worker per available core.  The result
    never affects any computed number, only wall-clock time.
    """
    if workers is not None:
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        return int(workers)
    env = os.environ.get("QTRAJ_THREADS")
    if env is None or env.strip() == "":
        return 1
    try:
        value = int(env)
    except ValueError:
        raise ValueError(f"QTRAJ_THREADS must be an integer, got {env!r}") from None
    if value < 0:
        raise ValueError(f"QTRAJ_THREADS must be >= 0, got {value}")
    if value == 0:
        return os.cpu_count() or 1
    return value


def absorption_z(gs_xi: float) -> float:
    """Noise-scaled absorption window in ``z`` (see module docstring)."""
    if gs_xi < 0.0:
        raise ValueError(f"gs_xi must be >= 0, got {gs_xi}")
    return max(Z_EPS, 0.5 * gs_xi * math.log(1000.0))


def initial_z(x: float) -> float:
    """Collapse coordinate of initial population ``x``, interior only."""
    if not (0.0 < x < 1.0):
        raise ValueError(f"x must lie strictly inside (0, 1), got {x}")
    return math.atanh(2.0 * x - 1.0)


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything needed to reproduce one ensemble run.

    ``gs_xi`` is the noise coupling ``g S_xi`` of the diffusive models
    (1 = Born); ``rate_multiplier`` is the click-rate scale of the jump
    model (1 = Born).  ``x_grid`` feeds :func:`born_curve`;
    ``tau_snapshots`` (ascending, within ``tau_budget``) feeds the
    snapshot-taking runs.
    """

    model: str = "diffusion"
    n_traj: int = 100_000
    x_grid: tuple[float, ...] = ()
    gs_xi: float = 1.0
    rate_multiplier: float = 1.0
    g: float = 1.0
    dt: float = 1e-3
    scheme: str = "integrated"
    noise_family: str = "gaussian"
    tau_budget: float = 25.0
    tau_snapshots: tuple[float, ...] = ()
    seed: int = 42
    batch_size: int = DEFAULT_BATCH
    workers: int | None = None

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        for x in self.x_grid:
            if not (0.0 <= x <= 1.0):
                raise ValueError(f"x_grid entries must lie in [0, 1], got {x}")
        if self.gs_xi < 0.0:
            raise ValueError(f"gs_xi must be >= 0, got {self.gs_xi}")
        if self.rate_multiplier < 0.0:
            raise ValueError(
                f"rate_multiplier must be >= 0, got {self.rate_multiplier}"
            )
        if self.g <= 0.0 or self.dt <= 0.0:
            raise ValueError("g and dt must be positive")
        if self.model == "jump":
            if self.rate_multiplier * 2.0 * self.g * self.dt > 0.1 + 1e-12:
                raise ValueError(
                    "per-step click probability cap exceeded; reduce dt or rate"
                )
        elif self.g * self.dt > 0.1 + 1e-12:
            raise ValueError(
                f"g*dt = {self.g * self.dt:.4g} exceeds the stability cap 0.1"
            )
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.noise_family not in NOISE_FAMILIES:
            raise ValueError(
                f"unknown noise family {self.noise_family!r}; "
                f"choose from {NOISE_FAMILIES}"
            )
        if self.tau_budget <= 0.0:
            raise ValueError(f"tau_budget must be positive, got {self.tau_budget}")
        taus = tuple(float(t) for t in self.tau_snapshots)
        if any(t < 0.0 for t in taus):
            raise ValueError("tau_snapshots must be >= 0")
        if any(b < a for a, b in zip(taus, taus[1:])):
            raise ValueError(f"tau_snapshots must be sorted ascending, got {taus}")
        if taus and taus[-1] > self.tau_budget + 1e-12:
            raise ValueError(
                f"last snapshot {taus[-1]} exceeds tau_budget {self.tau_budget}"
            )
        if taus and not (self.model == "jump" or self.scheme == "integrated"):
            raise ValueError(
                "distribution snapshots are computed on the z walk; "
                "use the integrated scheme"
            )
        if self.model == "biased_walk" and abs(self.gs_xi - 1.0) > 1e-12:
            raise ValueError("the biased walk is defined at the Born coupling only")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        object.__setattr__(self, "tau_snapshots", taus)
        object.__setattr__(self, "x_grid", tuple(float(x) for x in self.x_grid))

    @property
    def g_dt(self) -> float:
        return self.g * self.dt

    def n_steps(self) -> int:
        return int(round(self.tau_budget / self.g_dt))

    def snap_steps(self) -> list[int]:
        return [int(round(t / self.g_dt)) for t in self.tau_snapshots]


# ---------------------------------------------------------------------------
# batch plumbing
# ---------------------------------------------------------------------------


def _batch_sizes(n: int, batch: int) -> list[int]:
    sizes = [batch] * (n // batch)
    if n % batch:
        sizes.append(n % batch)
    return sizes


def _map_batches(fn, n_batches: int, workers: int) -> list:
    if workers <= 1 or n_batches <= 1:
        return [fn(b) for b in range(n_batches)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_batches)))


def _unit_noise(rng: np.random.Generator, family: str, m: int) -> np.ndarray:
    if family == "gaussian":
        return rng.standard_normal(m)
    return np.where(rng.random(m) < 0.5, 1.0, -1.0)


def _z_batch(
    rng: np.random.Generator,
    n_b: int,
    z0: float,
    n_steps: int,
    advance,
    deterministic: bool,
    snap_steps: list[int],
    switch_step: int,
    z_abs_early: float,
    z_abs_late: float,
):
    """March one batch of the z walk; see the module docstring for windows.

    Returns ``(outcome, final_z, absorb_tau_steps, snaps)`` where absorbed
    trajectories carry a frozen ``final_z`` of ``+/-window`` and outcome
    0 (up) or 1 (down); unabsorbed ones carry outcome -1 and their live z.
    ``snaps`` holds one full-length z array per requested snapshot step,
    frozen values included.
    """
    rep = 1 if deterministic else n_b
    z = np.full(rep, z0)
    alive = np.arange(rep)
    outcome = np.full(rep, -1, dtype=np.int8)
    final_z = np.full(rep, z0)
    absorb_step = np.full(rep, -1, dtype=np.int64)
    snaps: list[np.ndarray] = []
    ptr = 0
    while ptr < len(snap_steps) and snap_steps[ptr] == 0:
        snaps.append(np.full(rep, z0))
        ptr += 1
    for k in range(1, n_steps + 1):
        if alive.size:
            z = advance(z, rng)
            window = z_abs_early if k <= switch_step else z_abs_late
            done = np.abs(z) >= window
            if done.any():
                idx = alive[done]
                up = z[done] > 0
                outcome[idx] = np.where(up, 0, 1).astype(np.int8)
                final_z[idx] = np.where(up, window, -window)
                absorb_step[idx] = k
                keep = ~done
                z = z[keep]
                alive = alive[keep]
        while ptr < len(snap_steps) and snap_steps[ptr] == k:
            full = final_z.copy()
            full[alive] = z
            snaps.append(full)
            ptr += 1
        if alive.size == 0 and ptr >= len(snap_steps):
            break
    while ptr < len(snap_steps):
        full = final_z.copy()
        full[alive] = z
        snaps.append(full)
        ptr += 1
    final_z[alive] = z
    if rep == 1 and n_b > 1:
        outcome = np.repeat(outcome, n_b)
        final_z = np.repeat(final_z, n_b)
        absorb_step = np.repeat(absorb_step, n_b)
        snaps = [np.repeat(s, n_b) for s in snaps]
    return outcome, final_z, absorb_step, snaps


def _run_z_model(cfg: EnsembleConfig, x: float, x_index: int, wide_window: bool):
    """Batched z-walk ensemble (integrated diffusion or biased walk).

    Returns ``(outcome, final_z, absorb_tau, snaps)`` over the whole
    ensemble, snapshots as full (n_traj,) arrays in snapshot order.
    """
    workers = resolve_workers(cfg.workers)
    gdt = cfg.g_dt
    n_steps = cfg.n_steps()
    snap_steps = cfg.snap_steps()
    z_abs_late = absorption_z(cfg.gs_xi)
    if snap_steps and wide_window:
        t_last = max(cfg.tau_snapshots[-1], 1e-12)
        z_wide = abs(initial_z(x)) + t_last + 6.0 * math.sqrt(cfg.gs_xi * t_last)
        z_abs_early = max(z_abs_late, z_wide)
        switch_step = max(snap_steps)
    else:
        z_abs_early = z_abs_late
        switch_step = 0
    z0 = initial_z(x)
    family = cfg.noise_family

    if cfg.model == "biased_walk":
        eps = analytic.walk_epsilon(gdt)
        teps = math.tanh(eps)

        def advance(z, rng):
            p_up = 0.5 * (1.0 + np.tanh(z) * teps)
            return z + np.where(rng.random(z.size) < p_up, eps, -eps)

        deterministic = False
    else:
        scale = math.sqrt(gdt * cfg.gs_xi)
        deterministic = scale == 0.0

        if deterministic:

            def advance(z, rng):
                return z + gdt * np.tanh(z)

        else:

            def advance(z, rng):
                return z + gdt * np.tanh(z) + scale * _unit_noise(rng, family, z.size)

    sizes = _batch_sizes(cfg.n_traj, cfg.batch_size)

    def run_batch(b: int):
        rng = _streams.substream(cfg.seed, x_index * _X_STRIDE + b, _streams.BATCH)
        return _z_batch(
            rng, sizes[b], z0, n_steps, advance, deterministic,
            snap_steps, switch_step, z_abs_early, z_abs_late,
        )

    parts = _map_batches(run_batch, len(sizes), workers)
    outcome = np.concatenate([p[0] for p in parts])
    final_z = np.concatenate([p[1] for p in parts])
    absorb_step = np.concatenate([p[2] for p in parts])
    absorb_tau = np.where(absorb_step >= 0, absorb_step * gdt, np.nan)
    snaps = [
        np.concatenate([p[3][i] for p in parts]) for i in range(len(snap_steps))
    ]
    return outcome, final_z, absorb_tau, snaps


def _run_rho_model(cfg: EnsembleConfig, x: float, x_index: int) -> np.ndarray:
    """Batched population-space ensemble for the ito / Heun schemes.

    Returns the outcome array only; these schemes exist to cross-check the
    integrated one near the Born coupling, not to take snapshots.
    """
    workers = resolve_workers(cfg.workers)
    g, dt = cfg.g, cfg.dt
    s_xi = cfg.gs_xi / g
    n_steps = cfg.n_steps()
    family = cfg.noise_family
    heun = cfg.scheme == "stratonovich_heun"
    sizes = _batch_sizes(cfg.n_traj, cfg.batch_size)
    sqdt = math.sqrt(dt)

    def run_batch(b: int):
        rng = _streams.substream(cfg.seed, x_index * _X_STRIDE + b, _streams.BATCH)
        n_b = sizes[b]
        rho = np.full(n_b, x)
        alive = np.arange(n_b)
        outcome = np.full(n_b, -1, dtype=np.int8)
        for _ in range(n_steps):
            if not alive.size:
                break
            xi = _unit_noise(rng, family, rho.size)
            if heun:
                a0 = _drift_stratonovich(rho, g)
                b0 = diffusion_amplitude(rho, g, s_xi)
                pred = np.clip(rho + a0 * dt + b0 * sqdt * xi, 0.0, 1.0)
                a1 = _drift_stratonovich(pred, g)
                b1 = diffusion_amplitude(pred, g, s_xi)
                rho = rho + 0.5 * (a0 + a1) * dt + 0.5 * (b0 + b1) * sqdt * xi
            else:
                rho = (
                    rho
                    + drift_ito(rho, g, s_xi) * dt
                    + diffusion_amplitude(rho, g, s_xi) * sqdt * xi
                )
            rho = np.clip(rho, 0.0, 1.0)
            done = (rho >= 1.0 - ABSORB_EPS) | (rho <= ABSORB_EPS)
            if done.any():
                idx = alive[done]
                outcome[idx] = np.where(rho[done] >= 0.5, 0, 1).astype(np.int8)
                keep = ~done
                rho = rho[keep]
                alive = alive[keep]
        return outcome

    parts = _map_batches(run_batch, len(sizes), workers)
    return np.concatenate(parts)


def _run_jump_model(cfg: EnsembleConfig, x: float, x_index: int):
    """Batched jump ensemble.

    All survivors share one deterministic no-click branch, so the branch
    (position, click probability, coherence factor) is precomputed once per
    run and batches only draw the click uniforms.  Returns
    ``(outcome, alive_snaps, pos_snaps, offd_snaps, taus_eff)``.
    """
    workers = resolve_workers(cfg.workers)
    g, dt, lam = cfg.g, cfg.dt, cfg.rate_multiplier
    gdt = cfg.g_dt
    n_steps = cfg.n_steps()
    snap_steps = cfg.snap_steps()

    # no-click branch, shared by every trajectory
    p_seq = np.zeros(n_steps)
    pos_seq = np.zeros(n_steps)
    offd_seq = np.zeros(n_steps)
    y = x
    offd = 1.0
    k_abs = n_steps + 1
    e2 = math.exp(-2.0 * gdt)
    ep, em = math.exp(gdt), math.exp(-gdt)
    for k in range(1, n_steps + 1):
        p_seq[k - 1] = -math.expm1(-lam * 2.0 * g * (1.0 - y) * dt)
        offd = offd / (y * ep + (1.0 - y) * em)
        y = y / (y + (1.0 - y) * e2)
        pos_seq[k - 1] = y
        offd_seq[k - 1] = offd
        if y >= 1.0 - ABSORB_EPS:
            pos_seq[k - 1] = 1.0
            offd_seq[k - 1] = 0.0
            k_abs = k
            break
    last_needed = max([k_abs] + [s for s in snap_steps]) if snap_steps else k_abs
    last_needed = min(last_needed, n_steps)

    sizes = _batch_sizes(cfg.n_traj, cfg.batch_size)

    def run_batch(b: int):
        rng = _streams.substream(cfg.seed, x_index * _X_STRIDE + b, _streams.BATCH)
        n_b = sizes[b]
        alive = np.ones(n_b, dtype=bool)
        outcome = np.full(n_b, -1, dtype=np.int8)
        snaps: list[np.ndarray] = []
        ptr = 0
        while ptr < len(snap_steps) and snap_steps[ptr] == 0:
            snaps.append(alive.copy())
            ptr += 1
        for k in range(1, last_needed + 1):
            if k < k_abs:
                u = rng.random(n_b)
                clicked = alive & (u < p_seq[k - 1])
                if clicked.any():
                    outcome[clicked] = 1
                    alive &= ~clicked
            elif k == k_abs:
                outcome[alive] = 0
            while ptr < len(snap_steps) and snap_steps[ptr] == k:
                snaps.append(alive.copy())
                ptr += 1
        while ptr < len(snap_steps):
            snaps.append(alive.copy())
            ptr += 1
        return outcome, snaps

    parts = _map_batches(run_batch, len(sizes), workers)
    outcome = np.concatenate([p[0] for p in parts])
    alive_snaps = [
        np.concatenate([p[1][i] for p in parts]) for i in range(len(snap_steps))
    ]
    pos_snaps = []
    offd_snaps = []
    for s in snap_steps:
        if s == 0:
            pos_snaps.append(x)
            offd_snaps.append(1.0)
        elif s >= k_abs:
            pos_snaps.append(1.0)
            offd_snaps.append(0.0)
        else:
            pos_snaps.append(float(pos_seq[s - 1]))
            offd_snaps.append(float(offd_seq[s - 1]))
    taus_eff = [s * gdt for s in snap_steps]
    return outcome, alive_snaps, pos_snaps, offd_snaps, taus_eff


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BornPoint:
    """Outcome statistics of one initial population."""

    x: float
    gs_xi: float
    n_total: int
    n_absorbed: int
    p_hat: float
    std_err: float
    unabsorbed_fraction: float
    outcomes: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class BornCurveResult:
    """Estimated outcome-0 probability across an x grid."""

    config: EnsembleConfig
    points: list[BornPoint]
    flagged: bool


@dataclass(frozen=True)
class PeakStats:
    """Per-outcome-class Gaussian peak statistics at one snapshot."""

    outcome: int
    n: int
    mean_z: float
    var_z: float
    sem_mean: float
    sem_var: float


@dataclass(frozen=True)
class SnapshotStats:
    """Distribution of the collapse coordinate at one snapshot time.

    ``within`` maps a population distance ``delta`` to the fraction of
    trajectories within ``delta`` of an eigenstate (``|z| >=
    atanh(1 - 2 delta)``).  ``coh_factor_mean`` is the mean per-trajectory
    coherence ratio ``sech z / sech z0`` with absorbed trajectories counted
    as exactly 0.  ``chi2`` compares histogram counts against the
    closed-form mixture (informational; None off the Born coupling or at
    tau = 0).
    """

    tau: float
    n: int
    absorbed_fraction: float
    mean_tanh_z: float
    sem_tanh_z: float
    mean_sech_z: float
    sem_sech_z: float
    coh_factor_mean: float
    coh_factor_sem: float
    hist_edges: np.ndarray = field(repr=False)
    hist_counts: np.ndarray = field(repr=False)
    chi2: float | None
    chi2_dof: int | None
    peaks: tuple[PeakStats, PeakStats] | None
    within: dict[float, float]
    z_values: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class EnsembleResult:
    """Snapshots plus final outcome tally of one distribution run."""

    config: EnsembleConfig
    x: float
    snapshots: list[SnapshotStats]
    p_hat: float
    std_err: float
    unabsorbed_fraction: float
    sign_classified: int
    flagged: bool
    oracles: list[analytic.GaussianMixture | None]
    outcomes: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class JumpRow:
    """One snapshot of the jump ensemble against its closed form."""

    tau: float
    moving_pos_emp: float
    moving_pos_oracle: float
    moving_pos_3sigma: float
    moving_wt_emp: float
    moving_wt_oracle: float
    moving_wt_3sigma: float
    stationary_wt_emp: float
    stationary_wt_oracle: float
    stationary_wt_3sigma: float
    coherence_emp: float
    coherence_oracle: float
    coherence_sem: float


@dataclass(frozen=True)
class JumpEnsembleResult:
    """Jump ensemble snapshots plus the final outcome tally."""

    config: EnsembleConfig
    x: float
    rows: list[JumpRow]
    p_hat: float
    std_err: float
    unabsorbed_fraction: float
    flagged: bool
    outcomes: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class DecoherenceReport:
    """Ensemble coherence decay against the matching Lindblad channel.

    ``factor_*`` are the coherence ratios ``<rho01>(tau) / rho01(0)``;
    ``max_entry_deviation`` is the largest entry-wise gap between the
    empirical ensemble-mean density matrix and the channel output across
    the requested times.
    """

    model: str
    x: float
    taus: list[float]
    factor_emp: list[float]
    factor_oracle: list[float]
    factor_sem: list[float]
    within_3sem: list[bool]
    max_entry_deviation: float


@dataclass(frozen=True)
class MultilevelResult:
    """Outcome frequencies of an n-level collapse ensemble."""

    d0: np.ndarray
    n_traj: int
    counts: np.ndarray
    freqs: np.ndarray
    std_err: np.ndarray
    unabsorbed_fraction: float
    flagged: bool
    outcomes: np.ndarray = field(repr=False, compare=False)


# ---------------------------------------------------------------------------
# public runs
# ---------------------------------------------------------------------------


def _tally(outcome: np.ndarray) -> tuple[int, int, int]:
    n0 = int(np.count_nonzero(outcome == 0))
    n1 = int(np.count_nonzero(outcome == 1))
    nu = int(np.count_nonzero(outcome == -1))
    return n0, n1, nu


def _edge_point(cfg: EnsembleConfig, x: float) -> BornPoint:
    value = 0 if x >= 0.5 else 1
    outcomes = np.full(cfg.n_traj, value, dtype=np.int8)
    return BornPoint(
        x, cfg.gs_xi, cfg.n_traj, cfg.n_traj, 1.0 - value, 0.0, 0.0, outcomes
    )


def born_curve(cfg: EnsembleConfig) -> BornCurveResult:
    """Estimate the outcome-0 probability over the configured x grid.

    Every x point runs ``n_traj`` trajectories to absorption or the tau
    budget; ``p_hat`` counts outcome 0 over all started trajectories.
    Points leaving more than 1% unabsorbed are flagged (the estimate is
    then a lower bound), not errors.  Initial populations exactly 0 or 1
    are absorbed at start.  Note the noiseless model cannot decide
    ``x = 0.5`` (the walk starts on the unstable equilibrium).
    """
    if not cfg.x_grid:
        raise ValueError("x_grid must be non-empty")
    points = []
    for ix, x in enumerate(cfg.x_grid):
        if x <= ABSORB_EPS or x >= 1.0 - ABSORB_EPS:
            points.append(_edge_point(cfg, x))
            continue
        if cfg.model == "jump":
            outcome = _run_jump_model(cfg, x, ix)[0]
        elif cfg.model == "diffusion" and cfg.scheme != "integrated":
            outcome = _run_rho_model(cfg, x, ix)
        else:
            outcome = _run_z_model(cfg, x, ix, wide_window=False)[0]
        n0, n1, nu = _tally(outcome)
        n = outcome.size
        p_hat = n0 / n
        points.append(
            BornPoint(
                x,
                cfg.gs_xi,
                n,
                n0 + n1,
                p_hat,
                math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n),
                nu / n,
                outcome,
            )
        )
    flagged = any(p.unabsorbed_fraction > UNABSORBED_FLAG for p in points)
    return BornCurveResult(cfg, points, flagged)


def _snapshot_stats(
    tau: float,
    z: np.ndarray,
    absorbed_by_now: np.ndarray,
    z0: float,
    oracle: analytic.GaussianMixture | None,
    eventual: np.ndarray,
    within_deltas: tuple[float, ...],
) -> SnapshotStats:
    n = z.size
    tanh_z = np.tanh(z)
    sech_z = 1.0 / np.cosh(z)
    coh = np.where(absorbed_by_now, 0.0, sech_z / (1.0 / math.cosh(z0)))
    lim = abs(z0) + tau + 5.0 * math.sqrt(tau) if tau > 0 else abs(z0) + 1.0
    edges = np.linspace(-lim, lim, HIST_BINS + 1)
    counts, _ = np.histogram(z, bins=edges)
    chi2 = chi2_dof = None
    if oracle is not None:
        expected = oracle.bin_masses(edges) * n
        use = expected >= 5.0
        if use.sum() >= 2:
            chi2 = float(
                np.sum((counts[use] - expected[use]) ** 2 / expected[use])
            )
            chi2_dof = int(use.sum() - 1)
    peaks = None
    if tau > 0:
        stats = []
        for cls in (0, 1):
            sel = eventual == cls
            m = int(sel.sum())
            if m >= 2:
                vals = z[sel]
                mean = float(vals.mean())
                var = float(vals.var(ddof=1))
                stats.append(
                    PeakStats(
                        cls, m, mean, var,
                        math.sqrt(var / m),
                        var * math.sqrt(2.0 / (m - 1)),
                    )
                )
        if len(stats) == 2:
            peaks = (stats[0], stats[1])
    within = {
        d: float(np.mean(np.abs(tanh_z) >= 1.0 - 2.0 * d)) for d in within_deltas
    }
    return SnapshotStats(
        tau,
        n,
        float(absorbed_by_now.mean()),
        float(tanh_z.mean()),
        float(tanh_z.std(ddof=1) / math.sqrt(n)),
        float(sech_z.mean()),
        float(sech_z.std(ddof=1) / math.sqrt(n)),
        float(coh.mean()),
        float(coh.std(ddof=1) / math.sqrt(n)),
        edges,
        counts,
        chi2,
        chi2_dof,
        peaks,
        within,
        z,
    )


def distribution_snapshots(
    cfg: EnsembleConfig,
    x: float,
    within_deltas: tuple[float, ...] = (0.01, 0.001),
    x_index: int = 0,
) -> EnsembleResult:
    """Measure the z distribution at the configured snapshot times.

    The run keeps a wide absorption window until the last snapshot so the
    measured distribution is the free collapse walk, then shrinks to the
    standard window and continues to the tau budget, so every trajectory
    also gets an eventual outcome.  Trajectories still unabsorbed at the
    budget are classified by the sign of their final z for the peak
    statistics (their count is reported as ``sign_classified``).

    Closed-form mixture oracles are attached per snapshot at the Born
    coupling of the diffusion model; otherwise ``oracles`` holds None.
    """
    if cfg.model not in ("diffusion", "biased_walk"):
        raise ValueError("distribution snapshots apply to the diffusive models")
    if not cfg.tau_snapshots:
        raise ValueError("tau_snapshots must be non-empty")
    if not (0.0 < x < 1.0):
        raise ValueError(
            f"x must be interior for the diffusive models, got {x}"
        )
    outcome, final_z, absorb_tau, snaps = _run_z_model(
        cfg, x, x_index, wide_window=True
    )
    n = outcome.size
    eventual = outcome.copy()
    unab = outcome == -1
    eventual[unab] = np.where(final_z[unab] >= 0.0, 0, 1).astype(np.int8)
    z0 = initial_z(x)
    born = cfg.model == "diffusion" and abs(cfg.gs_xi - 1.0) <= 1e-12
    oracles: list[analytic.GaussianMixture | None] = []
    stats = []
    for tau, z in zip(cfg.tau_snapshots, snaps):
        oracle = None
        if born and tau > 0:
            oracle = analytic.GaussianMixture.from_initial(x, tau)
        oracles.append(oracle)
        absorbed_by_now = np.where(np.isnan(absorb_tau), np.inf, absorb_tau) <= tau
        stats.append(
            _snapshot_stats(tau, z, absorbed_by_now, z0, oracle, eventual, within_deltas)
        )
    n0, n1, nu = _tally(outcome)
    p_hat = n0 / n
    return EnsembleResult(
        cfg,
        x,
        stats,
        p_hat,
        math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n),
        nu / n,
        int(unab.sum()),
        nu / n > UNABSORBED_FLAG,
        oracles,
        outcome,
    )


def jump_ensemble(cfg: EnsembleConfig, x: float, x_index: int = 0) -> JumpEnsembleResult:
    """Run the jump ensemble and tabulate it against the closed form.

    Each row compares the empirical moving-point position and the two
    weights with their closed forms at the configured ``rate_multiplier``;
    3-sigma columns are binomial for the weights and the numerical floor
    1e-9 for the position (the no-click branch is deterministic, so its
    only spread is rounding).  The coherence columns track
    ``<rho01>/rho01(0)``, which equals ``e^{-tau}`` at the Born rate.
    """
    if cfg.model != "jump":
        raise ValueError("jump_ensemble requires model='jump'")
    if not (0.0 < x < 1.0):
        raise ValueError(
            f"x must be interior for the jump ensemble, got {x}"
        )
    outcome, alive_snaps, pos_snaps, offd_snaps, taus_eff = _run_jump_model(
        cfg, x, x_index
    )
    n = outcome.size
    lam = cfg.rate_multiplier
    rows = []
    for tau, alive, pos, offd in zip(taus_eff, alive_snaps, pos_snaps, offd_snaps):
        s_emp = float(alive.mean())
        s_or = float(survival_probability(x, tau, lam))
        pos_or = float(nojump_rho00(x, tau))
        wt_sig = 3.0 * math.sqrt(max(s_or * (1.0 - s_or), 0.0) / n)
        coh_or = s_or / (x * math.exp(tau) + (1.0 - x) * math.exp(-tau))
        coh_emp = s_emp * offd
        coh_sem = offd * math.sqrt(max(s_emp * (1.0 - s_emp), 0.0) / n)
        rows.append(
            JumpRow(
                tau,
                pos if s_emp > 0 else pos_or,
                pos_or,
                1e-9,
                s_emp,
                s_or,
                wt_sig,
                1.0 - s_emp,
                1.0 - s_or,
                wt_sig,
                coh_emp,
                coh_or,
                coh_sem,
            )
        )
    n0, n1, nu = _tally(outcome)
    p_hat = n0 / n
    return JumpEnsembleResult(
        cfg,
        x,
        rows,
        p_hat,
        math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n),
        nu / n,
        nu / n > UNABSORBED_FLAG,
        outcome,
    )


def decoherence_comparison(
    model: str,
    x: float,
    taus: tuple[float, ...],
    n_traj: int = 100_000,
    g: float = 1.0,
    dt: float = 1e-3,
    seed: int = 42,
    batch_size: int = DEFAULT_BATCH,
    workers: int | None = None,
) -> DecoherenceReport:
    """Compare ensemble coherence decay against the Lindblad channel.

    Runs the requested unraveling at its Born coupling and measures the
    coherence ratio at each tau; the oracle is ``e^{-tau/2}`` for the
    diffusive model and ``e^{-tau}`` for the jump model, identical to the
    dephasing channel at the matching rate (``lindblad_gamma``).
    """
    taus = tuple(float(t) for t in taus)
    if model == "diffusion":
        cfg = EnsembleConfig(
            model="diffusion", n_traj=n_traj, g=g, dt=dt,
            tau_budget=max(taus[-1], 1e-9), tau_snapshots=taus, seed=seed,
            batch_size=batch_size, workers=workers,
        )
        res = distribution_snapshots(cfg, x)
        emp = [s.coh_factor_mean for s in res.snapshots]
        sem = [s.coh_factor_sem for s in res.snapshots]
        oracle = [math.exp(-t / 2.0) for t in taus]
        mean_pop = [0.5 * (1.0 + s.mean_tanh_z) for s in res.snapshots]
    elif model == "jump":
        cfg = EnsembleConfig(
            model="jump", n_traj=n_traj, g=g, dt=dt,
            tau_budget=max(taus[-1], 1e-9), tau_snapshots=taus, seed=seed,
            batch_size=batch_size, workers=workers,
        )
        res = jump_ensemble(cfg, x)
        emp = [r.coherence_emp for r in res.rows]
        sem = [r.coherence_sem for r in res.rows]
        oracle = [math.exp(-t) for t in taus]
        mean_pop = None
    else:
        raise ValueError(f"unknown model {model!r} for decoherence comparison")
    rho01_0 = math.sqrt(max(x * (1.0 - x), 0.0))
    dev = max(abs(e - o) * rho01_0 for e, o in zip(emp, oracle))
    if mean_pop is not None:
        dev = max(dev, max(abs(p - x) for p in mean_pop))
    within = [abs(e - o) <= 3.0 * s for e, o, s in zip(emp, oracle, sem)]
    return DecoherenceReport(model, x, list(taus), emp, oracle, sem, within, dev)


def multilevel_ensemble(
    d0,
    n_traj: int = 100_000,
    g: float = 1.0,
    dt: float = 1e-3,
    gs_xi: float = 1.0,
    noise_family: str = "gaussian",
    tau_budget: float = 25.0,
    seed: int = 42,
    batch_size: int = DEFAULT_BATCH,
    workers: int | None = None,
) -> MultilevelResult:
    """n-level collapse ensemble: outcome frequencies vs initial populations.

    Each trajectory steps all n populations with the multiplicative rule
    ``d_j -> d_j exp(2 g dt wbar_j)`` followed by renormalization, where the
    ``wbar_j`` solve the noisy constraint system of
    :func:`qtraj.diffusion.multidim_weights`.  A trajectory is absorbed
    when its largest population reaches ``1 - ABSORB_EPS``.
    """
    from .states import DiagonalWeights
    from .diffusion import _constraint_inverse

    d0 = DiagonalWeights(np.asarray(d0, dtype=float))
    n_lvl = d0.n
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    if g <= 0.0 or dt <= 0.0:
        raise ValueError("g and dt must be positive")
    if g * dt > 0.1 + 1e-12:
        raise ValueError(f"g*dt = {g * dt:.4g} exceeds the stability cap 0.1")
    if gs_xi < 0.0:
        raise ValueError(f"gs_xi must be >= 0, got {gs_xi}")
    if noise_family not in NOISE_FAMILIES:
        raise ValueError(f"unknown noise family {noise_family!r}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    wrk = resolve_workers(workers)
    s_xi = gs_xi / g
    gdt = g * dt
    n_steps = int(round(tau_budget / gdt))
    inv_t = _constraint_inverse(n_lvl).T
    k = np.arange(1, n_lvl)
    coef = np.sqrt(k * (k + 1) * s_xi / (2.0 * dt))
    sizes = _batch_sizes(n_traj, batch_size)

    def run_batch(b: int):
        rng = _streams.substream(seed, b, _streams.MULTI)
        n_b = sizes[b]
        d = np.tile(d0.d, (n_b, 1))
        alive = np.arange(n_b)
        outcome = np.full(n_b, -1, dtype=np.int8)
        for _ in range(n_steps):
            if not alive.size:
                break
            m = d.shape[0]
            if noise_family == "gaussian":
                xi = rng.standard_normal((m, n_lvl - 1))
            else:
                xi = np.where(rng.random((m, n_lvl - 1)) < 0.5, 1.0, -1.0)
            cums = np.cumsum(d, axis=1)
            rhs = np.empty((m, n_lvl))
            rhs[:, 0] = 1.0
            rhs[:, 1:] = cums[:, :-1] - k * d[:, 1:] + coef * xi
            w = rhs @ inv_t
            d = d * np.exp(2.0 * gdt * w)
            d /= d.sum(axis=1, keepdims=True)
            top = d.max(axis=1)
            done = top >= 1.0 - ABSORB_EPS
            if done.any():
                idx = alive[done]
                outcome[idx] = d[done].argmax(axis=1).astype(np.int8)
                keep = ~done
                d = d[keep]
                alive = alive[keep]
        return outcome

    parts = _map_batches(run_batch, len(sizes), wrk)
    outcome = np.concatenate(parts)
    counts = np.array([np.count_nonzero(outcome == j) for j in range(n_lvl)])
    nu = int(np.count_nonzero(outcome == -1))
    freqs = counts / n_traj
    std_err = np.sqrt(np.clip(freqs * (1.0 - freqs), 0.0, None) / n_traj)
    return MultilevelResult(
        d0.d, n_traj, counts, freqs, std_err,
        nu / n_traj, nu / n_traj > UNABSORBED_FLAG, outcome,
    )
