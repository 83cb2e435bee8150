"""Stochastic collapse trajectories for projective quantum measurement.

A qubit (or n-level system) undergoing measurement collapses along the
geodesic of its eigenvalue simplex, driven by either a diffusive white-noise
record or a point-process (jump) record.  This package simulates single
trajectories and large ensembles of both unravelings, keeps the
off-diagonal coherences slaved to the populations, and checks the physics
against closed-form results: Born-rule outcome frequencies, the two-peak
log-odds distribution, ensemble decoherence factors, equivalent Kraus and
Lindblad channel forms, and fluctuation-dissipation residuals.

Main entry points
-----------------
- :func:`qtraj.states.pure_state`, :class:`qtraj.states.QubitState`
- :func:`qtraj.diffusion.simulate_trajectory` (diffusive record)
- :func:`qtraj.jump.simulate_jump_trajectory` (point-process record)
- :func:`qtraj.ensemble.born_curve`, :func:`qtraj.ensemble.distribution_snapshots`,
  :func:`qtraj.ensemble.jump_ensemble`, :func:`qtraj.ensemble.multilevel_ensemble`
- :mod:`qtraj.analytic` (closed-form densities, channels, and checks)
- :func:`qtraj.verify.run_all` (acceptance checks; also ``qtraj verify``)
"""

from .analytic import (
    GaussianMixture,
    JumpSplit,
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
from .diffusion import (
    DiffusionParams,
    NoiseSpec,
    sample_wbar,
    simulate_trajectory,
    step_integrated,
    step_ito,
    step_stratonovich_heun,
    step_z,
)
from .ensemble import (
    BornCurveResult,
    EnsembleConfig,
    EnsembleResult,
    JumpEnsembleResult,
    MultilevelResult,
    absorption_z,
    born_curve,
    decoherence_comparison,
    distribution_snapshots,
    initial_z,
    jump_ensemble,
    multilevel_ensemble,
)
from .jump import (
    JumpParams,
    jump_step,
    nojump_offdiag_factor,
    nojump_rho00,
    simulate_jump_trajectory,
    survival_probability,
)
from .states import (
    DiagonalWeights,
    QubitState,
    TrajectoryRecord,
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
from .verify import CheckResult, run_all

__version__ = "0.1.0"

__all__ = [
    "BornCurveResult",
    "CheckResult",
    "DiagonalWeights",
    "DiffusionParams",
    "EnsembleConfig",
    "EnsembleResult",
    "GaussianMixture",
    "JumpEnsembleResult",
    "JumpParams",
    "JumpSplit",
    "KrausPair",
    "MultilevelResult",
    "NoiseSpec",
    "QubitState",
    "TrajectoryRecord",
    "TrajectoryWeights",
    "ZCoordinate",
    "absorption_z",
    "biased_walk_step",
    "born_curve",
    "decoherence_comparison",
    "diffusion_ensemble_mean",
    "distribution_snapshots",
    "fd_check_diffusion",
    "fd_check_jump",
    "fokker_planck_density",
    "from_z",
    "geodesic_rhs",
    "initial_z",
    "jump_distribution",
    "jump_ensemble",
    "jump_step",
    "kraus_apply",
    "lindblad_gamma",
    "lindblad_solution",
    "multilevel_ensemble",
    "nojump_offdiag_factor",
    "nojump_rho00",
    "offdiag_evolve",
    "pure_state",
    "purity_defect",
    "run_all",
    "sample_wbar",
    "simulate_jump_trajectory",
    "simulate_trajectory",
    "step_integrated",
    "step_ito",
    "step_stratonovich_heun",
    "step_z",
    "survival_probability",
    "to_z",
    "walk_epsilon",
    "weighted_geodesic_rhs",
]
