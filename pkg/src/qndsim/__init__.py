"""Stochastic simulator and analytics for quasicontinuous QND photon-number
measurements of a thermally damped field mode."""

__version__ = "0.1.0"

from .core import (
    BathParams,
    BirthDeathGenerator,
    PopulationVector,
    bath_from_boltzmann,
    bath_from_gamma,
    build_generator,
    mean_photon,
    pure_level,
    thermal_populations,
    thermal_tail_mass,
)
from .dynamics import mean_relaxation, propagate, transition_matrix, two_level_population
from .measurement import (
    MeasurementOutcome,
    ProjectorPartition,
    ZeroProbabilityError,
    luders_collapse,
    outcome_probabilities,
    sample_outcome,
)
from .protocol import (
    SEED_DERIVATION,
    MeasurementRecord,
    MeasurementSchedule,
    ZenoDomainWarning,
    ZenoReport,
    run_ensemble,
    run_trajectory_gillespie,
    run_trajectory_luders,
    survival_exponential,
    survival_product,
    trajectory_rng,
    zeno_times,
)
from .stats import (
    DwellStats,
    FitError,
    FitResult,
    FitWindow,
    SurvivalCurve,
    dwell_statistics,
    estimate_survival,
    fit_decay,
    ks_distance,
    time_average,
)

__all__ = [
    "BathParams",
    "BirthDeathGenerator",
    "DwellStats",
    "FitError",
    "FitResult",
    "FitWindow",
    "MeasurementOutcome",
    "MeasurementRecord",
    "MeasurementSchedule",
    "PopulationVector",
    "ProjectorPartition",
    "SEED_DERIVATION",
    "SurvivalCurve",
    "ZenoDomainWarning",
    "ZenoReport",
    "ZeroProbabilityError",
    "bath_from_boltzmann",
    "bath_from_gamma",
    "build_generator",
    "dwell_statistics",
    "estimate_survival",
    "fit_decay",
    "ks_distance",
    "luders_collapse",
    "mean_photon",
    "mean_relaxation",
    "outcome_probabilities",
    "propagate",
    "pure_level",
    "run_ensemble",
    "run_trajectory_gillespie",
    "run_trajectory_luders",
    "sample_outcome",
    "survival_exponential",
    "survival_product",
    "thermal_populations",
    "thermal_tail_mass",
    "time_average",
    "trajectory_rng",
    "transition_matrix",
    "two_level_population",
    "zeno_times",
]
