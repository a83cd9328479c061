"""Bounds on average causal effects when treatment changes outcome existence.

When a treatment can create or destroy the very outcome being studied
(employment status of a wage, survival of a patient, firm existence of a
profit figure), comparing observed outcomes across arms mixes units whose
outcome exists for different reasons. This package estimates the effect on
existence itself and sharp bounds on the outcome effect within the
always-survivor stratum, with optional monotonicity and mean-dominance
assumptions, parametric or saturated plug-in estimation, and bootstrap
confidence intervals.
"""

__version__ = "0.1.0"

from .data import CsvSchema, Dataset, UnitRecord, load_csv, save_csv, weighted_mean
from .estimands import (
    AssumptionSet,
    BoundInterval,
    ConditionalBounds,
    EstimatorConfig,
    MeanDominance,
    adjusted_naive_estimate,
    ate_bounds_monotone,
    ate_bounds_no_monotonicity,
    att_bounds,
    compute_conditional_bounds,
    effect_on_existence,
    estimate_interval,
    fit_models,
    naive_estimate,
    resolve_engine,
)
from .glm import (
    BinaryFit,
    ExistenceModel,
    MeanFit,
    OutcomeModel,
    VarFit,
    fit_existence_model,
    fit_outcome_model,
)
from .identification import (
    Monotonicity,
    StratumShares,
    stratum_bounds,
    stratum_point_monotone,
    survivor_share_given_survival,
    trimmed_mean_bounds,
)
from .inference import BootstrapInterval, bootstrap
from .oracle import CellSpec, DgpSpec, StratumSpec, TruthReport, bias_naive, four_women_spec, generate, truth
from .plugin import (
    EmpiricalOutcomeModel,
    SaturatedExistenceModel,
    fit_empirical_outcome,
    fit_saturated_existence,
)
from .simulate import (
    SimConfig,
    SimMode,
    analytic_trimmed_bounds,
    draw_conditional,
    sim_trimmed_bounds,
    unit_stream,
)

__all__ = [
    "AssumptionSet",
    "BinaryFit",
    "BootstrapInterval",
    "BoundInterval",
    "CellSpec",
    "ConditionalBounds",
    "CsvSchema",
    "Dataset",
    "DgpSpec",
    "EmpiricalOutcomeModel",
    "EstimatorConfig",
    "ExistenceModel",
    "MeanDominance",
    "MeanFit",
    "Monotonicity",
    "OutcomeModel",
    "SaturatedExistenceModel",
    "SimConfig",
    "SimMode",
    "StratumShares",
    "StratumSpec",
    "TruthReport",
    "UnitRecord",
    "VarFit",
    "adjusted_naive_estimate",
    "analytic_trimmed_bounds",
    "ate_bounds_monotone",
    "ate_bounds_no_monotonicity",
    "att_bounds",
    "bias_naive",
    "bootstrap",
    "compute_conditional_bounds",
    "draw_conditional",
    "effect_on_existence",
    "estimate_interval",
    "fit_empirical_outcome",
    "fit_existence_model",
    "fit_models",
    "fit_outcome_model",
    "fit_saturated_existence",
    "four_women_spec",
    "generate",
    "load_csv",
    "naive_estimate",
    "resolve_engine",
    "save_csv",
    "sim_trimmed_bounds",
    "stratum_bounds",
    "stratum_point_monotone",
    "survivor_share_given_survival",
    "trimmed_mean_bounds",
    "truth",
    "unit_stream",
    "weighted_mean",
]
