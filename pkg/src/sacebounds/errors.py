"""Typed exceptions raised across the package.

Every failure mode that callers are expected to handle gets its own class so
that estimation drivers (the bootstrap, the command line) can distinguish
recoverable fitting problems from caller mistakes. All classes derive from
:class:`SaceBoundsError`.
"""

from __future__ import annotations


class SaceBoundsError(Exception):
    """Base class for all package-specific errors."""


# ---------------------------------------------------------------------------
# data layer
# ---------------------------------------------------------------------------


class DataError(SaceBoundsError):
    """A dataset or record violates a structural invariant."""


class MissingColumnError(DataError):
    """A required column is absent from the input file."""


class NonBinaryValueError(DataError):
    """Treatment or existence value outside {0, 1}."""


class OutcomePresentForNonSurvivorError(DataError):
    """A record with existence 0 carries an outcome value."""


class OutcomeMissingForSurvivorError(DataError):
    """A record with existence 1 has no outcome value."""


class NonPositiveWeightError(DataError):
    """A sampling weight is zero, negative, or not finite."""


class InvalidNumericValueError(DataError):
    """A covariate or outcome value is NaN or infinite."""


class EmptyInputError(DataError):
    """An operation received zero records or an empty vector."""


class ZeroTotalWeightError(DataError):
    """Weights sum to zero, so no weighted average exists."""


class DimensionMismatchError(DataError):
    """Covariate vector length differs from the model or dataset dimension."""


# ---------------------------------------------------------------------------
# model fitting
# ---------------------------------------------------------------------------


class FitError(SaceBoundsError):
    """A regression model could not be estimated from the given data."""


class SeparationError(FitError):
    """Logistic fit is degenerate: a response class is perfectly predicted."""


class SingularDesignError(FitError):
    """Design matrix is rank deficient."""


class NoConvergenceError(FitError):
    """Iteratively reweighted least squares hit the iteration cap."""


class DegenerateResidualsError(FitError):
    """All mean-model residuals are zero, so no variance model exists."""


class MissingArmError(FitError):
    """A treatment arm (or an arm within a covariate cell) has no records."""


class TooFewSurvivorsError(FitError):
    """An arm has fewer survivors than outcome-model parameters."""


class NoSurvivorsInCellError(FitError):
    """A covariate cell has no survivors in the requested arm."""


class UnseenCovariateCellError(FitError):
    """Prediction requested for a covariate combination absent from the fit."""


# ---------------------------------------------------------------------------
# identification layer
# ---------------------------------------------------------------------------


class IdentificationError(SaceBoundsError):
    """Inputs to a closed-form identification formula are out of range."""


class OutOfRangeProbabilityError(IdentificationError):
    """A survival probability lies outside [0, 1]."""


class MonotonicityViolatedError(IdentificationError):
    """Fitted survival probabilities contradict the assumed ordering."""


class ZeroSurvivalError(IdentificationError):
    """Conditioning arm has zero survival probability."""


class ShareOutOfRangeError(IdentificationError):
    """Trimming share lies outside (0, 1]."""


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


class NonPositiveVarianceError(SaceBoundsError):
    """A conditional variance used for drawing outcomes is not positive."""


class InvalidSimConfigError(SaceBoundsError):
    """Simulation settings are out of range (mode, draw count)."""


# ---------------------------------------------------------------------------
# estimands
# ---------------------------------------------------------------------------


class EstimandError(SaceBoundsError):
    """An estimand cannot be formed under the requested assumptions or data."""


class WrongMonotonicityForATTError(EstimandError):
    """Treated-survivor bounds require negative monotonicity."""


class MonotonicityRequiredError(EstimandError):
    """The requested estimator needs a monotone direction (or its absence)."""


class NoTreatedSurvivorsError(EstimandError):
    """No treated survivors, so treated-survivor estimands are undefined."""


class NoSurvivorsError(EstimandError):
    """An arm has no survivors, so survivor means are undefined."""


class DegenerateWeightsError(EstimandError):
    """All aggregation weights are zero; the target stratum is empty."""


class EmptyTargetStratumError(EstimandError):
    """The always-survivor stratum has zero mass under the truth or the fit."""


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------


class InferenceError(SaceBoundsError):
    """Resampling inference failed."""


class InvalidLevelError(InferenceError):
    """Confidence level outside (0, 1) or replicate count below 1."""


class TooManyFailedReplicatesError(InferenceError):
    """More than the tolerated fraction of bootstrap replicates failed."""


# ---------------------------------------------------------------------------
# synthetic truth
# ---------------------------------------------------------------------------


class InvalidSpecError(SaceBoundsError):
    """A data-generating specification is inconsistent or incomplete."""


class MonotonicityRequiredBySpecError(SaceBoundsError):
    """A closed-form truth needs a spec with the corresponding stratum empty."""


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


class ConfigError(SaceBoundsError):
    """Run configuration file is malformed or inconsistent."""
