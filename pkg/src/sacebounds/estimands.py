"""Estimators for effects when treatment changes outcome existence.

Two families of targets. The effect on existence itself (did treatment
create or destroy outcomes?) is point identified under exchangeability. The
effect on the outcome among always-survivors, the units whose outcome exists
under either arm, is only partially identified: the observed survivor
distribution in a mixture arm is trimmed to its best and worst
``share``-fraction means, and the per-unit bounds are aggregated over the
target population.

Every estimator takes an existence model and (where outcomes matter) an
outcome model satisfying the small interface shared by
:mod:`sacebounds.glm` and :mod:`sacebounds.plugin`, so the parametric and
saturated plug-in paths are interchangeable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .data import Dataset, weighted_mean
from .errors import (
    DegenerateWeightsError,
    EmptyInputError,
    FitError,
    MonotonicityRequiredError,
    NoSurvivorsError,
    NoTreatedSurvivorsError,
    WrongMonotonicityForATTError,
)
from .glm import fit_existence_model, fit_outcome_model
from .identification import (
    Monotonicity,
    stratum_bounds,
    stratum_point_monotone,
    survivor_share_given_survival,
)
from .plugin import fit_empirical_outcome, fit_saturated_existence
from .simulate import SimConfig


class MeanDominance(str, Enum):
    """Optional ordering of stratum outcome means used to tighten one endpoint.

    ``POSITIVE_Y0`` asserts that always-survivors have control-outcome means
    at least as large as the units mixed in with them in the control arm, so
    the untrimmed fitted mean becomes a valid lower endpoint there.
    ``NEGATIVE_Y0`` flips the ordering and tightens the upper endpoint. The
    ``Y1`` variants act on the treated arm. A variant only binds where the
    corresponding arm is a stratum mixture; elsewhere it is ignored and
    counted in the diagnostics.
    """

    NONE = "none"
    POSITIVE_Y0 = "positive_y0"
    NEGATIVE_Y0 = "negative_y0"
    POSITIVE_Y1 = "positive_y1"
    NEGATIVE_Y1 = "negative_y1"


@dataclass(frozen=True)
class AssumptionSet:
    """Identification assumptions beyond exchangeability."""

    monotonicity: Monotonicity = Monotonicity.NONE
    mean_dominance: MeanDominance = MeanDominance.NONE

    def __post_init__(self) -> None:
        object.__setattr__(self, "monotonicity", Monotonicity(self.monotonicity))
        object.__setattr__(self, "mean_dominance", MeanDominance(self.mean_dominance))


@dataclass(frozen=True)
class BoundInterval:
    """An identified interval for one estimand.

    ``lower == upper`` for point-identified estimands. ``diagnostics`` holds
    integer event counts (clamps, ignored assumptions) and engine metadata.
    """

    lower: float
    upper: float
    estimand: str
    assumptions: AssumptionSet
    diagnostics: dict = field(default_factory=dict)

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ConditionalBounds:
    """Per-unit ingredients of an aggregated bound (NaN where undefined).

    ``weight_lower`` and ``weight_upper`` delimit each unit's admissible
    contribution to the always-survivor average; they coincide under a
    monotone direction.
    """

    unit_indices: np.ndarray
    survival_treated: np.ndarray
    survival_control: np.ndarray
    mu_treated_lower: np.ndarray
    mu_treated_upper: np.ndarray
    mu_control_lower: np.ndarray
    mu_control_upper: np.ndarray
    tau_lower: np.ndarray
    tau_upper: np.ndarray
    weight_lower: np.ndarray
    weight_upper: np.ndarray


ESTIMANDS = ("existence_ate", "existence_att", "sace_ate", "sace_att")
ENGINES = ("auto", "parametric", "plugin")


@dataclass(frozen=True)
class EstimatorConfig:
    """What to estimate and how.

    ``engine`` chooses between the per-arm regressions ("parametric"), the
    saturated cell plug-in ("plugin"), and trying the regressions first with
    a fallback to the plug-in on a typed fitting error ("auto").
    """

    estimand: str
    assumptions: AssumptionSet = AssumptionSet()
    sim: SimConfig = SimConfig()
    engine: str = "auto"
    on_separation: str = "raise"

    def __post_init__(self) -> None:
        if self.estimand not in ESTIMANDS:
            raise ValueError(f"estimand {self.estimand!r} not one of {ESTIMANDS}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine {self.engine!r} not one of {ENGINES}")
        if self.on_separation not in ("raise", "clamp"):
            raise ValueError(f"on_separation {self.on_separation!r} not 'raise' or 'clamp'")


@dataclass(frozen=True)
class FittedModels:
    """Models produced for one dataset, with the engine that produced them."""

    existence: object
    outcome: Optional[object]
    engine: str
    fallback_from: Optional[str] = None


def fit_models(data: Dataset, config: EstimatorConfig) -> FittedModels:
    """Fit whatever the configured estimand needs.

    With ``engine="auto"`` the regressions are tried first; if any raises a
    :class:`FitError` the saturated plug-in is attempted, and if that fails
    too the original regression error propagates (the design was not
    plug-in estimable either).
    """
    need_outcome = config.estimand in ("sace_ate", "sace_att")
    if config.engine in ("parametric", "auto"):
        try:
            existence = fit_existence_model(data, on_separation=config.on_separation)
            outcome = fit_outcome_model(data) if need_outcome else None
            return FittedModels(existence=existence, outcome=outcome, engine="parametric")
        except FitError as err:
            if config.engine == "parametric":
                raise
            original = err
        try:
            existence = fit_saturated_existence(data)
            outcome = fit_empirical_outcome(data) if need_outcome else None
        except FitError:
            raise original
        return FittedModels(
            existence=existence,
            outcome=outcome,
            engine="plugin",
            fallback_from=f"{type(original).__name__}: {original}",
        )
    existence = fit_saturated_existence(data)
    outcome = fit_empirical_outcome(data) if need_outcome else None
    return FittedModels(existence=existence, outcome=outcome, engine="plugin")


def resolve_engine(data: Dataset, config: EstimatorConfig) -> EstimatorConfig:
    """Pin ``engine="auto"`` to whichever engine actually fits this dataset."""
    if config.engine != "auto":
        return config
    return replace(config, engine=fit_models(data, config).engine)


def effect_on_existence(
    data: Dataset,
    existence_model,
    population: str = "all",
    assumptions: AssumptionSet = AssumptionSet(),
) -> BoundInterval:
    """Average effect of treatment on whether the outcome exists.

    Point identified under exchangeability: the weighted average of
    ``P(exists | treated, x) - P(exists | control, x)`` over the requested
    population ("all" units or "treated" units).
    """
    if population not in ("all", "treated"):
        raise ValueError(f"population {population!r} not 'all' or 'treated'")
    mask = np.ones(data.n, dtype=bool) if population == "all" else data.treatment == 1
    if not mask.any():
        raise EmptyInputError("no treated units to average over")
    X = data.covariates[mask]
    gap = existence_model.predict(1, X) - existence_model.predict(0, X)
    value = weighted_mean(gap, data.weight[mask])
    return BoundInterval(
        lower=value,
        upper=value,
        estimand="existence_ate" if population == "all" else "existence_att",
        assumptions=assumptions,
        diagnostics={"n_units": int(mask.sum())},
    )


def naive_estimate(data: Dataset) -> float:
    """Difference of weighted survivor outcome means, treated minus control.

    The comparison everyone reaches for first; it conditions on survival and
    therefore mixes strata whenever treatment moves existence.
    """
    means = []
    for arm in (0, 1):
        mask = (data.treatment == arm) & (data.existence == 1)
        if not mask.any():
            raise NoSurvivorsError(f"no survivors in arm {arm}")
        means.append(weighted_mean(data.outcome[mask], data.weight[mask]))
    return means[1] - means[0]


def adjusted_naive_estimate(data: Dataset, outcome_model) -> float:
    """Covariate-adjusted survivor contrast averaged over treated survivors."""
    mask = (data.treatment == 1) & (data.existence == 1)
    if not mask.any():
        raise NoTreatedSurvivorsError("no treated survivors")
    X = data.covariates[mask]
    gap = outcome_model.conditional_mean(1, X) - outcome_model.conditional_mean(0, X)
    return weighted_mean(gap, data.weight[mask])


def _dominance_adjust(
    lower: np.ndarray,
    upper: np.ndarray,
    mean: np.ndarray,
    dominance: MeanDominance,
    arm: int,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Tighten one endpoint of a mixture arm's bounds; report whether it bound."""
    targets = {
        0: (MeanDominance.POSITIVE_Y0, MeanDominance.NEGATIVE_Y0),
        1: (MeanDominance.POSITIVE_Y1, MeanDominance.NEGATIVE_Y1),
    }[arm]
    if dominance == targets[0]:
        return np.maximum(lower, mean), upper, True
    if dominance == targets[1]:
        return lower, np.minimum(upper, mean), True
    return lower, upper, False


def att_bounds(
    data: Dataset,
    existence_model,
    outcome_model,
    assumptions: AssumptionSet,
    sim: Optional[SimConfig] = None,
    replicate: int = 0,
) -> BoundInterval:
    """Bounds on the always-survivor effect among the treated.

    Requires negative monotonicity (treatment can only destroy existence),
    under which every treated survivor is an always-survivor: their observed
    outcomes give the treated side exactly, and the control side is the
    always-survivor share of each unit's control-survivor distribution,
    trimmed from both ends.
    """
    if assumptions.monotonicity is not Monotonicity.NEGATIVE:
        raise WrongMonotonicityForATTError(
            "treated-survivor bounds need negative monotonicity; under other assumptions "
            "treated survivors are not all always-survivors"
        )
    mask = (data.treatment == 1) & (data.existence == 1)
    if not mask.any():
        raise NoTreatedSurvivorsError("no treated survivors")
    X = data.covariates[mask]
    w = data.weight[mask]
    y = data.outcome[mask]
    p_treated = existence_model.predict(1, X)
    p_control = existence_model.predict(0, X)
    shares = survivor_share_given_survival(
        p_treated, p_control, arm=0, direction=Monotonicity.NEGATIVE
    )
    clamps = int(np.sum(p_treated > p_control))
    unit_indices = np.flatnonzero(mask)
    control_lower, control_upper = outcome_model.trimmed_bounds(
        0, X, shares, sim=sim, unit_indices=unit_indices, replicate=replicate
    )
    control_mean = outcome_model.conditional_mean(0, X)
    control_lower, control_upper, bound = _dominance_adjust(
        control_lower, control_upper, control_mean, assumptions.mean_dominance, arm=0
    )
    ignored = int(assumptions.mean_dominance is not MeanDominance.NONE and not bound)
    return BoundInterval(
        lower=weighted_mean(y - control_upper, w),
        upper=weighted_mean(y - control_lower, w),
        estimand="sace_att",
        assumptions=assumptions,
        diagnostics={
            "n_units": int(mask.sum()),
            "monotonicity_clamps": clamps,
            "dominance_ignored": ignored,
        },
    )


def compute_conditional_bounds(
    data: Dataset,
    existence_model,
    outcome_model,
    assumptions: AssumptionSet,
    sim: Optional[SimConfig] = None,
    replicate: int = 0,
) -> ConditionalBounds:
    """Per-unit bounds and weight intervals for the population estimand.

    Units whose upper stratum share is zero cannot be always-survivors; their
    outcome bounds are left NaN and their weight interval is [0, 0], so they
    drop out of any aggregation.
    """
    direction = assumptions.monotonicity
    X = data.covariates
    n = data.n
    p_treated = existence_model.predict(1, X)
    p_control = existence_model.predict(0, X)
    unit_indices = np.arange(n)

    mu_t_lower = np.full(n, np.nan)
    mu_t_upper = np.full(n, np.nan)
    mu_c_lower = np.full(n, np.nan)
    mu_c_upper = np.full(n, np.nan)

    if direction is Monotonicity.NONE:
        pi_lower, pi_upper = stratum_bounds(p_treated, p_control)
        weight_lower = data.weight * pi_lower
        weight_upper = data.weight * pi_upper
        active = pi_upper > 0.0
        arms = {
            1: (mu_t_lower, mu_t_upper),
            0: (mu_c_lower, mu_c_upper),
        }
        for arm, (lo_out, up_out) in arms.items():
            own = (p_treated if arm == 1 else p_control)[active]
            shares = pi_lower[active] / own
            lo = np.empty(shares.shape[0])
            up = np.empty(shares.shape[0])
            trim = shares > 0.0
            if trim.any():
                rows = np.flatnonzero(active)[trim]
                lo[trim], up[trim] = outcome_model.trimmed_bounds(
                    arm,
                    X[rows],
                    shares[trim],
                    sim=sim,
                    unit_indices=rows,
                    replicate=replicate,
                )
            if (~trim).any():
                rows = np.flatnonzero(active)[~trim]
                lo[~trim], up[~trim] = outcome_model.support_bounds(arm, X[rows])
            mean = outcome_model.conditional_mean(arm, X[np.flatnonzero(active)])
            lo, up, _ = _dominance_adjust(lo, up, mean, assumptions.mean_dominance, arm)
            lo_out[active] = lo
            up_out[active] = up
    else:
        pi_point = stratum_point_monotone(p_treated, p_control, direction)
        weight_lower = data.weight * pi_point
        weight_upper = weight_lower
        active = pi_point > 0.0
        rows = np.flatnonzero(active)
        mixture_arm = 0 if direction is Monotonicity.NEGATIVE else 1
        pure_arm = 1 - mixture_arm
        shares = survivor_share_given_survival(
            p_treated[active], p_control[active], arm=mixture_arm, direction=direction
        )
        mix_lower, mix_upper = outcome_model.trimmed_bounds(
            mixture_arm, X[rows], shares, sim=sim, unit_indices=rows, replicate=replicate
        )
        mix_mean = outcome_model.conditional_mean(mixture_arm, X[rows])
        mix_lower, mix_upper, _ = _dominance_adjust(
            mix_lower, mix_upper, mix_mean, assumptions.mean_dominance, mixture_arm
        )
        pure_mean = outcome_model.conditional_mean(pure_arm, X[rows])
        if mixture_arm == 0:
            mu_c_lower[active], mu_c_upper[active] = mix_lower, mix_upper
            mu_t_lower[active] = mu_t_upper[active] = pure_mean
        else:
            mu_t_lower[active], mu_t_upper[active] = mix_lower, mix_upper
            mu_c_lower[active] = mu_c_upper[active] = pure_mean

    with np.errstate(invalid="ignore"):
        tau_lower = mu_t_lower - mu_c_upper
        tau_upper = mu_t_upper - mu_c_lower
    return ConditionalBounds(
        unit_indices=unit_indices,
        survival_treated=p_treated,
        survival_control=p_control,
        mu_treated_lower=mu_t_lower,
        mu_treated_upper=mu_t_upper,
        mu_control_lower=mu_c_lower,
        mu_control_upper=mu_c_upper,
        tau_lower=tau_lower,
        tau_upper=tau_upper,
        weight_lower=weight_lower,
        weight_upper=weight_upper,
    )


def ate_bounds_monotone(
    data: Dataset,
    existence_model,
    outcome_model,
    assumptions: AssumptionSet,
    sim: Optional[SimConfig] = None,
    replicate: int = 0,
) -> BoundInterval:
    """Population always-survivor bounds under a monotone direction.

    The always-survivor share of each unit is point identified, so the
    per-unit bounds aggregate with fixed weights ``sampling weight x fitted
    share``.
    """
    if assumptions.monotonicity is Monotonicity.NONE:
        raise MonotonicityRequiredError("use ate_bounds_no_monotonicity without an ordering")
    cond = compute_conditional_bounds(
        data, existence_model, outcome_model, assumptions, sim=sim, replicate=replicate
    )
    weights = cond.weight_lower
    total = float(np.sum(weights))
    if total <= 0.0:
        raise DegenerateWeightsError("fitted always-survivor share is zero everywhere")
    active = weights > 0.0
    lower = float(np.sum(weights[active] * cond.tau_lower[active]) / total)
    upper = float(np.sum(weights[active] * cond.tau_upper[active]) / total)
    p_treated, p_control = cond.survival_treated, cond.survival_control
    if assumptions.monotonicity is Monotonicity.NEGATIVE:
        clamps = int(np.sum(p_treated > p_control))
    else:
        clamps = int(np.sum(p_control > p_treated))
    mixture_arm = 0 if assumptions.monotonicity is Monotonicity.NEGATIVE else 1
    targets = (MeanDominance.POSITIVE_Y0, MeanDominance.NEGATIVE_Y0) if mixture_arm == 0 else (
        MeanDominance.POSITIVE_Y1,
        MeanDominance.NEGATIVE_Y1,
    )
    ignored = int(
        assumptions.mean_dominance is not MeanDominance.NONE
        and assumptions.mean_dominance not in targets
    )
    return BoundInterval(
        lower=lower,
        upper=upper,
        estimand="sace_ate",
        assumptions=assumptions,
        diagnostics={
            "n_units": data.n,
            "n_active": int(active.sum()),
            "monotonicity_clamps": clamps,
            "dominance_ignored": ignored,
        },
    )


def _sweep_lowest_mean(tau: np.ndarray, w_lower: np.ndarray, w_upper: np.ndarray) -> float:
    """Minimize a weighted mean of ``tau`` over per-unit weight intervals.

    Starting from all weights at their lower endpoints, raising a unit's
    weight to its upper endpoint lowers the mean exactly when its ``tau``
    lies below the current mean. Visiting units in ascending ``tau`` order
    and stopping at the first unit that fails the test reaches the minimum,
    because the current mean only decreases along the way.
    """
    order = np.argsort(tau, kind="stable")
    with np.errstate(invalid="ignore"):
        contributions = np.where(w_lower > 0.0, w_lower * tau, 0.0)
    numerator = float(np.sum(contributions))
    denominator = float(np.sum(w_lower))
    for j in order:
        value = float(tau[j])
        if denominator > 0.0 and value >= numerator / denominator:
            break
        delta = float(w_upper[j] - w_lower[j])
        if delta <= 0.0:
            continue
        numerator += delta * value
        denominator += delta
    if denominator <= 0.0:
        raise DegenerateWeightsError("all weight intervals are degenerate at zero")
    return numerator / denominator


def ate_bounds_no_monotonicity(
    data: Dataset,
    existence_model,
    outcome_model,
    assumptions: AssumptionSet,
    sim: Optional[SimConfig] = None,
    replicate: int = 0,
) -> BoundInterval:
    """Population always-survivor bounds with no existence ordering.

    Both the per-unit outcome bounds and the per-unit weights are intervals.
    The reported bounds optimize the weighted average over the product of
    weight intervals by the sequential sweep described in
    :func:`_sweep_lowest_mean` (and its mirror image for the upper bound).
    """
    if assumptions.monotonicity is not Monotonicity.NONE:
        raise MonotonicityRequiredError(
            "a monotone direction was assumed; use ate_bounds_monotone"
        )
    cond = compute_conditional_bounds(
        data, existence_model, outcome_model, assumptions, sim=sim, replicate=replicate
    )
    active = cond.weight_upper > 0.0
    if not active.any():
        raise DegenerateWeightsError("no unit can be an always-survivor under the fit")
    tau_lower = cond.tau_lower[active]
    tau_upper = cond.tau_upper[active]
    w_lower = cond.weight_lower[active]
    w_upper = cond.weight_upper[active]
    lower = _sweep_lowest_mean(tau_lower, w_lower, w_upper)
    upper = -_sweep_lowest_mean(-tau_upper, w_lower, w_upper)
    return BoundInterval(
        lower=lower,
        upper=upper,
        estimand="sace_ate",
        assumptions=assumptions,
        diagnostics={
            "n_units": data.n,
            "n_active": int(active.sum()),
            "zero_share_units": int(np.sum(cond.weight_lower[active] == 0.0)),
            "infinite_endpoints": int(
                np.sum(np.isinf(tau_lower)) + np.sum(np.isinf(tau_upper))
            ),
        },
    )


def estimate_interval(
    data: Dataset, config: EstimatorConfig, replicate: int = 0
) -> BoundInterval:
    """Fit models per the config and evaluate the configured estimand."""
    models = fit_models(data, config)
    if config.estimand in ("existence_ate", "existence_att"):
        population = "all" if config.estimand == "existence_ate" else "treated"
        result = effect_on_existence(
            data, models.existence, population=population, assumptions=config.assumptions
        )
    elif config.estimand == "sace_att":
        result = att_bounds(
            data,
            models.existence,
            models.outcome,
            config.assumptions,
            sim=config.sim,
            replicate=replicate,
        )
    elif config.assumptions.monotonicity is Monotonicity.NONE:
        result = ate_bounds_no_monotonicity(
            data,
            models.existence,
            models.outcome,
            config.assumptions,
            sim=config.sim,
            replicate=replicate,
        )
    else:
        result = ate_bounds_monotone(
            data,
            models.existence,
            models.outcome,
            config.assumptions,
            sim=config.sim,
            replicate=replicate,
        )
    diagnostics = dict(result.diagnostics)
    diagnostics["engine"] = models.engine
    if models.fallback_from is not None:
        diagnostics["engine_fallback_from"] = models.fallback_from
    return replace(result, diagnostics=diagnostics)
