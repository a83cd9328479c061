"""Closed-form identification quantities.

Everything in this module is a deterministic formula: bounds on the share of
always-survivors (units whose outcome exists under either treatment), point
identification of that share under a monotonicity assumption, the share of
observed survivors in one arm who are always-survivors, and trimmed means of a
weighted sample. No fitting happens here; the inputs are probabilities and
samples produced elsewhere.

Functions accept scalars or arrays for the probability arguments and return
matching shapes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    InvalidNumericValueError,
    MonotonicityRequiredError,
    MonotonicityViolatedError,
    NonPositiveWeightError,
    OutOfRangeProbabilityError,
    ShareOutOfRangeError,
    ZeroSurvivalError,
)

#: Tolerated estimation slack before a monotonicity assumption is declared
#: violated. Fitted survival probabilities may disagree with the assumed
#: ordering by sampling noise; beyond this margin the contradiction is treated
#: as real and an error is raised instead of silently clamping.
MONOTONICITY_SLACK = 0.02


class Monotonicity(str, Enum):
    """Assumed ordering of potential existence.

    ``POSITIVE`` means treatment can only create existence (potential survival
    under treatment is at least that under control for every unit).
    ``NEGATIVE`` means treatment can only destroy it. ``NONE`` assumes no
    ordering.
    """

    NONE = "none"
    POSITIVE = "positive"
    NEGATIVE = "negative"


def _check_prob(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.size == 0:
        raise EmptyInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise OutOfRangeProbabilityError(f"{name} contains a non-finite value")
    if (arr < 0.0).any() or (arr > 1.0).any():
        bad = arr[(arr < 0.0) | (arr > 1.0)].flat[0]
        raise OutOfRangeProbabilityError(f"{name} = {bad!r} outside [0, 1]")
    return arr


def _pair(p_treated, p_control) -> tuple[np.ndarray, np.ndarray, bool]:
    a1 = _check_prob("p_treated", p_treated)
    a0 = _check_prob("p_control", p_control)
    scalar = a1.ndim == 0 and a0.ndim == 0
    a1, a0 = np.broadcast_arrays(a1, a0)
    return np.asarray(a1, dtype=float), np.asarray(a0, dtype=float), scalar


def stratum_bounds(p_treated, p_control):
    """Sharp bounds on the always-survivor share without monotonicity.

    With survival probabilities ``p_treated`` and ``p_control`` in an
    exchangeable cell, the probability that a unit survives under both arms
    lies between ``max(0, p_treated + p_control - 1)`` (Frechet lower bound)
    and ``min(p_treated, p_control)``.

    Returns
    -------
    (lower, upper)
        Floats for scalar input, arrays otherwise.
    """
    a1, a0, scalar = _pair(p_treated, p_control)
    lower = np.maximum(0.0, a1 + a0 - 1.0)
    upper = np.minimum(a1, a0)
    if scalar:
        return float(lower), float(upper)
    return lower, upper


def _violation(a1: np.ndarray, a0: np.ndarray, direction: Monotonicity) -> np.ndarray:
    if direction is Monotonicity.NEGATIVE:
        # survival can only drop, so p_treated should not exceed p_control
        return a1 - a0
    return a0 - a1


def _require_ordering(a1, a0, direction, slack) -> None:
    excess = _violation(a1, a0, direction)
    worst = float(np.max(excess))
    if worst > slack:
        idx = int(np.argmax(excess))
        raise MonotonicityViolatedError(
            f"{direction.value} monotonicity violated by {worst:.4g} "
            f"(> slack {slack:g}) at position {idx}"
        )


def stratum_point_monotone(
    p_treated, p_control, direction: Monotonicity, slack: float = MONOTONICITY_SLACK
):
    """Always-survivor share under a monotone direction.

    Under negative monotonicity every treated survivor is an always-survivor,
    so the share equals ``p_treated``; under positive monotonicity it equals
    ``p_control``. Estimated probabilities may cross the assumed ordering by
    noise: crossings up to ``slack`` are clamped to ``min(p_treated,
    p_control)``, larger ones raise :class:`MonotonicityViolatedError`.
    """
    if direction is Monotonicity.NONE:
        raise MonotonicityRequiredError("point identification needs a monotone direction")
    a1, a0, scalar = _pair(p_treated, p_control)
    _require_ordering(a1, a0, direction, slack)
    share = np.minimum(a1, a0)
    return float(share) if scalar else share


def survivor_share_given_survival(
    p_treated,
    p_control,
    arm: int,
    direction: Monotonicity,
    slack: float = MONOTONICITY_SLACK,
):
    """Share of arm-``arm`` survivors who are always-survivors.

    This is the trimming share: the fraction of the observed survivor outcome
    distribution in one arm attributable to units that would survive either
    way.

    Under negative monotonicity all treated survivors qualify (share 1) and
    control survivors contribute ``p_treated / p_control``, clamped to
    ``[0, 1]``. Positive monotonicity mirrors the roles. Without
    monotonicity the share is only bounded and a ``(lower, upper)`` pair is
    returned, each endpoint being the corresponding stratum-share bound
    divided by the survival probability of the conditioning arm.

    Raises
    ------
    ZeroSurvivalError
        The conditioning arm has survival probability 0 somewhere, so the
        share is undefined.
    MonotonicityViolatedError
        The fitted probabilities contradict a monotone ``direction`` by more
        than ``slack``.
    """
    if arm not in (0, 1):
        raise ValueError(f"arm must be 0 or 1, got {arm!r}")
    a1, a0, scalar = _pair(p_treated, p_control)
    own = a1 if arm == 1 else a0

    if direction is Monotonicity.NONE:
        if (own == 0.0).any():
            raise ZeroSurvivalError(f"arm {arm} has zero survival probability")
        lower = np.maximum(0.0, a1 + a0 - 1.0) / own
        upper = np.minimum(1.0, np.minimum(a1, a0) / own)
        if scalar:
            return float(lower), float(upper)
        return lower, upper

    _require_ordering(a1, a0, direction, slack)
    pure_arm = 1 if direction is Monotonicity.NEGATIVE else 0
    if arm == pure_arm:
        share = np.ones_like(own)
    else:
        if (own == 0.0).any():
            raise ZeroSurvivalError(f"arm {arm} has zero survival probability")
        other = a1 if arm == 0 else a0
        share = np.clip(other / own, 0.0, 1.0)
    return float(share) if scalar else share


@dataclass(frozen=True)
class StratumShares:
    """Survival probabilities together with the implied stratum-share bounds."""

    p_treated: float
    p_control: float
    lower: float
    upper: float

    @classmethod
    def from_probabilities(cls, p_treated: float, p_control: float) -> "StratumShares":
        lower, upper = stratum_bounds(float(p_treated), float(p_control))
        return cls(float(p_treated), float(p_control), lower, upper)


def _head_mean(sorted_values: np.ndarray, sorted_weights: np.ndarray, target: float) -> float:
    """Mean of the first ``target`` units of weight in the given order."""
    cum = np.cumsum(sorted_weights)
    k = int(np.searchsorted(cum, target, side="left"))
    if k >= sorted_values.size:
        k = sorted_values.size - 1
    before = float(cum[k - 1]) if k > 0 else 0.0
    fraction = min(max(target - before, 0.0), float(sorted_weights[k]))
    total = float(np.sum(sorted_values[:k] * sorted_weights[:k])) + fraction * float(
        sorted_values[k]
    )
    return total / target


def trimmed_mean_bounds(values, weights, share: float) -> tuple[float, float]:
    """Smallest and largest weighted mean of a ``share`` fraction of a sample.

    The lower bound averages the lowest ``share`` fraction of the total
    weight, the upper bound the highest. The boundary observation enters
    fractionally so the bounds vary continuously in ``share``; sorting is
    stable, which makes ties deterministic (and irrelevant to the value,
    since tied observations are exchangeable).

    Parameters
    ----------
    values : array_like
        Sample values, finite.
    weights : array_like
        Positive weights, same length.
    share : float
        Retained fraction of total weight, in ``(0, 1]``. At 1 both bounds
        equal the full weighted mean.

    Returns
    -------
    (lower, upper) : tuple of float

    Examples
    --------
    Four equally weighted values 1..4 with share 0.625 keep weight 2.5: the
    lower bound averages {1, 2, half of 3} giving 1.8.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.size == 0:
        raise EmptyInputError("trimmed_mean_bounds of empty sample")
    if v.shape != w.shape or v.ndim != 1:
        raise DimensionMismatchError(f"values {v.shape} vs weights {w.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidNumericValueError("values contain a non-finite entry")
    if not np.all(np.isfinite(w)) or (w <= 0.0).any():
        raise NonPositiveWeightError("weights must be positive and finite")
    if not (0.0 < share <= 1.0):
        raise ShareOutOfRangeError(f"share {share!r} outside (0, 1]")
    total = float(np.sum(w))
    if share == 1.0:
        mean = float(np.sum(v * w) / total)
        return mean, mean
    target = share * total
    order = np.argsort(v, kind="stable")
    lower = _head_mean(v[order], w[order], target)
    reverse = order[::-1]
    upper = _head_mean(v[reverse], w[reverse], target)
    return lower, upper
