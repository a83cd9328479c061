"""Trimmed means of fitted Normal outcome distributions.

The trimming bounds need the mean of the lowest (or highest) ``share``
fraction of a unit's conditional outcome distribution. For a Normal model
that mean has a closed form; a Monte Carlo mode draws from the fitted
distribution and trims the sample instead, which is slower but model-agnostic
and serves as an independent check on the algebra.

Monte Carlo draws come from per-unit generators keyed by ``(seed, replicate,
unit)`` through :class:`numpy.random.SeedSequence`, so results do not depend
on evaluation order or thread count. The full-sample estimate uses replicate
0; bootstrap replicates use 1 through B.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import norm

from .errors import (
    InvalidSimConfigError,
    NonPositiveVarianceError,
    ShareOutOfRangeError,
)
from .identification import trimmed_mean_bounds


class SimMode(str, Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class SimConfig:
    """Settings for conditional-distribution trimming.

    Parameters
    ----------
    mode : SimMode or str
        ``analytic`` uses the closed-form truncated-Normal mean,
        ``monte_carlo`` draws and trims.
    draws_per_unit : int
        Monte Carlo sample size per unit; at least 100 so the trimmed means
        are usable, ignored in analytic mode.
    seed : int
        Base seed for the keyed draw streams.
    """

    mode: SimMode = SimMode.ANALYTIC
    draws_per_unit: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "mode", SimMode(self.mode))
        except ValueError:
            raise InvalidSimConfigError(
                f"mode {self.mode!r} not one of {[m.value for m in SimMode]}"
            ) from None
        if self.mode is SimMode.MONTE_CARLO and self.draws_per_unit < 100:
            raise InvalidSimConfigError(
                f"draws_per_unit {self.draws_per_unit} too small, need at least 100"
            )
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise InvalidSimConfigError(f"seed must be a non-negative integer, got {self.seed!r}")


def unit_stream(seed: int, replicate: int, unit: int) -> np.random.Generator:
    """Independent generator for one unit in one replicate.

    Streams are derived from ``SeedSequence(seed, spawn_key=(replicate,
    unit))``, so any subset of units can be simulated in any order, on any
    number of threads, with identical output.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate, unit)))


def _check_variance(sigma2: np.ndarray) -> np.ndarray:
    arr = np.asarray(sigma2, dtype=float)
    if not np.all(np.isfinite(arr)) or (arr <= 0.0).any():
        bad = arr[~(np.isfinite(arr) & (arr > 0.0))].flat[0]
        raise NonPositiveVarianceError(f"conditional variance {bad!r} must be positive")
    return arr


def draw_conditional(
    mu: float, sigma2: float, draws: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample ``draws`` outcomes from the fitted Normal for one unit."""
    var = _check_variance(sigma2)
    return rng.normal(float(mu), np.sqrt(float(var)), size=int(draws))


def sim_trimmed_bounds(draws: np.ndarray, share: float) -> tuple[float, float]:
    """Lower and upper trimmed means of a simulated outcome sample.

    Equal-weight wrapper around
    :func:`sacebounds.identification.trimmed_mean_bounds`.
    """
    sample = np.asarray(draws, dtype=float)
    return trimmed_mean_bounds(sample, np.ones_like(sample), share)


def analytic_trimmed_bounds(mu, sigma2, share):
    """Closed-form trimmed means of Normal distributions.

    For a Normal with mean ``mu`` and variance ``sigma2``, the mean of the
    lowest ``share`` probability mass is ``mu - sigma * phi(q) / share`` with
    ``q = Phi^{-1}(share)``, and the highest-mass mean mirrors it. At share 1
    both bounds collapse to ``mu``.

    Parameters are broadcast against each other; scalars in, floats out.

    Returns
    -------
    (lower, upper)
    """
    m = np.asarray(mu, dtype=float)
    v = _check_variance(sigma2)
    s = np.asarray(share, dtype=float)
    if not np.all(np.isfinite(s)) or (s <= 0.0).any() or (s > 1.0).any():
        bad = s[~(np.isfinite(s) & (s > 0.0) & (s <= 1.0))].flat[0]
        raise ShareOutOfRangeError(f"share {bad!r} outside (0, 1]")
    scalar = m.ndim == 0 and v.ndim == 0 and s.ndim == 0
    m, v, s = np.broadcast_arrays(m, v, s)
    sigma = np.sqrt(np.asarray(v, dtype=float))
    # tail mean of a standard Normal below its share-quantile; 0 at share 1
    with np.errstate(divide="ignore"):
        offset = np.where(s < 1.0, norm.pdf(norm.ppf(s)) / s, 0.0)
    lower = m - sigma * offset
    upper = m + sigma * offset
    if scalar:
        return float(lower), float(upper)
    return lower, upper
