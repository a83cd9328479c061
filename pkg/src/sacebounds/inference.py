"""Bootstrap confidence intervals for bound estimates.

The full estimation pipeline (model fits included) is repeated on resampled
data. The interval reported for a partially identified estimand is the
``alpha/2`` percentile of the replicate lower bounds paired with the
``1 - alpha/2`` percentile of the replicate upper bounds, so it is a
confidence region for the identified set, not for a point.

Replicates that fail with a typed package error (a resample can lose an arm,
separate, or run out of survivors) are skipped and counted; more than a
tolerated fraction of failures aborts with
:class:`TooManyFailedReplicatesError` rather than reporting quantiles of a
biased subset.

Resampling and any Monte Carlo trimming draws are keyed by
``SeedSequence(seed, spawn_key=...)`` per replicate, so results are
bit-identical for any value of ``SACEBOUNDS_THREADS``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import Dataset
from .errors import (
    ConfigError,
    InvalidLevelError,
    SaceBoundsError,
    TooManyFailedReplicatesError,
)
from .estimands import AssumptionSet, EstimatorConfig, estimate_interval, resolve_engine

THREADS_ENV_VAR = "SACEBOUNDS_THREADS"


@dataclass(frozen=True)
class BootstrapInterval:
    """Point bounds with a percentile confidence interval around them."""

    point_lower: float
    point_upper: float
    ci_lower: float
    ci_upper: float
    alpha: float
    replicates: int
    failed: int
    estimand: str
    assumptions: AssumptionSet
    diagnostics: dict = field(default_factory=dict)


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV_VAR}={raw!r} is not an integer") from None
    if count < 1:
        raise ConfigError(f"{THREADS_ENV_VAR} must be at least 1, got {count}")
    return count


def _cluster_groups(data: Dataset) -> Optional[list[np.ndarray]]:
    if data.cluster is None:
        return None
    labels = np.asarray([str(c) for c in data.cluster])
    groups = []
    for label in np.unique(labels):
        groups.append(np.flatnonzero(labels == label))
    return groups


def bootstrap(
    data: Dataset,
    config: EstimatorConfig,
    replicates: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    max_failure_fraction: float = 0.1,
) -> BootstrapInterval:
    """Percentile bootstrap around :func:`sacebounds.estimands.estimate_interval`.

    Parameters
    ----------
    data : Dataset
    config : EstimatorConfig
        ``engine="auto"`` is resolved once on the full sample and pinned, so
        every replicate uses the same estimator.
    replicates : int
        Number of resamples, at least 1.
    alpha : float
        Two-sided miss probability, in (0, 1). Quantiles use linear
        interpolation (numpy's default).
    seed : int
        Keys the resampling streams; replicate ``b`` draws from
        ``SeedSequence(seed, spawn_key=(b,))``.
    max_failure_fraction : float
        Abort when more than this fraction of replicates raises.

    Notes
    -----
    When the dataset carries cluster ids, whole clusters are resampled with
    replacement, keeping intra-cluster dependence intact.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidLevelError(f"alpha {alpha!r} outside (0, 1)")
    if replicates < 1:
        raise InvalidLevelError(f"replicates must be at least 1, got {replicates}")
    pinned = resolve_engine(data, config)
    point = estimate_interval(data, pinned, replicate=0)
    groups = _cluster_groups(data)
    n = data.n

    def run_replicate(b: int):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        if groups is None:
            indices = rng.integers(0, n, size=n)
        else:
            picks = rng.integers(0, len(groups), size=len(groups))
            indices = np.concatenate([groups[g] for g in picks])
        try:
            result = estimate_interval(data.take(indices), pinned, replicate=b)
        except SaceBoundsError:
            return None
        return result.lower, result.upper

    threads = _thread_count()
    order = range(1, replicates + 1)
    if threads == 1:
        outcomes = [run_replicate(b) for b in order]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_replicate, order))

    kept = [r for r in outcomes if r is not None]
    failed = replicates - len(kept)
    if failed > max_failure_fraction * replicates:
        raise TooManyFailedReplicatesError(
            f"{failed} of {replicates} bootstrap replicates failed "
            f"(tolerated fraction {max_failure_fraction:g})"
        )
    lowers = np.array([r[0] for r in kept])
    uppers = np.array([r[1] for r in kept])
    diagnostics = dict(point.diagnostics)
    diagnostics["bootstrap_failed"] = failed
    return BootstrapInterval(
        point_lower=point.lower,
        point_upper=point.upper,
        ci_lower=float(np.quantile(lowers, alpha / 2.0)),
        ci_upper=float(np.quantile(uppers, 1.0 - alpha / 2.0)),
        alpha=alpha,
        replicates=replicates,
        failed=failed,
        estimand=point.estimand,
        assumptions=point.assumptions,
        diagnostics=diagnostics,
    )
