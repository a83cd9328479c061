"""Saturated plug-in models for discrete covariate designs.

When covariates take a small number of distinct values, survival
probabilities can be estimated by weighted cell proportions and survivor
outcome distributions by the weighted empirical distribution within each
cell. These models expose the same ``predict`` / ``conditional_mean`` /
``trimmed_bounds`` interface as the regression models in
:mod:`sacebounds.glm`, so every estimator works unchanged on top of them.

They are the natural fallback when a cell is at a probability boundary (which
makes the logistic fit separate) or an arm has too few survivors for a
regression, and they are exact: no link function, no convergence tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .data import Dataset, weighted_mean
from .errors import (
    DimensionMismatchError,
    MissingArmError,
    NoSurvivorsInCellError,
    ShareOutOfRangeError,
    UnseenCovariateCellError,
)
from .identification import trimmed_mean_bounds
from .simulate import SimConfig

CellKey = tuple[float, ...]


def _cell_keys(covariates: np.ndarray) -> list[CellKey]:
    return [tuple(float(v) for v in row) for row in covariates]


def _group_rows(covariates) -> tuple[np.ndarray, np.ndarray]:
    """Unique covariate rows and the inverse map from rows to cells."""
    X = np.asarray(covariates, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] == 0:
        return np.zeros((1, 0)), np.zeros(X.shape[0], dtype=np.intp)
    cells, inverse = np.unique(X, axis=0, return_inverse=True)
    return cells, np.asarray(inverse, dtype=np.intp).ravel()


@dataclass(frozen=True)
class SaturatedExistenceModel:
    """Weighted survival proportions per covariate cell and arm."""

    survival: Mapping[CellKey, tuple[float, float]]  # key -> (control, treated)
    covariate_dim: int

    @property
    def usable(self) -> bool:
        return True

    def predict(self, arm: int, covariates) -> np.ndarray:
        if arm not in (0, 1):
            raise ValueError(f"arm must be 0 or 1, got {arm!r}")
        cells, inverse = self._match(covariates)
        per_cell = np.empty(cells.shape[0])
        for c, row in enumerate(cells):
            key = tuple(float(v) for v in row)
            try:
                per_cell[c] = self.survival[key][arm]
            except KeyError:
                raise UnseenCovariateCellError(f"no fitted cell for covariates {key}") from None
        return per_cell[inverse]

    def count_linear_clamps(self, covariates) -> int:
        return 0

    def _match(self, covariates) -> tuple[np.ndarray, np.ndarray]:
        X = np.asarray(covariates, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1) if self.covariate_dim else X.reshape(X.shape[0], 0)
        if X.ndim != 2 or X.shape[1] != self.covariate_dim:
            raise DimensionMismatchError(
                f"covariates shape {X.shape}, model expects (*, {self.covariate_dim})"
            )
        return _group_rows(X)


@dataclass(frozen=True)
class EmpiricalOutcomeModel:
    """Weighted survivor outcome samples per covariate cell and arm."""

    samples: Mapping[CellKey, tuple[Optional[tuple], Optional[tuple]]]
    covariate_dim: int

    def _cell_sample(self, arm: int, key: CellKey) -> tuple[np.ndarray, np.ndarray]:
        if arm not in (0, 1):
            raise ValueError(f"arm must be 0 or 1, got {arm!r}")
        try:
            per_arm = self.samples[key]
        except KeyError:
            raise UnseenCovariateCellError(f"no fitted cell for covariates {key}") from None
        sample = per_arm[arm]
        if sample is None:
            raise NoSurvivorsInCellError(f"cell {key} has no survivors in arm {arm}")
        return sample

    def _per_cell(self, arm: int, covariates, func) -> np.ndarray:
        X = np.asarray(covariates, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1) if self.covariate_dim else X.reshape(X.shape[0], 0)
        if X.ndim != 2 or X.shape[1] != self.covariate_dim:
            raise DimensionMismatchError(
                f"covariates shape {X.shape}, model expects (*, {self.covariate_dim})"
            )
        cells, inverse = _group_rows(X)
        values = np.empty(cells.shape[0])
        for c, row in enumerate(cells):
            values[c] = func(arm, tuple(float(v) for v in row))
        return values[inverse]

    def predict(self, arm: int, covariates) -> tuple[np.ndarray, np.ndarray]:
        """Weighted mean and variance of survivor outcomes per cell."""

        def mean(a, key):
            values, weights = self._cell_sample(a, key)
            return weighted_mean(values, weights)

        def var(a, key):
            values, weights = self._cell_sample(a, key)
            center = weighted_mean(values, weights)
            return weighted_mean((values - center) ** 2, weights)

        return self._per_cell(arm, covariates, mean), self._per_cell(arm, covariates, var)

    def conditional_mean(self, arm: int, covariates) -> np.ndarray:
        return self.predict(arm, covariates)[0]

    def support_bounds(self, arm: int, covariates) -> tuple[np.ndarray, np.ndarray]:
        lower = self._per_cell(arm, covariates, lambda a, k: float(np.min(self._cell_sample(a, k)[0])))
        upper = self._per_cell(arm, covariates, lambda a, k: float(np.max(self._cell_sample(a, k)[0])))
        return lower, upper

    def trimmed_bounds(
        self,
        arm: int,
        covariates,
        shares,
        sim: Optional[SimConfig] = None,
        unit_indices=None,
        replicate: int = 0,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Exact weighted empirical trimmed means per unit.

        The simulation settings and stream keys are accepted for interface
        parity but unused: trimming a finite weighted sample is closed form.
        """
        X = np.asarray(covariates, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1) if self.covariate_dim else X.reshape(X.shape[0], 0)
        cells, inverse = _group_rows(X)
        share_arr = np.broadcast_to(np.asarray(shares, dtype=float), (X.shape[0],))
        if (share_arr <= 0.0).any() or (share_arr > 1.0).any():
            bad = share_arr[(share_arr <= 0.0) | (share_arr > 1.0)].flat[0]
            raise ShareOutOfRangeError(f"share {bad!r} outside (0, 1]")
        lower = np.empty(X.shape[0])
        upper = np.empty(X.shape[0])
        cache: dict[tuple[int, float], tuple[float, float]] = {}
        for i in range(X.shape[0]):
            cell = int(inverse[i])
            token = (cell, float(share_arr[i]))
            if token not in cache:
                key = tuple(float(v) for v in cells[cell])
                values, weights = self._cell_sample(arm, key)
                cache[token] = trimmed_mean_bounds(values, weights, float(share_arr[i]))
            lower[i], upper[i] = cache[token]
        return lower, upper


def fit_saturated_existence(data: Dataset) -> SaturatedExistenceModel:
    """Weighted per-cell survival proportions.

    Raises
    ------
    MissingArmError
        Some cell has no records in one arm, so its survival probability
        there is not estimable; the design is not saturated-complete.
    """
    cells, inverse = _group_rows(data.covariates)
    survival: dict[CellKey, tuple[float, float]] = {}
    for c, row in enumerate(cells):
        key = tuple(float(v) for v in row)
        rates = []
        for arm in (0, 1):
            mask = (inverse == c) & (data.treatment == arm)
            if not mask.any():
                raise MissingArmError(f"cell {key} has no records in arm {arm}")
            rates.append(weighted_mean(data.existence[mask].astype(float), data.weight[mask]))
        survival[key] = (rates[0], rates[1])
    return SaturatedExistenceModel(survival=survival, covariate_dim=data.covariate_dim)


def fit_empirical_outcome(data: Dataset) -> EmpiricalOutcomeModel:
    """Collect weighted survivor outcome samples per cell and arm.

    Cells may lack survivors in an arm; the error surfaces only if a
    prediction is later requested there.
    """
    cells, inverse = _group_rows(data.covariates)
    samples: dict[CellKey, tuple[Optional[tuple], Optional[tuple]]] = {}
    for c, row in enumerate(cells):
        key = tuple(float(v) for v in row)
        per_arm = []
        for arm in (0, 1):
            mask = (inverse == c) & (data.treatment == arm) & (data.existence == 1)
            if mask.any():
                per_arm.append((data.outcome[mask].copy(), data.weight[mask].copy()))
            else:
                per_arm.append(None)
        samples[key] = (per_arm[0], per_arm[1])
    return EmpiricalOutcomeModel(samples=samples, covariate_dim=data.covariate_dim)
