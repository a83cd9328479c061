"""Per-arm regression models fitted from scratch.

Two models per treatment arm describe everything the estimators need: a
logistic regression for the probability that the outcome exists, and a Normal
outcome model with a log-linear conditional variance for survivors. The
variance model is a Gamma regression of squared residuals on the covariates
with a log link; mean and variance stages alternate twice, so the second mean
pass is weighted by the first variance fit.

All fitting is iteratively reweighted least squares on dense numpy arrays.
Linear predictors are clamped to ``[-30, 30]`` before applying the inverse
link, which keeps probabilities and variances finite without affecting any
non-degenerate fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .data import Dataset
from .errors import (
    DegenerateResidualsError,
    DimensionMismatchError,
    EmptyInputError,
    FitError,
    MissingArmError,
    NoConvergenceError,
    NonBinaryValueError,
    NonPositiveWeightError,
    SeparationError,
    ShareOutOfRangeError,
    SingularDesignError,
    TooFewSurvivorsError,
)
from .simulate import SimConfig, SimMode, analytic_trimmed_bounds, sim_trimmed_bounds, unit_stream

#: Clamp for linear predictors before the inverse link.
ETA_CLIP = 30.0

#: Probability clamp applied to predictions from a separated logistic fit
#: when separation is tolerated instead of raised.
PROB_CLIP = 1e-6


def _check_design(design, response, weights):
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError(f"design must be 2-d, got shape {X.shape}")
    n = X.shape[0]
    if n == 0:
        raise EmptyInputError("empty design matrix")
    if y.shape != (n,):
        raise DimensionMismatchError(f"response shape {y.shape} vs design rows {n}")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,):
            raise DimensionMismatchError(f"weights shape {w.shape} vs design rows {n}")
        if not np.all(np.isfinite(w)) or (w <= 0.0).any():
            raise NonPositiveWeightError("weights must be positive and finite")
    if not np.all(np.isfinite(X)):
        raise DimensionMismatchError("design contains non-finite entries")
    return X, y, w


def logistic_log_likelihood(design, response, weights, coefficients) -> float:
    """Weighted Bernoulli log-likelihood at the given coefficients."""
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    w = np.asarray(weights, dtype=float)
    c = np.asarray(coefficients, dtype=float)
    eta = np.clip(X @ c, -ETA_CLIP, ETA_CLIP)
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def logistic_score(design, response, weights, coefficients) -> np.ndarray:
    """Gradient of :func:`logistic_log_likelihood` in the coefficients."""
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    w = np.asarray(weights, dtype=float)
    c = np.asarray(coefficients, dtype=float)
    p = expit(np.clip(X @ c, -ETA_CLIP, ETA_CLIP))
    return X.T @ (w * (y - p))


@dataclass(frozen=True)
class BinaryFit:
    """Logistic regression result for one arm."""

    coefficients: np.ndarray
    converged: bool
    iterations: int
    log_likelihood: float
    loglik_trace: tuple[float, ...] = field(repr=False, default=())
    separated: bool = False


@dataclass(frozen=True)
class MeanFit:
    """Weighted least squares mean model; residuals feed the variance stage."""

    coefficients: np.ndarray
    residuals: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class VarFit:
    """Log-linear conditional variance model."""

    coefficients: np.ndarray
    converged: bool = True
    iterations: int = 0


def fit_logistic(
    design,
    response,
    weights=None,
    *,
    max_iter: int = 100,
    score_tol: float = 1e-8,
    deviance_tol: float = 1e-10,
    on_separation: str = "raise",
) -> BinaryFit:
    """Fit a weighted logistic regression by Newton steps with step halving.

    Convergence requires either the maximum absolute score below
    ``score_tol`` or a relative deviance change below ``deviance_tol``. The
    log-likelihood is kept monotone by halving any step that would decrease
    it.

    Parameters
    ----------
    design : ndarray, shape (n, p)
        Includes the intercept column.
    response : ndarray
        0/1 outcomes.
    weights : ndarray, optional
        Positive case weights.
    on_separation : {"raise", "clamp"}
        ``raise`` (default) turns a perfectly predicted class into
        :class:`SeparationError`. ``clamp`` keeps the boundary fit and marks
        it, and predictions from it are clamped away from 0 and 1. Intended
        for saturated designs where a boundary cell is genuine.

    Raises
    ------
    SeparationError
        A response class is perfectly predicted (including a single-valued
        response) under ``on_separation="raise"``.
    SingularDesignError
        The design is rank deficient.
    NoConvergenceError
        Iteration cap reached without meeting either tolerance.
    """
    if on_separation not in ("raise", "clamp"):
        raise ValueError(f"on_separation must be 'raise' or 'clamp', got {on_separation!r}")
    X, y, w = _check_design(design, response, weights)
    if not np.isin(y, (0.0, 1.0)).all():
        raise NonBinaryValueError("logistic response must be 0/1")
    single_class = y.min() == y.max()
    if single_class and on_separation == "raise":
        raise SeparationError(
            f"response is constant at {y.flat[0]:g}; the class is perfectly predicted"
        )

    p = X.shape[1]
    coef = np.zeros(p)
    loglik = logistic_log_likelihood(X, y, w, coef)
    trace = [loglik]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = np.clip(X @ coef, -ETA_CLIP, ETA_CLIP)
        prob = expit(eta)
        score = X.T @ (w * (y - prob))
        if np.max(np.abs(score)) < score_tol:
            converged = True
            break
        curvature = w * prob * (1.0 - prob)
        hessian = (X * curvature[:, None]).T @ X
        try:
            step = np.linalg.solve(hessian, score)
        except np.linalg.LinAlgError:
            raise SingularDesignError("logistic information matrix is singular") from None
        # halve the step until the log-likelihood does not decrease
        scale = 1.0
        for _ in range(40):
            candidate = coef + scale * step
            new_loglik = logistic_log_likelihood(X, y, w, candidate)
            if new_loglik >= loglik - 1e-12 * max(1.0, abs(loglik)):
                break
            scale *= 0.5
        else:
            converged = np.max(np.abs(score)) < score_tol
            break
        coef = candidate
        relative_change = abs(new_loglik - loglik) / max(1.0, abs(loglik))
        loglik = new_loglik
        trace.append(loglik)
        if relative_change < deviance_tol:
            converged = True
            break

    eta = np.clip(X @ coef, -ETA_CLIP, ETA_CLIP)
    prob = expit(eta)
    ones = y == 1.0
    pinned_high = bool(ones.any() and np.all(prob[ones] >= 1.0 - 1e-10))
    pinned_low = bool((~ones).any() and np.all(prob[~ones] <= 1e-10))
    diverged = bool(np.max(np.abs(X @ coef)) >= ETA_CLIP - 1e-6) or single_class
    separated = (pinned_high or pinned_low) and diverged
    if separated and on_separation == "raise":
        raise SeparationError("a response class is perfectly predicted by the fitted model")
    if not converged:
        raise NoConvergenceError(f"logistic fit did not converge in {max_iter} iterations")
    return BinaryFit(
        coefficients=coef,
        converged=converged,
        iterations=iterations,
        log_likelihood=loglik,
        loglik_trace=tuple(trace),
        separated=separated,
    )


def fit_wls(design, response, weights) -> tuple[np.ndarray, np.ndarray]:
    """Weighted least squares; returns coefficients and raw residuals."""
    X, y, w = _check_design(design, response, weights)
    root = np.sqrt(w)
    coef, _, rank, _ = np.linalg.lstsq(X * root[:, None], y * root, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesignError(f"design rank {rank} < {X.shape[1]} columns")
    return coef, y - X @ coef


def fit_gamma_log(
    design, response, weights=None, *, max_iter: int = 100, tol: float = 1e-10
) -> tuple[np.ndarray, bool, int]:
    """Gamma regression with a log link, for squared residuals.

    Returns ``(coefficients, converged, iterations)``; convergence is a
    maximum absolute coefficient change below ``tol``.
    """
    X, u, w = _check_design(design, response, weights)
    if (u < 0.0).any():
        raise DegenerateResidualsError("squared residuals must be non-negative")
    mean_u = float(np.sum(w * u) / np.sum(w))
    if mean_u <= 0.0:
        raise DegenerateResidualsError("all squared residuals are zero")
    coef = np.zeros(X.shape[1])
    coef[0] = np.log(mean_u) if abs(X[:, 0] - 1.0).max() < 1e-12 else 0.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = np.clip(X @ coef, -ETA_CLIP, ETA_CLIP)
        mu = np.exp(eta)
        working = eta + (u - mu) / mu
        new_coef, _ = fit_wls(X, working, w)
        change = float(np.max(np.abs(new_coef - coef)))
        coef = new_coef
        if change < tol:
            converged = True
            break
    if not converged:
        raise NoConvergenceError(f"variance fit did not converge in {max_iter} iterations")
    return coef, converged, iterations


def fit_outcome(design, response, weights=None) -> tuple[MeanFit, VarFit]:
    """Fit the Normal outcome model for one arm's survivors.

    Two alternating passes: unweighted-by-variance WLS for the mean, Gamma
    log-link fit of squared residuals for the variance, WLS reweighted by the
    inverse fitted variance, then a final variance fit on the new residuals.

    Raises
    ------
    DegenerateResidualsError
        The mean model fits exactly, leaving nothing for the variance stage.
    """
    X, y, w = _check_design(design, response, weights)
    coef1, resid1 = fit_wls(X, y, w)
    scale = max(1.0, float(np.max(np.abs(y))))
    if float(np.max(np.abs(resid1))) <= 1e-10 * scale:
        raise DegenerateResidualsError("outcome is an exact linear function of the design")
    vcoef1, _, _ = fit_gamma_log(X, resid1**2, w)
    sigma2 = np.exp(np.clip(X @ vcoef1, -ETA_CLIP, ETA_CLIP))
    coef2, resid2 = fit_wls(X, y, w / sigma2)
    if float(np.max(np.abs(resid2))) <= 1e-10 * scale:
        raise DegenerateResidualsError("outcome is an exact linear function of the design")
    vcoef2, vconv, viters = fit_gamma_log(X, resid2**2, w)
    return MeanFit(coefficients=coef2, residuals=resid2), VarFit(
        coefficients=vcoef2, converged=vconv, iterations=viters
    )


def _prediction_design(covariates, dim: int) -> np.ndarray:
    X = np.asarray(covariates, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if dim else X.reshape(X.shape[0], 0)
    if X.ndim != 2 or X.shape[1] != dim:
        raise DimensionMismatchError(f"covariates shape {X.shape}, model expects (*, {dim})")
    return np.column_stack([np.ones(X.shape[0]), X]) if dim else np.ones((X.shape[0], 1))


def _check_arm(arm: int) -> int:
    if arm not in (0, 1):
        raise NonBinaryValueError(f"arm must be 0 or 1, got {arm!r}")
    return int(arm)


@dataclass(frozen=True)
class ExistenceModel:
    """Per-arm logistic models for whether the outcome exists."""

    fit_control: BinaryFit
    fit_treated: BinaryFit
    covariate_dim: int

    @property
    def usable(self) -> bool:
        return self.fit_control.converged and self.fit_treated.converged

    def _fit(self, arm: int) -> BinaryFit:
        return self.fit_treated if _check_arm(arm) == 1 else self.fit_control

    def predict(self, arm: int, covariates) -> np.ndarray:
        """Survival probability for each covariate row under ``arm``."""
        fit = self._fit(arm)
        X = _prediction_design(covariates, self.covariate_dim)
        prob = expit(np.clip(X @ fit.coefficients, -ETA_CLIP, ETA_CLIP))
        if fit.separated:
            prob = np.clip(prob, PROB_CLIP, 1.0 - PROB_CLIP)
        return prob

    def count_linear_clamps(self, covariates) -> int:
        """How many linear predictors hit the clamp, summed over arms."""
        total = 0
        for arm in (0, 1):
            X = _prediction_design(covariates, self.covariate_dim)
            eta = X @ self._fit(arm).coefficients
            total += int(np.sum(np.abs(eta) >= ETA_CLIP))
        return total


@dataclass(frozen=True)
class OutcomeModel:
    """Per-arm Normal outcome models for survivors.

    ``predict`` returns the conditional mean and variance;
    ``trimmed_bounds`` returns per-unit bounds on the mean of the lowest and
    highest ``share`` fraction of each conditional distribution, evaluated
    analytically or by keyed Monte Carlo draws.
    """

    mean_control: MeanFit
    mean_treated: MeanFit
    var_control: VarFit
    var_treated: VarFit
    covariate_dim: int

    def _fits(self, arm: int) -> tuple[MeanFit, VarFit]:
        if _check_arm(arm) == 1:
            return self.mean_treated, self.var_treated
        return self.mean_control, self.var_control

    def predict(self, arm: int, covariates) -> tuple[np.ndarray, np.ndarray]:
        mean_fit, var_fit = self._fits(arm)
        X = _prediction_design(covariates, self.covariate_dim)
        mu = X @ mean_fit.coefficients
        sigma2 = np.exp(np.clip(X @ var_fit.coefficients, -ETA_CLIP, ETA_CLIP))
        return mu, sigma2

    def conditional_mean(self, arm: int, covariates) -> np.ndarray:
        return self.predict(arm, covariates)[0]

    def support_bounds(self, arm: int, covariates) -> tuple[np.ndarray, np.ndarray]:
        """Support endpoints of the conditional distribution (unbounded here)."""
        X = _prediction_design(covariates, self.covariate_dim)
        n = X.shape[0]
        return np.full(n, -np.inf), np.full(n, np.inf)

    def trimmed_bounds(
        self,
        arm: int,
        covariates,
        shares,
        sim: Optional[SimConfig] = None,
        unit_indices=None,
        replicate: int = 0,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Per-unit trimmed means of the fitted conditional distributions.

        Parameters
        ----------
        shares : array_like
            Retained mass per unit, each in (0, 1]; broadcast to the number
            of rows.
        sim : SimConfig, optional
            Defaults to analytic mode.
        unit_indices : array_like of int, optional
            Stable unit keys for the Monte Carlo streams; defaults to the row
            positions. Pass original dataset positions when trimming a
            subset.
        replicate : int
            Resampling replicate key; 0 is the full sample.
        """
        sim = sim or SimConfig()
        mu, sigma2 = self.predict(arm, covariates)
        share_arr = np.broadcast_to(np.asarray(shares, dtype=float), mu.shape)
        if (share_arr <= 0.0).any() or (share_arr > 1.0).any():
            bad = share_arr[(share_arr <= 0.0) | (share_arr > 1.0)].flat[0]
            raise ShareOutOfRangeError(f"share {bad!r} outside (0, 1]")
        if sim.mode is SimMode.ANALYTIC:
            return analytic_trimmed_bounds(mu, sigma2, share_arr)
        if unit_indices is None:
            unit_indices = np.arange(mu.shape[0])
        keys = np.asarray(unit_indices, dtype=np.int64)
        if keys.shape != mu.shape:
            raise DimensionMismatchError("unit_indices must match the number of rows")
        lower = np.empty_like(mu)
        upper = np.empty_like(mu)
        for i in range(mu.shape[0]):
            rng = unit_stream(sim.seed, replicate, int(keys[i]))
            draws = rng.normal(mu[i], np.sqrt(sigma2[i]), size=sim.draws_per_unit)
            lower[i], upper[i] = sim_trimmed_bounds(draws, float(share_arr[i]))
        return lower, upper


def _arm_design(data: Dataset, mask: np.ndarray) -> np.ndarray:
    X = data.covariates[mask]
    return np.column_stack([np.ones(X.shape[0]), X]) if data.covariate_dim else np.ones(
        (X.shape[0], 1)
    )


def fit_existence_model(data: Dataset, on_separation: str = "raise") -> ExistenceModel:
    """Fit the per-arm logistic existence models for a dataset.

    Raises
    ------
    MissingArmError
        One arm has no records at all.
    FitError
        Any per-arm fitting failure, re-raised with the arm named.
    """
    fits = {}
    for arm in (0, 1):
        mask = data.treatment == arm
        if not mask.any():
            raise MissingArmError(f"no records in arm {arm}")
        try:
            fits[arm] = fit_logistic(
                _arm_design(data, mask),
                data.existence[mask].astype(float),
                data.weight[mask],
                on_separation=on_separation,
            )
        except FitError as err:
            raise type(err)(f"existence model, arm {arm}: {err}") from err
    return ExistenceModel(
        fit_control=fits[0], fit_treated=fits[1], covariate_dim=data.covariate_dim
    )


def fit_outcome_model(data: Dataset) -> OutcomeModel:
    """Fit the per-arm survivor outcome models for a dataset.

    Raises
    ------
    TooFewSurvivorsError
        An arm has no more survivors than the mean model has parameters.
    FitError
        Any per-arm fitting failure, re-raised with the arm named.
    """
    results = {}
    n_params = data.covariate_dim + 1
    for arm in (0, 1):
        mask = (data.treatment == arm) & (data.existence == 1)
        count = int(mask.sum())
        if count <= n_params:
            raise TooFewSurvivorsError(
                f"arm {arm} has {count} survivors for {n_params} outcome parameters"
            )
        try:
            mean_fit, var_fit = fit_outcome(
                _arm_design(data, mask), data.outcome[mask], data.weight[mask]
            )
        except FitError as err:
            raise type(err)(f"outcome model, arm {arm}: {err}") from err
        results[arm] = (mean_fit, var_fit)
    return OutcomeModel(
        mean_control=results[0][0],
        mean_treated=results[1][0],
        var_control=results[0][1],
        var_treated=results[1][1],
        covariate_dim=data.covariate_dim,
    )
