"""Shared synthetic populations and small constructors for the test suite."""

from __future__ import annotations

import numpy as np

from sacebounds import CellSpec, Dataset, DgpSpec, StratumSpec


def make_dataset(treatment, existence, outcome, covariates=None, weight=None, cluster=None):
    """Assemble a Dataset from plain sequences (outcome None -> NaN)."""
    treatment = np.asarray(treatment, dtype=np.int64)
    n = treatment.shape[0]
    outcome = np.array([np.nan if v is None else float(v) for v in outcome], dtype=float)
    if covariates is None:
        cov = np.zeros((n, 0))
        names = ()
    else:
        cov = np.asarray(covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov.reshape(-1, 1)
        names = tuple(f"x{j + 1}" for j in range(cov.shape[1]))
    return Dataset(
        treatment=treatment,
        existence=np.asarray(existence, dtype=np.int64),
        outcome=outcome,
        covariates=cov,
        weight=np.ones(n) if weight is None else np.asarray(weight, dtype=float),
        covariate_names=names,
        cluster=None if cluster is None else np.asarray(cluster, dtype=object),
    )


def three_cell_negative_spec(y_matched: bool = True) -> DgpSpec:
    """Three covariate cells; treatment can only destroy existence.

    With ``y_matched=True`` the always and control-only strata share the same
    control-outcome distribution within each cell, so the per-arm observable
    models are exactly correct and the true effect sits strictly inside the
    identified bounds. With ``y_matched=False`` the strata differ (always
    above control-only), which makes the naive contrast biased upward.
    """

    def cell(covs, mass, e, pi_always, pi_only, y1, y0_always, y0_only, var1, var0):
        strata = {
            "always": StratumSpec(prob=pi_always, y_treated=(y1, var1), y_control=(y0_always, var0)),
            "control_only": StratumSpec(prob=pi_only, y_control=(y0_only, var0)),
        }
        never = 1.0 - pi_always - pi_only
        if never > 0.0:
            strata["never"] = StratumSpec(prob=never)
        return CellSpec(covariates=covs, mass=mass, treatment_prob=e, strata=strata)

    if y_matched:
        rows = [
            # covs,        mass, e,    pi11, pi01, y1,   y0_a, y0_o, v1,  v0
            ((0.0, 0.0), 0.40, 0.50, 0.70, 0.20, 1.00, 1.50, 1.50, 1.0, 1.0),
            ((1.0, 0.0), 0.35, 0.50, 0.60, 0.25, 0.20, 1.00, 1.00, 1.0, 1.5),
            ((0.0, 1.0), 0.25, 0.50, 0.80, 0.10, -0.50, 0.40, 0.40, 0.8, 1.2),
        ]
    else:
        rows = [
            ((0.0, 0.0), 0.40, 0.50, 0.70, 0.20, 1.00, 1.80, 0.60, 1.0, 1.0),
            ((1.0, 0.0), 0.35, 0.50, 0.60, 0.25, 0.20, 1.30, 0.20, 1.0, 1.5),
            ((0.0, 1.0), 0.25, 0.50, 0.80, 0.10, -0.50, 0.70, -0.40, 0.8, 1.2),
        ]
    return DgpSpec(
        cells=tuple(cell(*row) for row in rows),
        covariate_names=("cell_b", "cell_c"),
    )


def existence_gap_spec() -> DgpSpec:
    """Two cells whose population existence effect is exactly -0.139."""
    return DgpSpec(
        cells=(
            CellSpec(
                covariates=(0.0,),
                mass=0.5,
                treatment_prob=0.5,
                strata={
                    "always": StratumSpec(prob=0.70, y_treated=(0.0, 1.0), y_control=(0.0, 1.0)),
                    "control_only": StratumSpec(prob=0.10, y_control=(0.0, 1.0)),
                    "never": StratumSpec(prob=0.20),
                },
            ),
            CellSpec(
                covariates=(1.0,),
                mass=0.5,
                treatment_prob=0.5,
                strata={
                    "always": StratumSpec(prob=0.522, y_treated=(0.0, 1.0), y_control=(0.0, 1.0)),
                    "control_only": StratumSpec(prob=0.178, y_control=(0.0, 1.0)),
                    "never": StratumSpec(prob=0.30),
                },
            ),
        ),
        covariate_names=("x",),
    )


def single_cell_dominance_spec(mu_always: float, mu_only: float) -> DgpSpec:
    """One cell, destruction-only, with a chosen stratum mean gap."""
    return DgpSpec(
        cells=(
            CellSpec(
                covariates=(),
                mass=1.0,
                treatment_prob=0.5,
                strata={
                    "always": StratumSpec(
                        prob=0.6, y_treated=(0.0, 1.0), y_control=(mu_always, 1.0)
                    ),
                    "control_only": StratumSpec(prob=0.3, y_control=(mu_only, 1.0)),
                    "never": StratumSpec(prob=0.1),
                },
            ),
        ),
    )


def qualitative_spec() -> DgpSpec:
    """A population where the naive contrast is exactly zero but the effect is not.

    Always-survivors are hurt by 0.1; units surviving only without treatment
    have control outcomes lower by 9/14, which inflates the naive control
    mean by exactly 0.1 and cancels the true effect.
    """
    gap = 9.0 / 14.0
    return DgpSpec(
        cells=(
            CellSpec(
                covariates=(),
                mass=1.0,
                treatment_prob=0.5,
                strata={
                    "always": StratumSpec(
                        prob=0.76, y_treated=(0.0, 0.04), y_control=(0.1, 0.04)
                    ),
                    "control_only": StratumSpec(prob=0.14, y_control=(0.1 - gap, 0.04)),
                    "never": StratumSpec(prob=0.10),
                },
            ),
        ),
    )
