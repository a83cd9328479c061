"""Synthetic populations with known truth.

A :class:`DgpSpec` describes a discrete-cell population: each cell fixes a
covariate vector, a population mass, a treatment probability, and the four
latent strata (always survive, survive only if treated, survive only if
untreated, never survive) with Normal outcome parameters for the potential
outcomes that exist. Everything an estimator targets then has a closed form,
so estimator output can be checked against exact values instead of another
estimate.

Specs serialize to JSON for the ``synth`` command; generation is either
i.i.d. sampling or a balanced layout that hits the expected cell-by-stratum
-by-arm counts exactly (largest-remainder rounding), which reproduces small
worked examples row for row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .data import Dataset, UnitRecord
from .errors import (
    EmptyTargetStratumError,
    InvalidSpecError,
    MonotonicityRequiredBySpecError,
    NoSurvivorsError,
)

STRATA = ("always", "treated_only", "control_only", "never")

#: survival by (stratum, arm): does the outcome exist?
_SURVIVES = {
    "always": (True, True),
    "treated_only": (False, True),
    "control_only": (True, False),
    "never": (False, False),
}


@dataclass(frozen=True)
class StratumSpec:
    """One latent stratum inside a cell.

    ``y_control`` and ``y_treated`` are ``(mean, variance)`` pairs for the
    potential outcomes that exist in this stratum; they must be present
    exactly where the outcome exists (variance 0 gives a point mass, which
    is how exact worked examples are written).
    """

    prob: float
    y_control: Optional[tuple[float, float]] = None
    y_treated: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class CellSpec:
    covariates: tuple[float, ...]
    mass: float
    treatment_prob: float
    strata: Mapping[str, StratumSpec]

    def stratum_prob(self, name: str) -> float:
        spec = self.strata.get(name)
        return 0.0 if spec is None else spec.prob

    @property
    def survival_treated(self) -> float:
        return self.stratum_prob("always") + self.stratum_prob("treated_only")

    @property
    def survival_control(self) -> float:
        return self.stratum_prob("always") + self.stratum_prob("control_only")


@dataclass(frozen=True)
class DgpSpec:
    """A complete discrete-cell population description."""

    cells: tuple[CellSpec, ...]
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        _validate(self)

    # -- serialization ------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict) -> "DgpSpec":
        if not isinstance(raw, dict):
            raise InvalidSpecError(f"spec must be an object, got {type(raw).__name__}")
        unknown = set(raw) - {"cells", "covariate_names"}
        if unknown:
            raise InvalidSpecError(f"unknown spec keys: {sorted(unknown)}")
        cells = []
        for i, cell_raw in enumerate(raw.get("cells", [])):
            unknown = set(cell_raw) - {"covariates", "mass", "treatment_prob", "strata"}
            if unknown:
                raise InvalidSpecError(f"cell {i}: unknown keys {sorted(unknown)}")
            strata = {}
            for name, stratum_raw in cell_raw.get("strata", {}).items():
                if name not in STRATA:
                    raise InvalidSpecError(f"cell {i}: unknown stratum {name!r}")
                unknown = set(stratum_raw) - {"prob", "y_control", "y_treated"}
                if unknown:
                    raise InvalidSpecError(
                        f"cell {i} stratum {name!r}: unknown keys {sorted(unknown)}"
                    )
                strata[name] = StratumSpec(
                    prob=float(stratum_raw.get("prob", 0.0)),
                    y_control=_pair_or_none(stratum_raw.get("y_control"), i, name),
                    y_treated=_pair_or_none(stratum_raw.get("y_treated"), i, name),
                )
            cells.append(
                CellSpec(
                    covariates=tuple(float(v) for v in cell_raw.get("covariates", ())),
                    mass=float(cell_raw.get("mass", 0.0)),
                    treatment_prob=float(cell_raw.get("treatment_prob", 0.5)),
                    strata=strata,
                )
            )
        return cls(cells=tuple(cells), covariate_names=tuple(raw.get("covariate_names", ())))

    @classmethod
    def from_json(cls, text: str) -> "DgpSpec":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as err:
            raise InvalidSpecError(f"spec is not valid JSON: {err}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        cells = []
        for cell in self.cells:
            strata = {}
            for name in STRATA:
                spec = cell.strata.get(name)
                if spec is None:
                    continue
                entry: dict = {"prob": spec.prob}
                if spec.y_control is not None:
                    entry["y_control"] = list(spec.y_control)
                if spec.y_treated is not None:
                    entry["y_treated"] = list(spec.y_treated)
                strata[name] = entry
            cells.append(
                {
                    "covariates": list(cell.covariates),
                    "mass": cell.mass,
                    "treatment_prob": cell.treatment_prob,
                    "strata": strata,
                }
            )
        return {"covariate_names": list(self.covariate_names), "cells": cells}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _pair_or_none(raw, cell: int, name: str) -> Optional[tuple[float, float]]:
    if raw is None:
        return None
    pair = tuple(float(v) for v in raw)
    if len(pair) != 2:
        raise InvalidSpecError(f"cell {cell} stratum {name!r}: expected [mean, variance]")
    return pair


def _validate(spec: DgpSpec) -> None:
    if not spec.cells:
        raise InvalidSpecError("spec has no cells")
    dim = len(spec.cells[0].covariates)
    if spec.covariate_names and len(spec.covariate_names) != dim:
        raise InvalidSpecError(
            f"{len(spec.covariate_names)} covariate names for {dim} covariates"
        )
    total_mass = 0.0
    seen = set()
    for i, cell in enumerate(spec.cells):
        if len(cell.covariates) != dim:
            raise InvalidSpecError(f"cell {i} has {len(cell.covariates)} covariates, expected {dim}")
        if cell.covariates in seen:
            raise InvalidSpecError(f"duplicate covariate cell {cell.covariates}")
        seen.add(cell.covariates)
        if not np.isfinite(cell.mass) or cell.mass <= 0.0:
            raise InvalidSpecError(f"cell {i} mass {cell.mass!r} must be positive")
        total_mass += cell.mass
        if not 0.0 <= cell.treatment_prob <= 1.0:
            raise InvalidSpecError(f"cell {i} treatment_prob {cell.treatment_prob!r} outside [0, 1]")
        prob_sum = 0.0
        for name, stratum in cell.strata.items():
            if name not in STRATA:
                raise InvalidSpecError(f"cell {i}: unknown stratum {name!r}")
            if not np.isfinite(stratum.prob) or stratum.prob < 0.0:
                raise InvalidSpecError(f"cell {i} stratum {name!r} prob {stratum.prob!r}")
            prob_sum += stratum.prob
            survives_control, survives_treated = _SURVIVES[name]
            for label, pair, needed in (
                ("y_control", stratum.y_control, survives_control),
                ("y_treated", stratum.y_treated, survives_treated),
            ):
                if needed and stratum.prob > 0.0 and pair is None:
                    raise InvalidSpecError(f"cell {i} stratum {name!r} needs {label}")
                if not needed and pair is not None:
                    raise InvalidSpecError(
                        f"cell {i} stratum {name!r} must not define {label}"
                    )
                if pair is not None:
                    mean, variance = pair
                    if not np.isfinite(mean):
                        raise InvalidSpecError(f"cell {i} stratum {name!r} {label} mean {mean!r}")
                    if not np.isfinite(variance) or variance < 0.0:
                        raise InvalidSpecError(
                            f"cell {i} stratum {name!r} {label} variance {variance!r}"
                        )
        if abs(prob_sum - 1.0) > 1e-9:
            raise InvalidSpecError(f"cell {i} stratum probabilities sum to {prob_sum!r}, not 1")
    if abs(total_mass - 1.0) > 1e-9:
        raise InvalidSpecError(f"cell masses sum to {total_mass!r}, not 1")


@dataclass(frozen=True)
class TruthReport:
    """Exact population values implied by a spec."""

    existence_ate: float
    existence_att: float
    stratum_shares: dict
    sace_ate: float
    sace_att: float
    naive: float
    bias: Optional[float]

    def to_dict(self) -> dict:
        return {
            "existence_ate": self.existence_ate,
            "existence_att": self.existence_att,
            "stratum_shares": dict(self.stratum_shares),
            "sace_ate": self.sace_ate,
            "sace_att": self.sace_att,
            "naive": self.naive,
            "bias": self.bias,
        }


def _stratum_mean(spec: DgpSpec, name: str, arm: int) -> tuple[float, float]:
    """Population mass and mean of a potential outcome within one stratum."""
    mass = 0.0
    total = 0.0
    for cell in spec.cells:
        stratum = cell.strata.get(name)
        if stratum is None or stratum.prob == 0.0:
            continue
        pair = stratum.y_treated if arm == 1 else stratum.y_control
        mass += cell.mass * stratum.prob
        total += cell.mass * stratum.prob * pair[0]
    return mass, total


def truth(spec: DgpSpec) -> TruthReport:
    """Closed-form values of every estimand the package targets.

    ``naive`` is the potential-outcome survivor contrast
    ``E(Y^1 | outcome exists if treated) - E(Y^0 | outcome exists if
    untreated)``; with a constant treatment probability it equals the
    in-sample survivor contrast in expectation. ``bias`` is the exact gap
    ``naive - sace_ate`` whenever treatment can only destroy existence, and
    ``None`` otherwise.

    Raises
    ------
    EmptyTargetStratumError
        No always-survivor mass (the survivor effect is about nobody), or no
        treated mass for the treated-population averages.
    NoSurvivorsError
        An arm has zero survival mass, so its naive survivor mean is
        undefined.
    """
    masses = np.array([c.mass for c in spec.cells])
    e = np.array([c.treatment_prob for c in spec.cells])
    p1 = np.array([c.survival_treated for c in spec.cells])
    p0 = np.array([c.survival_control for c in spec.cells])
    existence_ate = float(np.sum(masses * (p1 - p0)))
    treated_mass = float(np.sum(masses * e))
    if treated_mass <= 0.0:
        raise EmptyTargetStratumError("spec assigns nobody to treatment")
    existence_att = float(np.sum(masses * e * (p1 - p0)) / treated_mass)

    shares = {}
    for name in STRATA:
        shares[name] = float(np.sum([c.mass * c.stratum_prob(name) for c in spec.cells]))

    pi11 = np.array([c.stratum_prob("always") for c in spec.cells])
    always_mass = float(np.sum(masses * pi11))
    if always_mass <= 0.0:
        raise EmptyTargetStratumError("spec has no always-survivors")
    gaps = np.array(
        [
            (c.strata["always"].y_treated[0] - c.strata["always"].y_control[0])
            if c.stratum_prob("always") > 0.0
            else 0.0
            for c in spec.cells
        ]
    )
    sace_ate = float(np.sum(masses * pi11 * gaps) / always_mass)
    treated_always = float(np.sum(masses * e * pi11))
    if treated_always <= 0.0:
        raise EmptyTargetStratumError("no treated always-survivor mass")
    sace_att = float(np.sum(masses * e * pi11 * gaps) / treated_always)

    survivor_means = []
    for arm, surv in ((1, p1), (0, p0)):
        arm_mass = float(np.sum(masses * surv))
        if arm_mass <= 0.0:
            raise NoSurvivorsError(f"no survival mass under arm {arm}")
        strata = ("always", "treated_only") if arm == 1 else ("always", "control_only")
        total = sum(_stratum_mean(spec, name, arm)[1] for name in strata)
        survivor_means.append(total / arm_mass)
    naive = float(survivor_means[0] - survivor_means[1])

    bias = None
    if shares["treated_only"] == 0.0:
        bias = naive - sace_ate
    return TruthReport(
        existence_ate=existence_ate,
        existence_att=existence_att,
        stratum_shares=shares,
        sace_ate=sace_ate,
        sace_att=sace_att,
        naive=naive,
        bias=bias,
    )


def bias_naive(spec: DgpSpec) -> float:
    """Exact naive-contrast bias under destruction-only specs.

    The naive survivor contrast differs from the always-survivor effect by
    ``(E(Y^0 | always) - E(Y^0 | control_only)) * P(control_only) /
    P(survives control)``: the control survivor pool is contaminated by units
    that survive only without treatment, in proportion to their share.

    Raises
    ------
    MonotonicityRequiredBySpecError
        The spec has treated-only survivors; the decomposition does not apply.
    """
    treated_only_mass = float(
        np.sum([c.mass * c.stratum_prob("treated_only") for c in spec.cells])
    )
    if treated_only_mass > 0.0:
        raise MonotonicityRequiredBySpecError(
            "bias decomposition needs a spec where treatment never creates existence"
        )
    always_mass, always_total = _stratum_mean(spec, "always", 0)
    if always_mass <= 0.0:
        raise EmptyTargetStratumError("spec has no always-survivors")
    only_mass, only_total = _stratum_mean(spec, "control_only", 0)
    control_mass = always_mass + only_mass
    if only_mass == 0.0:
        return 0.0
    gap = always_total / always_mass - only_total / only_mass
    return float(gap * (only_mass / control_mass))


def generate(spec: DgpSpec, n: int, seed: int = 0, method: str = "random") -> Dataset:
    """Draw a dataset from a spec.

    ``method="random"`` samples cells, strata, and treatment independently
    per unit. ``method="balanced"`` fixes the count of every (cell, stratum,
    arm) combination at its expectation, rounded by largest remainder, which
    makes tiny textbook populations come out exactly; outcomes are still
    drawn from the stratum distributions (a zero variance gives the mean
    deterministically).
    """
    if n < 1:
        raise InvalidSpecError(f"n must be at least 1, got {n}")
    if method not in ("random", "balanced"):
        raise InvalidSpecError(f"method {method!r} not 'random' or 'balanced'")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    combos = []  # (cell, stratum name, arm)
    expected = []
    for cell in spec.cells:
        for name in STRATA:
            prob = cell.stratum_prob(name)
            if prob == 0.0:
                continue
            for arm in (0, 1):
                arm_prob = cell.treatment_prob if arm == 1 else 1.0 - cell.treatment_prob
                combos.append((cell, name, arm))
                expected.append(cell.mass * prob * arm_prob)
    expected = np.array(expected)

    if method == "balanced":
        raw = expected * n
        counts = np.floor(raw).astype(int)
        short = n - int(counts.sum())
        if short > 0:
            order = np.argsort(-(raw - counts), kind="stable")
            counts[order[:short]] += 1
    else:
        counts = rng.multinomial(n, expected / expected.sum())

    records = []
    for (cell, name, arm), count in zip(combos, counts):
        if count == 0:
            continue
        survives = _SURVIVES[name][arm]
        if survives:
            pair = cell.strata[name].y_treated if arm == 1 else cell.strata[name].y_control
            outcomes = rng.normal(pair[0], np.sqrt(pair[1]), size=count)
        for j in range(count):
            records.append(
                UnitRecord(
                    treatment=arm,
                    existence=int(survives),
                    outcome=float(outcomes[j]) if survives else None,
                    covariates=cell.covariates,
                    weight=1.0,
                )
            )
    data = Dataset.from_records(records)
    if spec.covariate_names:
        data = data.with_names(spec.covariate_names)
    return data


def four_women_spec() -> DgpSpec:
    """The four-row worked example as a spec.

    One covariate-free cell, half the population always-survivors (outcome 30
    treated, 40 untreated), half surviving only without treatment (outcome
    20), treatment assigned to half. Balanced generation with ``n=4``
    reproduces the table exactly: survivor means are equal (naive contrast
    0) while every always-survivor is hurt by 10.
    """
    return DgpSpec(
        cells=(
            CellSpec(
                covariates=(),
                mass=1.0,
                treatment_prob=0.5,
                strata={
                    "always": StratumSpec(
                        prob=0.5, y_control=(40.0, 0.0), y_treated=(30.0, 0.0)
                    ),
                    "control_only": StratumSpec(prob=0.5, y_control=(20.0, 0.0)),
                },
            ),
        ),
    )
