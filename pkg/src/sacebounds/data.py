"""Dataset container and CSV input/output.

A unit of analysis carries a binary treatment, a binary existence indicator
(whether the outcome is defined for that unit at all), the outcome itself when
it exists, a covariate vector, a positive sampling weight, and an optional
cluster id for clustered resampling. :class:`Dataset` stores these as column
arrays and validates the per-record invariants once at construction; fitting
code can then assume they hold.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import (
    DataError,
    DimensionMismatchError,
    EmptyInputError,
    InvalidNumericValueError,
    MissingColumnError,
    NonBinaryValueError,
    NonPositiveWeightError,
    OutcomeMissingForSurvivorError,
    OutcomePresentForNonSurvivorError,
    ZeroTotalWeightError,
)

_MISSING_TOKENS = frozenset({"", "na", "nan", "none", "null"})


@dataclass(frozen=True)
class UnitRecord:
    """One observation.

    ``outcome`` must be ``None`` exactly when ``existence`` is 0: a unit whose
    outcome does not exist has nothing to record, and a surviving unit must
    have a value.
    """

    treatment: int
    existence: int
    outcome: Optional[float]
    covariates: tuple[float, ...]
    weight: float = 1.0
    cluster: Optional[str] = None


@dataclass(frozen=True)
class CsvSchema:
    """Column-name mapping for :func:`load_csv` and :func:`save_csv`.

    Parameters
    ----------
    treatment, existence, outcome : str
        Names of the required columns.
    covariates : tuple of str
        Covariate column names, in model order. May be empty for
        intercept-only designs.
    weight : str, optional
        Sampling-weight column. When absent every unit gets weight 1.
    cluster : str, optional
        Cluster-id column for clustered resampling.
    """

    treatment: str = "treatment"
    existence: str = "existence"
    outcome: str = "outcome"
    covariates: tuple[str, ...] = ()
    weight: Optional[str] = None
    cluster: Optional[str] = None

    @classmethod
    def from_dict(cls, raw: dict) -> "CsvSchema":
        """Build a schema from a plain mapping (as parsed from JSON)."""
        known = {"treatment", "existence", "outcome", "covariates", "weight", "cluster"}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown schema keys: {sorted(unknown)}")
        kwargs = dict(raw)
        if "covariates" in kwargs:
            kwargs["covariates"] = tuple(kwargs["covariates"])
        return cls(**kwargs)


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented container for unit records.

    Attributes
    ----------
    treatment : ndarray of int
        0/1 treatment indicator per unit.
    existence : ndarray of int
        0/1 indicator that the outcome exists for the unit.
    outcome : ndarray of float
        Outcome values; NaN where ``existence`` is 0.
    covariates : ndarray, shape (n, d)
        Covariate matrix. ``d`` may be 0.
    weight : ndarray of float
        Positive sampling weights.
    covariate_names : tuple of str
        Column names matching ``covariates``.
    cluster : ndarray of str or None
        Cluster ids, present for every unit or for none.
    """

    treatment: np.ndarray
    existence: np.ndarray
    outcome: np.ndarray
    covariates: np.ndarray
    weight: np.ndarray
    covariate_names: tuple[str, ...] = ()
    cluster: Optional[np.ndarray] = None
    _validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        if self._validate:
            self._check()
        for arr in (self.treatment, self.existence, self.outcome, self.covariates, self.weight):
            _as_readonly(arr)
        if self.cluster is not None:
            _as_readonly(self.cluster)

    def _check(self) -> None:
        n = self.treatment.shape[0]
        if n == 0:
            raise EmptyInputError("dataset has no records")
        for name, arr in (
            ("existence", self.existence),
            ("outcome", self.outcome),
            ("weight", self.weight),
        ):
            if arr.shape[0] != n:
                raise DimensionMismatchError(f"{name} has length {arr.shape[0]}, expected {n}")
        if self.covariates.ndim != 2 or self.covariates.shape[0] != n:
            raise DimensionMismatchError(
                f"covariates must have shape ({n}, d), got {self.covariates.shape}"
            )
        if len(self.covariate_names) != self.covariates.shape[1]:
            raise DimensionMismatchError(
                f"{len(self.covariate_names)} covariate names for "
                f"{self.covariates.shape[1]} columns"
            )
        for name, arr in (("treatment", self.treatment), ("existence", self.existence)):
            bad = ~np.isin(arr, (0, 1))
            if bad.any():
                row = int(np.argmax(bad))
                raise NonBinaryValueError(f"{name} is {arr[row]!r} at record {row}, must be 0 or 1")
        alive = self.existence == 1
        has_outcome = ~np.isnan(self.outcome)
        bad = has_outcome & ~alive
        if bad.any():
            row = int(np.argmax(bad))
            raise OutcomePresentForNonSurvivorError(
                f"record {row} has existence 0 but outcome {self.outcome[row]!r}"
            )
        bad = alive & ~has_outcome
        if bad.any():
            row = int(np.argmax(bad))
            raise OutcomeMissingForSurvivorError(f"record {row} has existence 1 but no outcome")
        bad = alive & ~np.isfinite(self.outcome)
        if bad.any():
            row = int(np.argmax(bad))
            raise InvalidNumericValueError(f"outcome is {self.outcome[row]!r} at record {row}")
        bad = ~np.isfinite(self.weight) | (self.weight <= 0.0)
        if bad.any():
            row = int(np.argmax(bad))
            raise NonPositiveWeightError(f"weight is {self.weight[row]!r} at record {row}")
        bad_rows = ~np.isfinite(self.covariates).all(axis=1)
        if bad_rows.any():
            row = int(np.argmax(bad_rows))
            raise InvalidNumericValueError(f"non-finite covariate at record {row}")
        if self.cluster is not None:
            if self.cluster.shape[0] != n:
                raise DimensionMismatchError("cluster ids do not match record count")

    @property
    def n(self) -> int:
        return self.treatment.shape[0]

    @property
    def covariate_dim(self) -> int:
        return self.covariates.shape[1]

    def __len__(self) -> int:
        return self.n

    @classmethod
    def from_records(cls, records: Iterable[UnitRecord]) -> "Dataset":
        """Assemble a dataset from :class:`UnitRecord` instances.

        Raises
        ------
        EmptyInputError
            If ``records`` is empty.
        DataError
            If cluster ids are present for some records but not all, or
            covariate lengths disagree.
        """
        recs = list(records)
        if not recs:
            raise EmptyInputError("no records")
        d = len(recs[0].covariates)
        for i, r in enumerate(recs):
            if len(r.covariates) != d:
                raise DimensionMismatchError(
                    f"record {i} has {len(r.covariates)} covariates, expected {d}"
                )
        clusters = [r.cluster for r in recs]
        has_cluster = [c is not None for c in clusters]
        if any(has_cluster) and not all(has_cluster):
            raise DataError("cluster ids must be given for every record or for none")
        cluster_arr = np.array(clusters, dtype=object) if all(has_cluster) else None
        return cls(
            treatment=np.array([r.treatment for r in recs], dtype=np.int64),
            existence=np.array([r.existence for r in recs], dtype=np.int64),
            outcome=np.array(
                [np.nan if r.outcome is None else float(r.outcome) for r in recs], dtype=float
            ),
            covariates=np.array([r.covariates for r in recs], dtype=float).reshape(len(recs), d),
            weight=np.array([r.weight for r in recs], dtype=float),
            covariate_names=tuple(f"x{j + 1}" for j in range(d)),
            cluster=cluster_arr,
        )

    def records(self) -> Iterator[UnitRecord]:
        """Yield the dataset back as :class:`UnitRecord` values."""
        for i in range(self.n):
            yield UnitRecord(
                treatment=int(self.treatment[i]),
                existence=int(self.existence[i]),
                outcome=None if self.existence[i] == 0 else float(self.outcome[i]),
                covariates=tuple(float(v) for v in self.covariates[i]),
                weight=float(self.weight[i]),
                cluster=None if self.cluster is None else str(self.cluster[i]),
            )

    def take(self, indices: np.ndarray) -> "Dataset":
        """Row-subset (or resample) by integer indices, skipping validation.

        The per-record invariants hold for any selection of already-validated
        rows, so this is safe and keeps bootstrap resampling cheap.
        """
        idx = np.asarray(indices, dtype=np.intp)
        if idx.size == 0:
            raise EmptyInputError("empty index selection")
        return Dataset(
            treatment=self.treatment[idx],
            existence=self.existence[idx],
            outcome=self.outcome[idx],
            covariates=self.covariates[idx],
            weight=self.weight[idx],
            covariate_names=self.covariate_names,
            cluster=None if self.cluster is None else self.cluster[idx],
            _validate=False,
        )

    def with_names(self, names: Sequence[str]) -> "Dataset":
        """Return the same data with new covariate column names."""
        return Dataset(
            treatment=self.treatment,
            existence=self.existence,
            outcome=self.outcome,
            covariates=self.covariates,
            weight=self.weight,
            covariate_names=tuple(names),
            cluster=self.cluster,
            _validate=True,
        )


def weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    """Weighted average with strict checks.

    Raises :class:`EmptyInputError` on empty input, dimension errors when the
    vectors disagree, and :class:`ZeroTotalWeightError` when the weights sum
    to zero or less.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.size == 0:
        raise EmptyInputError("weighted_mean of empty vector")
    if v.shape != w.shape:
        raise DimensionMismatchError(f"values {v.shape} vs weights {w.shape}")
    total = float(np.sum(w))
    if total <= 0.0:
        raise ZeroTotalWeightError(f"total weight {total!r}")
    return float(np.sum(v * w) / total)


def _parse_cell(raw: str, column: str, row: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise InvalidNumericValueError(
            f"cannot parse {raw!r} in column {column!r} at record {row}"
        ) from None


def _parse_binary(raw: str, column: str, row: int) -> int:
    value = raw.strip()
    if value not in ("0", "1"):
        raise NonBinaryValueError(f"{column!r} is {raw!r} at record {row}, must be 0 or 1")
    return int(value)


def load_csv(path: str, schema: Optional[CsvSchema] = None) -> Dataset:
    """Read a dataset from a delimited text file.

    Missing outcomes are written as empty fields; the tokens ``NA``, ``NaN``,
    ``none`` and ``null`` (any case) are also accepted. Every other field must
    parse as a number.

    Parameters
    ----------
    path : str
        File to read.
    schema : CsvSchema, optional
        Column mapping. Defaults to the canonical column names with no
        covariates, no weight column, and no cluster column.

    Returns
    -------
    Dataset

    Raises
    ------
    MissingColumnError
        A schema column is absent from the header.
    DataError
        Any per-record invariant fails; the message names the first offending
        record.
    """
    schema = schema or CsvSchema()
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        needed = [schema.treatment, schema.existence, schema.outcome, *schema.covariates]
        if schema.weight is not None:
            needed.append(schema.weight)
        if schema.cluster is not None:
            needed.append(schema.cluster)
        for column in needed:
            if column not in header:
                raise MissingColumnError(f"column {column!r} not found in {path}")
        records = []
        for i, line in enumerate(reader):
            raw_outcome = (line[schema.outcome] or "").strip()
            outcome = (
                None
                if raw_outcome.lower() in _MISSING_TOKENS
                else _parse_cell(raw_outcome, schema.outcome, i)
            )
            records.append(
                UnitRecord(
                    treatment=_parse_binary(line[schema.treatment], schema.treatment, i),
                    existence=_parse_binary(line[schema.existence], schema.existence, i),
                    outcome=outcome,
                    covariates=tuple(
                        _parse_cell(line[c], c, i) for c in schema.covariates
                    ),
                    weight=(
                        1.0
                        if schema.weight is None
                        else _parse_cell(line[schema.weight], schema.weight, i)
                    ),
                    cluster=None if schema.cluster is None else line[schema.cluster],
                )
            )
    if not records:
        raise EmptyInputError(f"{path} contains a header but no records")
    data = Dataset.from_records(records)
    return data.with_names(schema.covariates)


def save_csv(data: Dataset, path: str, schema: Optional[CsvSchema] = None) -> None:
    """Write a dataset so that :func:`load_csv` reproduces it exactly.

    Floats are written with ``repr`` so values round-trip bit for bit. The
    weight column is always written; missing outcomes become empty fields.
    """
    schema = schema or CsvSchema(
        covariates=data.covariate_names, weight="weight",
        cluster=None if data.cluster is None else "cluster",
    )
    if len(schema.covariates) != data.covariate_dim:
        raise DimensionMismatchError(
            f"schema names {len(schema.covariates)} covariates, data has {data.covariate_dim}"
        )
    header = [schema.treatment, schema.existence, schema.outcome, *schema.covariates]
    weight_col = schema.weight or "weight"
    header.append(weight_col)
    cluster_col = schema.cluster
    if cluster_col is None and data.cluster is not None:
        cluster_col = "cluster"
    if cluster_col is not None and data.cluster is not None:
        header.append(cluster_col)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for i in range(data.n):
            row = [
                int(data.treatment[i]),
                int(data.existence[i]),
                "" if data.existence[i] == 0 else repr(float(data.outcome[i])),
            ]
            row.extend(repr(float(v)) for v in data.covariates[i])
            row.append(repr(float(data.weight[i])))
            if cluster_col is not None and data.cluster is not None:
                row.append(str(data.cluster[i]))
            writer.writerow(row)
