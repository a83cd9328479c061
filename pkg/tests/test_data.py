import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sacebounds import CsvSchema, Dataset, UnitRecord, load_csv, save_csv, weighted_mean
from sacebounds.errors import (
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

from helpers import make_dataset


def test_from_records_round_trip():
    records = [
        UnitRecord(1, 1, 3.5, (0.0, 1.0), 2.0),
        UnitRecord(0, 0, None, (1.0, -2.5), 1.0),
        UnitRecord(0, 1, -1.25, (0.5, 0.0), 0.5),
    ]
    data = Dataset.from_records(records)
    assert list(data.records()) == records
    assert data.n == 3
    assert data.covariate_dim == 2


def test_arrays_are_read_only():
    data = make_dataset([1, 0], [1, 0], [2.0, None])
    with pytest.raises(ValueError):
        data.treatment[0] = 0


@pytest.mark.parametrize(
    "kwargs, error",
    [
        (dict(treatment=[2, 0], existence=[1, 0], outcome=[1.0, None]), NonBinaryValueError),
        (dict(treatment=[1, 0], existence=[1, 3], outcome=[1.0, None]), NonBinaryValueError),
        (dict(treatment=[1, 0], existence=[0, 1], outcome=[1.0, 2.0]), OutcomePresentForNonSurvivorError),
        (dict(treatment=[1, 0], existence=[1, 1], outcome=[1.0, None]), OutcomeMissingForSurvivorError),
        (dict(treatment=[1, 0], existence=[1, 0], outcome=[np.inf, None]), InvalidNumericValueError),
        (dict(treatment=[1], existence=[1], outcome=[1.0], weight=[0.0]), NonPositiveWeightError),
        (dict(treatment=[1], existence=[1], outcome=[1.0], weight=[-2.0]), NonPositiveWeightError),
        (dict(treatment=[1], existence=[1], outcome=[1.0], covariates=[[np.nan]]), InvalidNumericValueError),
    ],
)
def test_construction_rejects_bad_records(kwargs, error):
    with pytest.raises(error):
        make_dataset(**kwargs)


def test_empty_dataset_rejected():
    with pytest.raises(EmptyInputError):
        Dataset.from_records([])


def test_mixed_cluster_ids_rejected():
    records = [
        UnitRecord(1, 1, 1.0, (), cluster="a"),
        UnitRecord(0, 1, 2.0, ()),
    ]
    with pytest.raises(DataError):
        Dataset.from_records(records)


def test_take_resamples_and_preserves_columns():
    data = make_dataset([1, 0, 1], [1, 1, 0], [5.0, 6.0, None], covariates=[1.0, 2.0, 3.0])
    sub = data.take(np.array([2, 0, 0]))
    assert sub.n == 3
    assert list(sub.treatment) == [1, 1, 1]
    assert np.isnan(sub.outcome[0])
    assert sub.covariates[1, 0] == 1.0
    with pytest.raises(EmptyInputError):
        data.take(np.array([], dtype=int))


def test_weighted_mean_matches_hand_value():
    assert weighted_mean([1.0, 3.0], [3.0, 1.0]) == pytest.approx(1.5)


@given(
    values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30),
)
def test_weighted_mean_equal_weights_is_arithmetic_mean(values):
    arr = np.array(values)
    got = weighted_mean(arr, np.ones_like(arr))
    assert got == pytest.approx(float(np.mean(arr)), rel=1e-12, abs=1e-9)


def test_weighted_mean_errors():
    with pytest.raises(EmptyInputError):
        weighted_mean([], [])
    with pytest.raises(ZeroTotalWeightError):
        weighted_mean([1.0, 2.0], [0.0, 0.0])
    with pytest.raises(DimensionMismatchError):
        weighted_mean([1.0, 2.0], [1.0])


finite_floats = st.floats(allow_nan=False, allow_infinity=False, width=64, min_value=-1e12, max_value=1e12)


@st.composite
def record_lists(draw):
    n = draw(st.integers(1, 12))
    d = draw(st.integers(0, 3))
    records = []
    for _ in range(n):
        existence = draw(st.integers(0, 1))
        records.append(
            UnitRecord(
                treatment=draw(st.integers(0, 1)),
                existence=existence,
                outcome=draw(finite_floats) if existence else None,
                covariates=tuple(draw(finite_floats) for _ in range(d)),
                weight=draw(st.floats(1e-6, 1e6, allow_nan=False)),
            )
        )
    return records


@settings(max_examples=50, deadline=None)
@given(records=record_lists())
def test_csv_round_trip_exact(tmp_path_factory, records):
    path = str(tmp_path_factory.mktemp("csv") / "data.csv")
    data = Dataset.from_records(records)
    save_csv(data, path)
    schema = CsvSchema(covariates=data.covariate_names, weight="weight")
    back = load_csv(path, schema)
    assert list(back.records()) == list(data.records())


def test_csv_round_trip_with_cluster(tmp_path):
    records = [
        UnitRecord(1, 1, 1.5, (2.0,), 1.0, cluster="site-a"),
        UnitRecord(0, 0, None, (3.0,), 2.0, cluster="site-b"),
    ]
    data = Dataset.from_records(records)
    path = str(tmp_path / "clustered.csv")
    save_csv(data, path)
    back = load_csv(path, CsvSchema(covariates=("x1",), weight="weight", cluster="cluster"))
    assert list(back.records()) == records


def test_load_csv_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("treatment,outcome\n1,2.0\n")
    with pytest.raises(MissingColumnError):
        load_csv(str(path))


def test_load_csv_rejects_unparseable_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("treatment,existence,outcome\n1,1,abc\n")
    with pytest.raises(InvalidNumericValueError):
        load_csv(str(path))


def test_load_csv_rejects_nonbinary_flags(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("treatment,existence,outcome\nyes,1,2.0\n")
    with pytest.raises(NonBinaryValueError):
        load_csv(str(path))


def test_load_csv_accepts_missing_tokens(tmp_path):
    path = tmp_path / "ok.csv"
    path.write_text("treatment,existence,outcome\n1,0,\n0,0,NA\n1,0,NaN\n")
    data = load_csv(str(path))
    assert np.isnan(data.outcome).all()


def test_load_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("treatment,existence,outcome\n")
    with pytest.raises(EmptyInputError):
        load_csv(str(path))


def test_schema_from_dict_rejects_unknown_keys():
    with pytest.raises(DataError):
        CsvSchema.from_dict({"treatment": "t", "bogus": "x"})
