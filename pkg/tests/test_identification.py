import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sacebounds import (
    Monotonicity,
    StratumShares,
    stratum_bounds,
    stratum_point_monotone,
    survivor_share_given_survival,
    trimmed_mean_bounds,
    weighted_mean,
)
from sacebounds.errors import (
    EmptyInputError,
    InvalidNumericValueError,
    MonotonicityRequiredError,
    MonotonicityViolatedError,
    NonPositiveWeightError,
    OutOfRangeProbabilityError,
    ShareOutOfRangeError,
    ZeroSurvivalError,
)

probs = st.floats(0.0, 1.0, allow_nan=False)


# ---------------------------------------------------------------------------
# stratum-share bounds
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "p_treated, p_control, lower, upper",
    [
        # two high survival rates force a large overlap
        (0.8, 0.7, 0.5, 0.7),
        # rates summing below one allow an empty always-survivor stratum
        (0.75, 0.25, 0.0, 0.25),
        (1.0, 1.0, 1.0, 1.0),
        (0.0, 0.9, 0.0, 0.0),
    ],
)
def test_stratum_bounds_worked_values(p_treated, p_control, lower, upper):
    got = stratum_bounds(p_treated, p_control)
    assert got == (pytest.approx(lower, abs=1e-12), pytest.approx(upper, abs=1e-12))


@given(p_treated=probs, p_control=probs)
def test_stratum_bounds_ordering(p_treated, p_control):
    lower, upper = stratum_bounds(p_treated, p_control)
    assert 0.0 <= lower <= upper <= min(p_treated, p_control)
    assert upper <= 1.0


def test_stratum_bounds_vectorized():
    lower, upper = stratum_bounds(np.array([0.8, 0.75]), np.array([0.7, 0.25]))
    assert lower == pytest.approx([0.5, 0.0])
    assert upper == pytest.approx([0.7, 0.25])


@pytest.mark.parametrize("bad", [-0.1, 1.1, np.nan, np.inf])
def test_stratum_bounds_out_of_range(bad):
    with pytest.raises(OutOfRangeProbabilityError):
        stratum_bounds(bad, 0.5)


def test_stratum_shares_container():
    shares = StratumShares.from_probabilities(0.8, 0.7)
    assert (shares.lower, shares.upper) == (pytest.approx(0.5), pytest.approx(0.7))


# ---------------------------------------------------------------------------
# point identification under monotonicity
# ---------------------------------------------------------------------------


def test_point_share_negative_direction():
    assert stratum_point_monotone(0.5, 1.0, Monotonicity.NEGATIVE) == pytest.approx(0.5)


def test_point_share_positive_direction():
    assert stratum_point_monotone(0.9, 0.6, Monotonicity.POSITIVE) == pytest.approx(0.6)


def test_point_share_clamps_within_slack():
    # ordering violated by one point, inside the tolerated slack
    assert stratum_point_monotone(0.71, 0.70, Monotonicity.NEGATIVE) == pytest.approx(0.70)


def test_point_share_rejects_large_violation():
    with pytest.raises(MonotonicityViolatedError):
        stratum_point_monotone(0.75, 0.70, Monotonicity.NEGATIVE)
    with pytest.raises(MonotonicityViolatedError):
        stratum_point_monotone(0.60, 0.65, Monotonicity.POSITIVE)


def test_point_share_requires_direction():
    with pytest.raises(MonotonicityRequiredError):
        stratum_point_monotone(0.5, 0.5, Monotonicity.NONE)


# ---------------------------------------------------------------------------
# conditional survivor shares
# ---------------------------------------------------------------------------


def test_survivor_share_negative():
    assert survivor_share_given_survival(0.5, 1.0, 1, Monotonicity.NEGATIVE) == pytest.approx(1.0)
    assert survivor_share_given_survival(0.5, 1.0, 0, Monotonicity.NEGATIVE) == pytest.approx(0.5)


def test_survivor_share_positive_mirrors_negative():
    assert survivor_share_given_survival(1.0, 0.5, 0, Monotonicity.POSITIVE) == pytest.approx(1.0)
    assert survivor_share_given_survival(1.0, 0.5, 1, Monotonicity.POSITIVE) == pytest.approx(0.5)


def test_survivor_share_ratio_clamped_to_one():
    got = survivor_share_given_survival(0.705, 0.70, 0, Monotonicity.NEGATIVE)
    assert got == pytest.approx(1.0)


def test_survivor_share_zero_survival():
    with pytest.raises(ZeroSurvivalError):
        survivor_share_given_survival(0.0, 0.0, 0, Monotonicity.NEGATIVE)


def test_survivor_share_interval_without_monotonicity():
    lower, upper = survivor_share_given_survival(0.8, 0.7, 0, Monotonicity.NONE)
    assert lower == pytest.approx(0.5 / 0.7)
    assert upper == pytest.approx(1.0)
    lower, upper = survivor_share_given_survival(0.75, 0.25, 1, Monotonicity.NONE)
    assert lower == pytest.approx(0.0)
    assert upper == pytest.approx(0.25 / 0.75)


@given(p_treated=probs, p_control=st.floats(0.01, 1.0), arm=st.sampled_from([0, 1]))
def test_survivor_share_interval_ordered(p_treated, p_control, arm):
    lower, upper = survivor_share_given_survival(p_treated, p_control, arm, Monotonicity.NONE)
    assert 0.0 <= lower <= upper <= 1.0


# ---------------------------------------------------------------------------
# trimmed means
# ---------------------------------------------------------------------------


def test_trimmed_mean_fractional_boundary():
    # keep 2.5 units of weight: 1, 2 and half of the 3
    lower, upper = trimmed_mean_bounds([1.0, 2.0, 3.0, 4.0], np.ones(4), 0.625)
    assert lower == pytest.approx(1.8, abs=1e-12)
    assert upper == pytest.approx(3.2, abs=1e-12)


def test_trimmed_mean_unequal_weights():
    lower, upper = trimmed_mean_bounds([10.0, 20.0], [1.0, 3.0], 0.5)
    assert lower == pytest.approx(15.0, abs=1e-12)
    assert upper == pytest.approx(20.0, abs=1e-12)


def test_trimmed_mean_two_survivors_half_share():
    lower, upper = trimmed_mean_bounds([40.0, 20.0], [1.0, 1.0], 0.5)
    assert (lower, upper) == (20.0, 40.0)


def test_trimmed_mean_full_share_is_mean():
    values = np.array([3.0, 1.0, 2.0])
    weights = np.array([1.0, 2.0, 3.0])
    lower, upper = trimmed_mean_bounds(values, weights, 1.0)
    assert lower == upper == pytest.approx(weighted_mean(values, weights))


@pytest.mark.parametrize("share", [0.0, -0.2, 1.0001])
def test_trimmed_mean_share_range(share):
    with pytest.raises(ShareOutOfRangeError):
        trimmed_mean_bounds([1.0, 2.0], [1.0, 1.0], share)


def test_trimmed_mean_input_errors():
    with pytest.raises(EmptyInputError):
        trimmed_mean_bounds([], [], 0.5)
    with pytest.raises(NonPositiveWeightError):
        trimmed_mean_bounds([1.0, 2.0], [1.0, 0.0], 0.5)
    with pytest.raises(InvalidNumericValueError):
        trimmed_mean_bounds([1.0, np.nan], [1.0, 1.0], 0.5)


samples = st.lists(
    st.tuples(st.floats(-1e6, 1e6), st.floats(0.01, 100.0)), min_size=1, max_size=25
)


@settings(max_examples=100, deadline=None)
@given(sample=samples, share=st.floats(0.01, 1.0))
def test_trimmed_mean_sandwiches_full_mean(sample, share):
    values = np.array([v for v, _ in sample])
    weights = np.array([w for _, w in sample])
    lower, upper = trimmed_mean_bounds(values, weights, share)
    mean = weighted_mean(values, weights)
    assert lower <= mean + 1e-9 * max(1.0, abs(mean))
    assert upper >= mean - 1e-9 * max(1.0, abs(mean))


@settings(max_examples=100, deadline=None)
@given(sample=samples, small=st.floats(0.01, 0.99), bump=st.floats(0.001, 0.5))
def test_trimmed_mean_monotone_in_share(sample, small, bump):
    values = np.array([v for v, _ in sample])
    weights = np.array([w for _, w in sample])
    large = min(1.0, small + bump)
    lo_small, up_small = trimmed_mean_bounds(values, weights, small)
    lo_large, up_large = trimmed_mean_bounds(values, weights, large)
    slack = 1e-9 * max(1.0, np.max(np.abs(values)))
    assert lo_small <= lo_large + slack
    assert up_small >= up_large - slack


@settings(max_examples=100, deadline=None)
@given(sample=samples, share=st.floats(0.01, 1.0), scale=st.floats(0.01, 100.0))
def test_trimmed_mean_weight_scale_invariant(sample, share, scale):
    values = np.array([v for v, _ in sample])
    weights = np.array([w for _, w in sample])
    base = trimmed_mean_bounds(values, weights, share)
    scaled = trimmed_mean_bounds(values, weights * scale, share)
    tol = 1e-9 * max(1.0, np.max(np.abs(values)))
    assert scaled[0] == pytest.approx(base[0], abs=tol)
    assert scaled[1] == pytest.approx(base[1], abs=tol)


@settings(max_examples=100, deadline=None)
@given(sample=samples, share=st.floats(0.01, 1.0), seed=st.integers(0, 2**16))
def test_trimmed_mean_permutation_invariant(sample, share, seed):
    values = np.array([v for v, _ in sample])
    weights = np.array([w for _, w in sample])
    perm = np.random.default_rng(seed).permutation(len(values))
    base = trimmed_mean_bounds(values, weights, share)
    shuffled = trimmed_mean_bounds(values[perm], weights[perm], share)
    tol = 1e-9 * max(1.0, np.max(np.abs(values)))
    assert shuffled[0] == pytest.approx(base[0], abs=tol)
    assert shuffled[1] == pytest.approx(base[1], abs=tol)


@settings(max_examples=50, deadline=None)
@given(sample=samples, share=st.floats(0.01, 1.0))
def test_trimmed_mean_weight_splitting_invariant(sample, share):
    # splitting every observation into two half-weight copies changes nothing
    values = np.array([v for v, _ in sample])
    weights = np.array([w for _, w in sample])
    doubled_values = np.repeat(values, 2)
    half_weights = np.repeat(weights / 2.0, 2)
    base = trimmed_mean_bounds(values, weights, share)
    split = trimmed_mean_bounds(doubled_values, half_weights, share)
    tol = 1e-9 * max(1.0, np.max(np.abs(values)))
    assert split[0] == pytest.approx(base[0], abs=tol)
    assert split[1] == pytest.approx(base[1], abs=tol)
