import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipocvpc.survmodel import (
    INFINITE,
    ExponentialDist,
    StepSurvival,
    WeibullDist,
    sample_event_time,
    survival_at,
)

STEP = StepSurvival([1.0, 2.0], [0.5, 0.2])


def test_exponential_values():
    d = ExponentialDist(2.0)
    assert survival_at(d, 0.0) == 1.0
    assert survival_at(d, 1.0) == pytest.approx(0.1353352832366127, abs=1e-12)


def test_step_convention():
    assert survival_at(STEP, 0.5) == 1.0
    assert survival_at(STEP, 1.0) == 0.5
    assert survival_at(STEP, 1.5) == 0.5
    assert survival_at(STEP, 2.0) == 0.2
    assert survival_at(STEP, 99.0) == 0.2


def test_sampling_examples():
    assert sample_event_time(ExponentialDist(2.0), math.exp(-2)) == pytest.approx(1.0, abs=1e-12)
    assert sample_event_time(STEP, 0.7) == 1.0
    assert sample_event_time(STEP, 0.5) == 1.0
    assert sample_event_time(STEP, 0.3) == 2.0
    assert sample_event_time(STEP, 0.1) == INFINITE


def test_constant_curve_never_fires():
    flat = StepSurvival.constant()
    assert flat.survival_at(3.0) == 1.0
    assert np.all(np.isinf(flat.sample(np.array([0.01, 0.5, 0.99]))))


@pytest.mark.parametrize("dist", [ExponentialDist(1.0), WeibullDist(2, 5), STEP])
def test_domain_errors(dist):
    with pytest.raises(ValueError):
        survival_at(dist, -0.1)
    for u in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            sample_event_time(dist, u)


@pytest.mark.parametrize(
    "knots, values",
    [([2.0, 1.0], [0.5, 0.2]), ([1.0, 2.0], [0.2, 0.5]), ([1.0], [1.5]), ([-1.0], [0.5])],
)
def test_step_rejects_invalid(knots, values):
    with pytest.raises(ValueError):
        StepSurvival(knots, values)


def test_parameter_validation():
    with pytest.raises(ValueError):
        ExponentialDist(0.0)
    with pytest.raises(ValueError):
        WeibullDist(2.0, -1.0)


steps = st.lists(
    st.tuples(st.floats(0.01, 10), st.floats(0.0, 1.0)), min_size=1, max_size=15
).map(
    lambda pairs: StepSurvival(
        np.cumsum([p[0] for p in pairs]), np.sort([p[1] for p in pairs])[::-1]
    )
)
dists = st.one_of(
    st.floats(0.01, 20).map(ExponentialDist),
    st.tuples(st.floats(0.1, 10), st.floats(0.2, 8)).map(lambda a: WeibullDist(*a)),
    steps,
)


@given(dists, st.floats(0, 50), st.floats(0, 50))
def test_monotone_and_bounded(dist, t1, t2):
    lo, hi = sorted((t1, t2))
    s_lo, s_hi = survival_at(dist, lo), survival_at(dist, hi)
    assert 0.0 <= s_hi <= s_lo <= 1.0


@given(st.one_of(st.floats(0.01, 20).map(ExponentialDist),
                 st.tuples(st.floats(0.1, 10), st.floats(0.2, 8)).map(lambda a: WeibullDist(*a))),
       st.floats(1e-6, 1 - 1e-6))
def test_round_trip_continuous(dist, u):
    assert survival_at(dist, sample_event_time(dist, u)) == pytest.approx(u, abs=1e-12)


@given(steps, st.floats(1e-6, 1 - 1e-6))
def test_step_sample_is_first_crossing(curve, u):
    t = sample_event_time(curve, u)
    if t == INFINITE:
        assert curve.final_value > u
    else:
        assert survival_at(curve, t) <= u
        earlier = curve.knots[curve.knots < t]
        assert np.all(curve.values[: earlier.size] > u)


@settings(max_examples=20, deadline=None)
@given(dists, st.floats(0.05, 5))
def test_sampling_matches_cdf(dist, t):
    u = np.random.default_rng(2024).random(10_000)
    u = u[u > 0]
    draws = sample_event_time(dist, u)
    assert abs(np.mean(draws <= t) - (1 - survival_at(dist, t))) < 0.02
