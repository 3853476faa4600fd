import math
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from bellwether.errors import ConfigError, DegenerateError, InsufficientDataError
from bellwether.stats import (
    MomentSummary,
    confidence_interval,
    moments,
    normality_gate,
    prediction_probability,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


def test_symmetric_sample_has_zero_skew():
    assert moments([1, 2, 3]).skewness == pytest.approx(0.0, abs=1e-15)


def test_two_point_sample_kurtosis():
    assert moments([-1, -1, 1, 1]).kurtosis == pytest.approx(1.0)


def test_standard_normal_sample(rng):
    ms = moments(rng.standard_normal(10_000))
    assert -0.1 < ms.skewness < 0.1
    assert 2.8 < ms.kurtosis < 3.2


def test_sd_uses_n_minus_one():
    assert moments([1, 2, 3]).sd == pytest.approx(1.0)


def test_moments_errors():
    with pytest.raises(InsufficientDataError):
        moments([1.0])
    with pytest.raises(DegenerateError):
        moments([2.0, 2.0, 2.0])


def _spread(xs):
    return max(xs) - min(xs) > 1e-3 * max(1.0, max(abs(x) for x in xs))


@given(st.lists(finite, min_size=3, max_size=40), finite)
def test_translation_invariance(xs, c):
    assume(_spread(xs))
    a, b = moments(xs), moments(np.array(xs) + c)
    assert b.skewness == pytest.approx(a.skewness, abs=1e-6)
    assert b.kurtosis == pytest.approx(a.kurtosis, abs=1e-6)


@given(st.lists(finite, min_size=3, max_size=40), st.floats(min_value=1e-3, max_value=1e3))
def test_scale_invariance(xs, k):
    assume(_spread(xs))
    a, b = moments(xs), moments(np.array(xs) * k)
    assert b.skewness == pytest.approx(a.skewness, abs=1e-9)
    assert b.kurtosis == pytest.approx(a.kurtosis, abs=1e-9)


@given(st.lists(finite, min_size=2, max_size=40))
def test_kurtosis_at_least_one(xs):
    assume(_spread(xs))
    assert moments(xs).kurtosis >= 1 - 1e-9


def _ms(skew, kurt):
    return MomentSummary(100, 0.0, 1.0, skew, kurt)


def test_gate_pass_and_fail():
    assert normality_gate(_ms(0.01, 3.02)).passed
    assert normality_gate(_ms(0.010, 3.023)).passed
    res = normality_gate(_ms(7.575, 6.117))
    assert not res.passed
    assert res.skew_distance == pytest.approx(7.575)
    assert res.kurt_distance == pytest.approx(3.117)


def test_gate_boundaries_inclusive():
    assert normality_gate(_ms(0.7, 4.5)).passed
    assert not normality_gate(_ms(0.7000001, 3.0)).passed


def test_confidence_interval_oracle():
    ci = confidence_interval(0.0, 1.0, 1, 0.05)
    assert ci.lower == pytest.approx(-1.95996, abs=1e-4)
    assert ci.upper == pytest.approx(1.95996, abs=1e-4)


def test_confidence_interval_zero_sd():
    ci = confidence_interval(3.5, 0.0, 10)
    assert ci.lower == ci.upper == 3.5


def test_confidence_interval_halving():
    a = confidence_interval(2.0, 1.5, 8)
    b = confidence_interval(2.0, 1.5, 16)
    assert b.half_width == pytest.approx(a.half_width / math.sqrt(2), abs=1e-12)


def test_confidence_interval_shrinks_with_q():
    widths = [confidence_interval(0.0, 2.0, q).half_width for q in (1, 100, 10_000)]
    assert widths[0] > widths[1] > widths[2]


@given(finite, st.floats(min_value=0, max_value=100), st.integers(1, 1000),
       st.floats(min_value=0.001, max_value=0.5))
def test_confidence_interval_properties(xbar, s, q, alpha):
    ci = confidence_interval(xbar, s, q, alpha)
    assert ci.lower <= ci.upper
    assert (ci.lower + ci.upper) / 2 == pytest.approx(xbar, abs=1e-9)
    assert ci.z == pytest.approx(NormalDist().inv_cdf(1 - alpha / 2))


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
def test_confidence_interval_bad_alpha(alpha):
    with pytest.raises(ConfigError):
        confidence_interval(0.0, 1.0, 5, alpha)


def test_prediction_probability_examples():
    assert prediction_probability([1.0, 2.0], [1.0, 2.0]) == 1.0
    assert prediction_probability([10, 12, 20, 10], [10, 10, 10, 10], 0.25) == 0.75


def test_prediction_probability_length_mismatch():
    with pytest.raises(ValueError):
        prediction_probability([1.0], [1.0, 2.0])


@given(st.lists(st.tuples(st.floats(0.1, 100), st.floats(0.1, 100)), min_size=1, max_size=20),
       st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_prediction_probability_monotone_in_tau(pairs, t1, t2):
    pred, act = zip(*pairs)
    lo, hi = sorted((t1, t2))
    assert prediction_probability(pred, act, lo) <= prediction_probability(pred, act, hi)
