import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellwether.errors import ConfigError
from bellwether.learners.linear import wls
from bellwether.weighting import KERNELS, apply_weights, kernel_weight, time_distances

from conftest import make_records, weighted


@pytest.mark.parametrize("kernel", KERNELS)
def test_every_kernel_is_one_at_zero(kernel):
    assert kernel_weight(kernel, 0.0) == 1.0


def test_kernel_values():
    assert kernel_weight("triangular", 0.25) == pytest.approx(0.75)
    assert kernel_weight("epanechnikov", 0.5) == pytest.approx(0.75)
    assert kernel_weight("gaussian", 1.0) == pytest.approx(0.28650, abs=1e-5)
    assert kernel_weight("gaussian", 1.0) == pytest.approx(math.exp(-1.25), abs=1e-15)


def direct(kernel, x):
    if kernel == "gaussian":
        return math.exp(-2.5 * x * x / 2)
    if x >= 1:
        return 0.0
    return {"rectangular": 1.0, "triangular": 1 - x, "epanechnikov": 1 - x * x}[kernel]


@pytest.mark.parametrize("kernel", KERNELS)
def test_kernel_grid_matches_direct_formula(kernel):
    grid = np.linspace(0, 1.5, 1000)
    got = kernel_weight(kernel, grid)
    want = np.array([direct(kernel, x) for x in grid])
    assert np.max(np.abs(got - want)) <= 1e-12


@pytest.mark.parametrize("kernel", KERNELS)
def test_kernel_non_increasing(kernel):
    w = kernel_weight(kernel, np.linspace(0, 0.999, 1000))
    assert np.all(np.diff(w) <= 0)


def test_only_gaussian_positive_beyond_one():
    for kernel in KERNELS:
        w = kernel_weight(kernel, np.array([1.0, 1.5, 3.0]))
        if kernel == "gaussian":
            assert np.all(w > 0)
        else:
            assert np.all(w == 0)


def test_negative_distance_rejected():
    with pytest.raises(ConfigError):
        kernel_weight("triangular", -0.1)


def test_unknown_kernel():
    with pytest.raises(ConfigError):
        kernel_weight("cosine", 0.3)


def test_two_project_triangular():
    ww = weighted(make_records([1, 2], [1, 2], step_days=10), "triangular")
    assert ww.weights.tolist() == pytest.approx([1 / 3, 1.0])


def test_rectangular_all_ones():
    ww = weighted(make_records(range(1, 8), range(1, 8)), "rectangular")
    assert np.all(ww.weights == 1.0)


def test_single_project_window_is_degenerate():
    ww = weighted(make_records([1], [1]), "gaussian")
    assert ww.degenerate and ww.weights.tolist() == [1.0]


@given(st.lists(st.integers(0, 3000), min_size=2, max_size=30), st.sampled_from(KERNELS))
def test_weights_in_unit_interval_and_newest_heaviest(offsets, kernel):
    offsets = sorted(offsets)
    recs = make_records([1] * len(offsets), [1] * len(offsets), step_days=0)
    from dataclasses import replace
    from datetime import timedelta
    recs = [replace(r, completion_date=r.completion_date + timedelta(days=d)) for r, d in zip(recs, offsets)]
    ww = weighted(recs, kernel)
    assert np.all(ww.weights > 0) and np.all(ww.weights <= 1)
    assert ww.weights[-1] == ww.weights.max()
    x, _ = time_distances(recs)
    assert np.all((x >= 0) & (x < 1))


def test_rectangular_wls_equals_ols(rng):
    recs = make_records(rng.uniform(1, 10, 30), rng.uniform(1, 10, 30))
    ww = weighted(recs, "rectangular")
    X = np.column_stack([np.ones(30), [r.size for r in recs]])
    y = np.array([r.effort for r in recs])
    beta, _ = wls(X, y, ww.weights)
    ols, *_ = np.linalg.lstsq(X, y, rcond=None)
    assert np.allclose(beta, ols, atol=1e-9)


def test_empty_window_rejected():
    from bellwether.stratify import Window
    with pytest.raises(ConfigError):
        apply_weights(Window(1, ()), "gaussian")
