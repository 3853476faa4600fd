from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import linalg

from bellwether.errors import ConfigError, InsufficientDataError
from bellwether.markov import (
    ERGODIC,
    NOT_CONVERGED,
    PERIODIC,
    REDUCIBLE,
    build_tpm,
    check_window,
    iterate_to_stationary,
    quantize_ages,
    record_ages,
    stationary_by_eigensolve,
    window_dimensions,
)
from bellwether.stratify import Window

from conftest import make_records


def eig_stationary(p):
    """Left eigenvector for eigenvalue 1, normalized to sum one."""
    vals, vecs = linalg.eig(np.asarray(p).T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    return v / v.sum()


def test_quantize_two_bins():
    seq = quantize_ages([1.0, 1.1, 2.0, 2.1], 0.5)
    assert seq.n_states == 2
    assert seq.states == (0, 0, 1, 1)


def test_quantize_equal_ages_one_state():
    assert quantize_ages([4.0, 4.0, 4.0]).n_states == 1


def test_quantize_cycle():
    seq = quantize_ages([1, 2, 3, 1, 2, 3], 1)
    assert seq.n_states == 3 and seq.states == (0, 1, 2, 0, 1, 2)


def test_quantize_rejects_bad_width():
    with pytest.raises(ConfigError):
        quantize_ages([1.0, 2.0], 0.0)


def test_tpm_alternating():
    assert build_tpm([0, 1, 0, 1]).p.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_tpm_hand_count():
    tpm = build_tpm([0, 0, 1, 1])
    assert tpm.p.tolist() == [[0.5, 0.5], [0.0, 1.0]]
    assert tpm.uniform_rows == ()


def test_tpm_uniform_row_for_unvisited_departure():
    tpm = build_tpm([0, 0, 1])
    assert tpm.p[1].tolist() == [0.5, 0.5]
    assert tpm.uniform_rows == (1,)


def test_tpm_needs_two_states():
    with pytest.raises(InsufficientDataError):
        build_tpm([0])


@given(st.lists(st.integers(0, 5), min_size=2, max_size=60))
def test_tpm_rows_stochastic(seq):
    p = build_tpm(seq).p
    assert np.all((p >= 0) & (p <= 1))
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_already_stationary():
    r = iterate_to_stationary(np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert r.status == ERGODIC
    assert r.pi.tolist() == pytest.approx([0.5, 0.5])


def test_two_state_ergodic():
    r = iterate_to_stationary(np.array([[0.9, 0.1], [0.5, 0.5]]))
    assert r.status == ERGODIC
    assert r.pi == pytest.approx([5 / 6, 1 / 6], abs=1e-6)


def test_periodic_two_cycle():
    assert iterate_to_stationary(np.array([[0.0, 1.0], [1.0, 0.0]])).status == PERIODIC


def test_periodic_three_cycle():
    p = np.roll(np.eye(3), 1, axis=1)
    assert iterate_to_stationary(p).status == PERIODIC


def test_absorbing_is_reducible():
    r = iterate_to_stationary(np.array([[0.5, 0.5], [0.0, 1.0]]))
    assert r.status == REDUCIBLE


def test_identity_is_reducible():
    assert iterate_to_stationary(np.eye(3)).status == REDUCIBLE


def test_not_converged_budget():
    p = np.array([[0.999999, 0.000001], [0.000001, 0.999999]])
    assert iterate_to_stationary(p, eps=1e-14, max_squarings=2).status == NOT_CONVERGED


def test_rejects_non_stochastic():
    with pytest.raises(ConfigError):
        iterate_to_stationary(np.array([[0.5, 0.6], [0.5, 0.5]]))


@pytest.mark.parametrize("seed", range(40))
def test_random_positive_chain_matches_eigensolve(seed):
    rng = np.random.default_rng(seed)
    s = int(rng.integers(2, 9))
    p = rng.random((s, s)) + 1e-3
    p /= p.sum(axis=1, keepdims=True)
    r = iterate_to_stationary(p)
    assert r.status == ERGODIC
    assert np.all(r.limit > 0)
    assert np.max(np.abs(r.limit - r.limit[0])) <= 1e-6
    assert np.max(np.abs(r.pi @ p - r.pi)) <= 1e-6
    assert np.max(np.abs(r.pi - eig_stationary(p))) <= 1e-6
    assert np.max(np.abs(stationary_by_eigensolve(p) - eig_stationary(p))) <= 1e-9


def test_record_ages_completion_offset():
    recs = make_records([1, 1, 1], [1, 1, 1], step_days=365)
    ages = record_ages(recs, "completion_offset")
    assert ages[0] == 0.0 and ages[-1] == pytest.approx(730 / 365.25)


def test_record_ages_unknown_source():
    with pytest.raises(ConfigError):
        record_ages(make_records([1], [1]), "birthday")


def test_window_dimensions():
    recs = make_records([1] * 5, [1] * 5, step_days=365)
    size, age = window_dimensions(Window(1, tuple(recs)))
    assert size == 5 and age == pytest.approx(4 * 365 / 365.25)
    assert window_dimensions(Window(1, tuple(recs[:1]))) == (1, 0.0)


def test_check_window_periodic_ages():
    recs = make_records([1] * 10, [1] * 10, elapsed=[2.0, 9.0] * 5)
    _, tpm, res = check_window(Window(1, tuple(recs)))
    assert tpm.p.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert res.status == PERIODIC


def test_check_window_single_record_is_degenerate():
    _, tpm, res = check_window(Window(1, tuple(make_records([1], [1]))))
    assert tpm is None and res.status == REDUCIBLE and res.diagnostics["degenerate"]
