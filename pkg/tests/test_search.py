import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellwether.dataset import apply_transforms, cooks_filter, log_transform, sort_chronologically
from bellwether.errors import ConfigError, DataError, InsufficientDataError
from bellwether.search import (
    BELLWETHER,
    NO_BELLWETHER,
    SearchConfig,
    cross_window_score,
    evaluate_holdout,
    growing_portfolio,
    search_bellwether,
)
from bellwether.stratify import Window, stratify, xmeans
from bellwether.synthetic import as_project_set, periodic_age_records, regime_shift_records
from bellwether.weighting import apply_weights

from conftest import make_records


def _three_regimes(rng, per=40):
    """Oldest stratum inflated, middle deflated, newest neutral."""
    sizes, efforts = [], []
    for mult in (4.0, 0.25, 1.0):
        x = rng.lognormal(5, 0.6, per)
        sizes += list(x)
        efforts += list(mult * 3 * x ** 0.9 * rng.lognormal(0, 0.05, per))
    elapsed = rng.lognormal(2, 0.4, 3 * per)
    ps = log_transform(as_project_set(make_records(sizes, efforts, elapsed)), ["size", "effort"])
    return stratify(ps, 3)


def test_empty_validation_set_is_rejected():
    recs = make_records([1, 2, 3, 4, 5], [2, 4, 6, 8, 10])
    ww = apply_weights(Window(2, tuple(recs), 0), "gaussian")
    with pytest.raises(ConfigError):
        cross_window_score(ww, [], SearchConfig())


def test_overlap_is_rejected():
    recs = make_records([1, 2, 3, 4, 5], [2, 4, 6, 8, 10])
    ww = apply_weights(Window(2, tuple(recs[1:]), 1), "gaussian")
    with pytest.raises(ConfigError):
        cross_window_score(ww, [Window(1, tuple(recs[:2]), 0)], SearchConfig())


def test_interpolating_candidate_wins():
    recs = make_records(range(1, 13), [2 * x + 1 for x in range(1, 13)])
    cand = apply_weights(Window(2, tuple(recs[6:]), 6), "triangular")
    ledger = cross_window_score(cand, [Window(1, tuple(recs[:6]), 0)], SearchConfig())
    assert ledger.metrics[0] == pytest.approx(0.0, abs=1e-9)
    assert ledger.wins == (True,) and ledger.win_fraction == 1.0


def test_failing_learner_scores_all_losses():
    recs = make_records([1, 2, 3, 4] + [5] * 6, range(1, 11))
    cand = apply_weights(Window(3, tuple(recs[4:]), 4), "gaussian")
    others = [Window(1, tuple(recs[:2]), 0), Window(2, tuple(recs[2:4]), 2)]
    ledger = cross_window_score(cand, others, SearchConfig())
    assert ledger.failed and ledger.wins == (False, False)
    assert math.isinf(ledger.mean_metric)


def test_newest_stratum_can_win_immediately(rng):
    strata = _three_regimes(rng)
    res = search_bellwether(strata, SearchConfig(kernel="gaussian"))
    assert res.status == BELLWETHER
    assert len(res.trace) == 1 and res.trace[0]["action"] == "init"
    assert res.window.records == strata[-1].records
    assert res.wins.wins == (True, True)


def test_periodic_ages_give_no_bellwether():
    ps = as_project_set(periodic_age_records())
    res = search_bellwether(stratify(ps, 3), SearchConfig())
    assert res.status == NO_BELLWETHER and not res.found
    assert all(row["chain"] == "periodic" for row in res.trace)
    with pytest.raises(DataError):
        evaluate_holdout(res, ps.records[0], SearchConfig())


def test_needs_two_strata(rng):
    ps = as_project_set(make_records(rng.uniform(1, 5, 10), rng.uniform(1, 5, 10)))
    with pytest.raises(ConfigError):
        search_bellwether(stratify(ps, 1))


def test_portfolio_exact_line():
    report = growing_portfolio(make_records([1, 2, 3], [3, 5, 7]))
    assert report.n_folds == 3 and report.skipped == 0
    assert report.errors.mae == pytest.approx(0.0, abs=1e-9)


def test_portfolio_brute_force(rng):
    x = rng.uniform(1, 10, 10)
    y = 3 + 2 * x + rng.normal(0, 1, 10)
    report = growing_portfolio(make_records(x, y))
    errs = []
    for i in range(10):
        keep = np.arange(10) != i
        slope, icept = np.polyfit(x[keep], y[keep], 1)
        errs.append(abs(icept + slope * x[i] - y[i]))
    assert report.errors.mae == pytest.approx(np.mean(errs), abs=1e-9)
    assert report.n_folds == 10


def test_portfolio_skips_failing_folds():
    # dropping either distinct size leaves a constant predictor
    report = growing_portfolio(make_records([1, 1, 1, 2], [1, 2, 3, 4]))
    assert report.skipped + report.n_folds == 4 and report.skipped == 1
    with pytest.raises(InsufficientDataError):
        growing_portfolio(make_records([1, 2], [1, 2]))


def _regime_pipeline(seed, learner="mlr"):
    recs, change = regime_shift_records(seed)
    ps = sort_chronologically(as_project_set(recs))
    holdout, ps = ps.records[-1], ps.with_records(ps.records[:-1])
    ps = log_transform(ps, ["size", "effort", "elapsed_time", "pdr"])
    ps, _ = cooks_filter(ps, "effort", ["size"])
    strata = stratify(ps, xmeans(ps, seed=seed).q)
    cfg = SearchConfig(learner=learner, kernel="gaussian", seed=seed)
    return ps, strata, cfg, apply_transforms(holdout, ps.transform_log), change


def test_holdout_leakage_detected():
    ps, strata, cfg, holdout, _ = _regime_pipeline(1)
    res = search_bellwether(strata, cfg)
    leaked = replace(holdout, id=ps.records[-1].id)
    with pytest.raises(DataError, match="leaked"):
        evaluate_holdout(res, leaked, cfg, ps.records)
    cmp_ = evaluate_holdout(res, holdout, cfg, ps.records)
    assert cmp_.portfolio_size == len(ps.records)
    assert cmp_.bellwether_error >= 0


def test_trace_is_reproducible():
    _, strata, cfg, _, _ = _regime_pipeline(3)
    a = search_bellwether(strata, cfg)
    b = search_bellwether(strata, cfg)
    assert a.trace == b.trace and a.status == b.status


@settings(max_examples=8)
@given(st.integers(0, 10_000))
def test_search_result_is_contiguous_suffix(seed):
    _, strata, cfg, _, _ = _regime_pipeline(seed)
    res = search_bellwether(strata, cfg)
    allrecs = [r for w in strata for r in w.records]
    assert res.trace[0]["start"] == strata[-1].start - strata[0].start
    assert all(row["start"] % cfg.adjust_step == res.trace[0]["start"] % cfg.adjust_step for row in res.trace)
    if res.found:
        size = len(res.window.records)
        assert res.window.records == tuple(allrecs[-size:])
        assert res.size == size and res.stationarity.ergodic
        covered = sum(len(w) for w in res.validation) + size
        assert covered == len(allrecs)
        assert res.status == BELLWETHER or res.wins.win_fraction <= cfg.majority_rule


def test_bad_search_config():
    for bad in ({"majority_rule": 0}, {"adjust_step": 0}, {"learner": "knn"},
                {"kernel": "cosine"}, {"metric": "rmse"}):
        with pytest.raises(ConfigError):
            SearchConfig(**bad)
