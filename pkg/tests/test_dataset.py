import math
from dataclasses import replace
from datetime import date

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellwether.dataset import (
    ColumnMapping,
    FilterSpec,
    ProjectSet,
    cooks_distance,
    cooks_filter,
    filter_quality,
    inverse_transform,
    load_projects,
    log_transform,
    parse_date,
    sort_chronologically,
    write_csv,
    zscore_normalize,
)
from bellwether.errors import EmptyInputError, RankDeficientError, SchemaError, TransformError
from bellwether.stats import moments
from bellwether.synthetic import as_project_set

from conftest import make_records, write_csv as write_rows

HEADER = ["id", "done", "size", "effort", "months", "rating"]
MAPPING = ColumnMapping(id="id", completion_date="done", size="size", effort="effort",
                        elapsed_time="months", quality_rating="rating")


def three_rows(tmp_path):
    rows = [["a", "2001-01-05", "100", "900", "6", "A"],
            ["b", "03/2002", "120", "1000", "7", "B"],
            ["c", "2000-11", "80", "500", "4", "C"]]
    return write_rows(tmp_path / "p.csv", HEADER, rows)


def test_load_three_rows(tmp_path):
    ps = load_projects(three_rows(tmp_path), MAPPING)
    assert len(ps) == 3
    assert ps.records[1].completion_date == date(2002, 3, 1)
    assert ps.records[2].completion_date == date(2000, 11, 1)
    assert ps.records[0].pdr == pytest.approx(9.0, rel=1e-9)


def test_empty_effort_is_rejected(tmp_path):
    path = write_rows(tmp_path / "p.csv", HEADER, [["a", "2001-01-05", "100", "", "6", "A"],
                                                   ["b", "2001-02-05", "100", "50", "6", "A"]])
    ps = load_projects(path, MAPPING)
    assert ps.ids == ["b"]
    assert [r.id for r in ps.rejected] == ["a"]
    assert "effort" in ps.rejected[0].reason


def test_lenient_load_defers_to_filters(tmp_path):
    path = write_rows(tmp_path / "p.csv", HEADER, [["a", "2001-01-05", "100", "", "6", "A"]])
    ps = load_projects(path, MAPPING, strict=False)
    assert ps.records[0].effort is None
    out, report = filter_quality(ps)
    assert len(out) == 0 and report.removed["unknown_effort"] == 1


def test_unparseable_value_rejected(tmp_path):
    path = write_rows(tmp_path / "p.csv", HEADER, [["a", "2001-01-05", "abc", "5", "6", "A"]])
    ps = load_projects(path, MAPPING, strict=False)
    assert len(ps) == 0 and "size" in ps.rejected[0].reason


def test_missing_column(tmp_path):
    path = write_rows(tmp_path / "p.csv", ["id", "done", "size"], [["a", "2001-01-01", "3"]])
    with pytest.raises(SchemaError):
        load_projects(path, MAPPING)


def test_empty_file(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("")
    with pytest.raises(EmptyInputError):
        load_projects(path, MAPPING)
    path.write_text(",".join(HEADER) + "\n")
    with pytest.raises(EmptyInputError):
        load_projects(path, MAPPING)


def test_parse_date_formats():
    assert parse_date("2004-07-09") == date(2004, 7, 9)
    assert parse_date("2004-07") == date(2004, 7, 1)
    assert parse_date("7/2004") == date(2004, 7, 1)
    assert parse_date("09.07.2004", "%d.%m.%Y") == date(2004, 7, 9)
    with pytest.raises(ValueError):
        parse_date("yesterday")


def test_quality_filter(tmp_path):
    ps = load_projects(three_rows(tmp_path), MAPPING)
    out, report = filter_quality(ps, FilterSpec())
    assert out.ids == ["a", "b"]
    assert report.removed["low_quality"] == 1
    assert "outdated_fp" in report.skipped and "web" in report.skipped


def test_filter_idempotent(tmp_path):
    ps = load_projects(three_rows(tmp_path), MAPPING)
    once, _ = filter_quality(ps)
    twice, _ = filter_quality(once)
    assert once.records == twice.records


def sample_set(n=30, seed=0):
    rng = np.random.default_rng(seed)
    sizes = np.exp(rng.normal(5, 0.7, n))
    efforts = np.exp(1.0 + 0.9 * np.log(sizes) + rng.normal(0, 0.3, n))
    return as_project_set(make_records(sizes, efforts, elapsed=np.exp(rng.normal(2, 0.4, n))))


def test_log_transform_of_powers_of_e():
    recs = make_records([1.0, math.e, math.e ** 2], [1, 2, 3])
    ps = log_transform(as_project_set(recs), ["size"], margin=0.0)
    entry = ps.transform_log[0]
    assert (entry["lo"], entry["hi"]) == pytest.approx((0.0, 2.0))
    scaled = [r.size for r in ps.records]
    assert [entry["lo"] + s * (entry["hi"] - entry["lo"]) for s in scaled] == pytest.approx([0, 1, 2])


def test_log_transform_range_inside_unit_interval():
    ps = log_transform(sample_set(), ["size", "effort"])
    vals = np.array([[r.size, r.effort] for r in ps.records])
    assert vals.min() > 0 and vals.max() < 1


def test_log_transform_zero_range():
    with pytest.raises(TransformError, match="zero range"):
        log_transform(as_project_set(make_records([5, 5, 5], [1, 2, 3])), ["size"])


def test_log_transform_names_bad_record():
    recs = make_records([5, -1, 3], [1, 2, 3])
    with pytest.raises(TransformError, match="R001.*size"):
        log_transform(as_project_set(recs), ["size"])


def test_log_transform_symmetrizes_lognormal(rng):
    x = rng.lognormal(0, 1, 500)
    ps = log_transform(as_project_set(make_records(x, x)), ["size"])
    assert abs(moments([r.size for r in ps.records]).skewness) <= 0.3


@given(st.lists(st.floats(min_value=1e-3, max_value=1e6), min_size=2, max_size=30))
def test_log_transform_inverse_round_trip(values):
    if max(values) / min(values) < 1 + 1e-6:
        return
    ps = as_project_set(make_records(values, values))
    back = inverse_transform(log_transform(ps, ["size", "effort"]))
    for orig, rec in zip(values, back.records):
        assert rec.size == pytest.approx(orig, rel=1e-9)
        assert rec.effort == pytest.approx(orig, rel=1e-9)


def test_zscore_values():
    ps = zscore_normalize(as_project_set(make_records([1, 2, 3], [1, 1, 2])), ["size"])
    assert [r.size for r in ps.records] == pytest.approx([-1, 0, 1])


def test_zscore_constant_feature():
    with pytest.raises(TransformError, match="size"):
        zscore_normalize(as_project_set(make_records([4, 4, 4], [1, 2, 3])), ["size"])


@given(st.lists(st.floats(min_value=-1e4, max_value=1e4), min_size=2, max_size=30))
def test_zscore_mean_zero(values):
    if np.std(values) < 1e-6:
        return
    ps = zscore_normalize(as_project_set(make_records(values, [1] * len(values))), ["size"])
    assert abs(np.mean([r.size for r in ps.records])) <= 1e-12 * max(1.0, len(values))


def cooks_oracle(x, y):
    """Brute force: refit without each point and measure the shift in all fitted values."""
    n = len(x)
    X = np.column_stack([np.ones(n), x])
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ beta
    k = X.shape[1]
    mse = np.sum((y - fitted) ** 2) / (n - k)
    out = []
    for i in range(n):
        keep = np.arange(n) != i
        b_i, *_ = np.linalg.lstsq(X[keep], y[keep], rcond=None)
        out.append(np.sum((fitted - X @ b_i) ** 2) / (k * mse))
    return np.array(out)


def test_cooks_removes_gross_outlier():
    rng = np.random.default_rng(3)
    x = np.linspace(1, 20, 20)
    y = 2 * x + 1 + rng.normal(0, 0.01, 20)
    x = np.append(x, 60.0)
    y = np.append(y, -50.0)
    ps = as_project_set(make_records(x, y))
    d = cooks_distance(ps, "effort", ["size"])
    assert np.allclose(d, cooks_oracle(x, y), rtol=1e-8)
    out, removed = cooks_filter(ps, "effort", ["size"])
    assert "R020" in removed and len(out) == len(ps) - len(removed)
    assert out.removals[-1].stage == "cooks_filter"


def test_cooks_iid_keeps_everything_at_one():
    rng = np.random.default_rng(9)
    x = rng.normal(size=40)
    y = 0.5 * x + rng.normal(size=40)
    ps = as_project_set(make_records(x, y))
    assert cooks_oracle(x, y).max() < 1.0
    _, removed = cooks_filter(ps, "effort", ["size"], threshold=1.0)
    assert removed == []


@pytest.mark.parametrize("seed", range(5))
def test_cooks_never_removes_below_threshold(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 31))
    x = rng.normal(size=n)
    y = x + rng.standard_t(2, size=n)
    ps = as_project_set(make_records(x, y))
    oracle = cooks_oracle(x, y)
    _, removed = cooks_filter(ps, "effort", ["size"])
    for i, rid in enumerate(ps.ids):
        assert (rid in removed) == (oracle[i] > 4.0 / n)


def test_cooks_singular_design():
    ps = as_project_set(make_records([1, 2, 3, 4, 5], [2, 4, 5, 4, 6]))
    with pytest.raises(RankDeficientError, match="removing predictor"):
        cooks_filter(ps, "effort", ["size", "size"])


def test_sort_examples():
    recs = make_records([1, 2, 3], [1, 2, 3])
    ps = as_project_set(recs)
    assert sort_chronologically(ps).records == ps.records
    assert sort_chronologically(ps.with_records(recs[::-1])).records == ps.records
    same = [replace(recs[0], id="b"), replace(recs[0], id="a")]
    assert sort_chronologically(ps.with_records(same)).ids == ["a", "b"]


@given(st.lists(st.integers(0, 50), min_size=1, max_size=40))
def test_sort_is_a_permutation(days):
    from datetime import timedelta
    recs = [replace(r, completion_date=date(2000, 1, 1) + timedelta(days=d))
            for r, d in zip(make_records([1] * len(days), [1] * len(days)), days)]
    out = sort_chronologically(as_project_set(recs))
    assert sorted(out.ids) == sorted(r.id for r in recs)
    dates = [r.completion_date for r in out.records]
    assert dates == sorted(dates)


def test_write_csv_round_trip(tmp_path):
    ps = load_projects(three_rows(tmp_path), MAPPING)
    write_csv(ps, tmp_path / "out.csv", MAPPING)
    again = load_projects(tmp_path / "out.csv", MAPPING)
    assert again.ids == ps.ids
    assert [r.effort for r in again.records] == [r.effort for r in ps.records]
