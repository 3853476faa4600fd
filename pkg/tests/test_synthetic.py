from collections import Counter

import pytest

from bellwether.config import example_config_path, load_config
from bellwether.dataset import filter_quality, load_projects
from bellwether.pipeline import load_input, make_strata, preprocess, run_cell
from bellwether.synthetic import (
    FAILURE_KINDS,
    isbsg_like_rows,
    isbsg_mapping,
    regime_shift_records,
    write_rows,
)


@pytest.fixture(scope="module")
def isbsg_csv(tmp_path_factory):
    return write_rows(isbsg_like_rows(0), tmp_path_factory.mktemp("isbsg") / "rows.csv")


def test_isbsg_shape_survives_filters(isbsg_csv):
    ps = load_projects(isbsg_csv, isbsg_mapping(), strict=False)
    assert len(ps) + len(ps.rejected) == 4106
    kept, report = filter_quality(ps)
    assert len(kept) == report.retained == 1097
    assert sum(report.removed.values()) + len(ps.rejected) == 4106 - 1097


def _failures(row):
    out = [name for name in ("CompletionDate", "ElapsedMonths", "Effort", "UFP") if row[name] == ""]
    out += ["quality"] if row["QualityRating"] in ("C", "D") else []
    out += ["fp"] if float(row["FPVersion"]) < 4 else []
    out += ["web"] if row["Web"] == "yes" else []
    out += [n for n in ("language_type", "development_type", "platform", "sector") if row[n] == ""]
    return out


def test_broken_rows_fail_exactly_one_check():
    rows = isbsg_like_rows(1, n_total=200, n_clean=40, recent=10)
    assert len(rows) == 200 and len({r["ProjectID"] for r in rows}) == 200
    counts = Counter(len(_failures(r)) for r in rows)
    assert counts == {0: 40, 1: 160}
    assert len(FAILURE_KINDS) == 8


def test_regime_change_point():
    recs, change = regime_shift_records(0, n=90)
    old = [r for r in recs if r.completion_date <= change]
    assert len(old) == 30
    assert all(a.completion_date <= b.completion_date for a, b in zip(recs, recs[1:]))


def test_calibrated_window_dimensions(tmp_path):
    path = write_rows(isbsg_like_rows(7, n_clean=1059, recent=257, recent_years=2.5, eras=2),
                      tmp_path / "calibrated.csv")
    cfg = load_config(example_config_path(), [f'input="{path}"', 'learners=["mlr"]',
                                               'kernels=["gaussian"]', "portfolio_loocv=false"])
    prepared = preprocess(load_input(cfg), cfg)
    _, strata = make_strata(prepared.data, cfg)
    result = run_cell(prepared, strata, cfg, "mlr", "gaussian").result
    assert result.status == "bellwether"
    assert result.size == 257
    assert result.age == pytest.approx(2.5, abs=0.1)
