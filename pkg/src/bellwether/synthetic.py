"""Seeded synthetic project data used by the test-suite, the benchmarks and
the bundled example dataset.

Effort follows a log-linear size relation with multiplicative noise. A
*regime shift* multiplies effort for every project completed before a
change point, which is what the moving-window search is meant to avoid.
"""
from __future__ import annotations

import csv
import math
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from bellwether.dataset import RATIO_FEATURES, ColumnMapping, ProjectRecord, ProjectSet

CATEGORICAL_LEVELS = {
    "language_type": ("3GL", "4GL", "ApG"),
    "development_type": ("New", "Enhancement", "Re-development"),
    "platform": ("MF", "MR", "PC", "Multi"),
    "sector": ("Banking", "Government", "Insurance", "Manufacturing"),
}

ISBSG_COLUMNS = {
    "id": "ProjectID",
    "completion_date": "CompletionDate",
    "start_date": "StartDate",
    "size": "UFP",
    "effort": "Effort",
    "elapsed_time": "ElapsedMonths",
    "quality_rating": "QualityRating",
    "fp_version": "FPVersion",
    "web": "Web",
}

FAILURE_KINDS = ("missing_completion", "unknown_age", "low_quality", "outdated_fp",
                 "unknown_effort", "unknown_size", "web", "missing_values")


def isbsg_mapping(with_categoricals=True):
    cats = {name: name for name in CATEGORICAL_LEVELS} if with_categoricals else {}
    return ColumnMapping(categoricals=cats, **ISBSG_COLUMNS)


def _effort(rng, size, base, slope, noise, multiplier=1.0):
    return float(multiplier * math.exp(base + slope * math.log(size) + rng.normal(0.0, noise)))


def _dates(rng, n, first, last):
    span = (last - first).days
    offsets = np.sort(rng.integers(0, span + 1, size=n))
    return [first + timedelta(days=int(d)) for d in offsets]


def regime_shift_records(seed=0, n=240, change_fraction=1 / 3, shift=4.0, noise=0.15,
                         first=date(2000, 1, 1), last=date(2009, 12, 31), slope=0.9, base=2.0):
    """Chronological projects whose oldest ``change_fraction`` share has effort
    inflated by ``shift``. Returns ``(records, change_date)`` where every
    project completed after ``change_date`` follows the current regime."""
    rng = np.random.default_rng(seed)
    dates = _dates(rng, n, first, last)
    n_old = int(round(n * change_fraction))
    records = []
    for i, done in enumerate(dates):
        size = float(math.exp(rng.normal(math.log(200), 0.8)))
        months = float(math.exp(rng.normal(math.log(8), 0.4)))
        effort = _effort(rng, size, base, slope, noise, shift if i < n_old else 1.0)
        records.append(ProjectRecord(
            id=f"P{i:04d}", completion_date=done, size=size, effort=effort,
            elapsed_time=months, start_date=done - timedelta(days=int(months * 30.44)),
            pdr=effort / size))
    change = dates[n_old - 1] if n_old else first - timedelta(days=1)
    return records, change


def periodic_age_records(n=60, ages=(3.0, 12.0), seed=0):
    """Projects whose durations alternate between two values, so every
    contiguous window yields a period-2 age chain."""
    rng = np.random.default_rng(seed)
    start = date(2001, 1, 1)
    records = []
    for i in range(n):
        size = float(math.exp(rng.normal(math.log(150), 0.5)))
        effort = _effort(rng, size, 2.0, 0.9, 0.2)
        records.append(ProjectRecord(
            id=f"Q{i:04d}", completion_date=start + timedelta(days=30 * i), size=size,
            effort=effort, elapsed_time=ages[i % 2], pdr=effort / size))
    return records


def as_project_set(records, categoricals=()):
    schema = tuple((f, "ratio") for f in RATIO_FEATURES) + tuple((c, "categorical") for c in categoricals)
    fields = {"id", "completion_date", "start_date", "size", "effort", "elapsed_time", "pdr"}
    if categoricals:
        fields.add("categoricals")
    return ProjectSet(tuple(records), schema, fields=frozenset(fields))


def isbsg_like_rows(seed=0, n_total=4106, n_clean=1097, recent=257, recent_years=2.5,
                    shift=3.0, noise=0.3, eras=1):
    """Raw CSV rows shaped like a large multi-company repository.

    Exactly ``n_clean`` rows survive the default quality filters; each of the
    other rows fails precisely one filter. The newest ``recent`` clean
    projects span ``recent_years`` and follow the current effort regime;
    older clean projects carry an effort multiplier ``shift``. With
    ``eras > 1`` the older projects are cut into that many chronological
    blocks whose multipliers alternate between ``shift`` and ``1 / shift``.
    """
    if not 0 < recent <= n_clean <= n_total:
        raise ValueError("need 0 < recent <= n_clean <= n_total")
    rng = np.random.default_rng(seed)
    end = date(2008, 6, 30)
    change = end - timedelta(days=int(recent_years * 365.25))
    old_dates = _dates(rng, n_clean - recent, date(1989, 1, 1), change - timedelta(days=1))
    new_dates = _dates(rng, recent, change, end)
    n_old = len(old_dates)
    rows = []
    for i, done in enumerate(old_dates + new_dates):
        mult = 1.0
        if i < n_old:
            era = i * eras // n_old
            mult = shift if era % 2 == 0 else 1.0 / shift
        rows.append(_clean_row(rng, done, mult, noise))
    for k in range(n_total - n_clean):
        done = _dates(rng, 1, date(1989, 1, 1), end)[0]
        row = _clean_row(rng, done, 1.0, noise)
        _break(row, FAILURE_KINDS[k % len(FAILURE_KINDS)], rng)
        rows.append(row)
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]
    for i, row in enumerate(rows):
        row["ProjectID"] = f"S{i:05d}"
    return rows


def _clean_row(rng, done, multiplier, noise):
    size = float(math.exp(rng.normal(math.log(250), 0.9)))
    months = float(math.exp(rng.normal(math.log(9), 0.5)))
    row = {
        "ProjectID": "",
        "CompletionDate": done.isoformat(),
        "StartDate": (done - timedelta(days=int(months * 30.44))).isoformat(),
        "UFP": f"{size:.2f}",
        "Effort": f"{_effort(rng, size, 2.2, 0.85, noise, multiplier):.2f}",
        "ElapsedMonths": f"{months:.2f}",
        "QualityRating": "A" if rng.random() < 0.6 else "B",
        "FPVersion": f"{rng.choice([4.0, 4.1, 4.2]):.1f}",
        "Web": "no",
    }
    for name, levels in CATEGORICAL_LEVELS.items():
        row[name] = str(rng.choice(levels))
    return row


def _break(row, kind, rng):
    if kind == "missing_completion":
        row["CompletionDate"] = ""
    elif kind == "unknown_age":
        row["ElapsedMonths"] = ""
    elif kind == "low_quality":
        row["QualityRating"] = str(rng.choice(["C", "D"]))
    elif kind == "outdated_fp":
        row["FPVersion"] = str(rng.choice(["2.0", "3.0", "3.4"]))
    elif kind == "unknown_effort":
        row["Effort"] = ""
    elif kind == "unknown_size":
        row["UFP"] = ""
    elif kind == "web":
        row["Web"] = "yes"
    else:
        row[str(rng.choice(list(CATEGORICAL_LEVELS)))] = ""


def write_rows(rows, path):
    path = Path(path)
    header = list(rows[0])
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return path
