import csv
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bellwether.dataset import ProjectRecord
from bellwether.stratify import Window
from bellwether.weighting import apply_weights

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_records(sizes, efforts, elapsed=None, start=date(2000, 1, 1), step_days=30, cats=None):
    elapsed = elapsed if elapsed is not None else [5.0 + (i % 4) for i in range(len(sizes))]
    out = []
    for i, (s, e, t) in enumerate(zip(sizes, efforts, elapsed)):
        out.append(ProjectRecord(
            id=f"R{i:03d}", completion_date=start + timedelta(days=step_days * i), size=float(s),
            effort=float(e), elapsed_time=float(t), pdr=float(e) / float(s) if s else None,
            categoricals=dict(cats[i]) if cats else {}))
    return out


def weighted(records, kernel="rectangular", transform_log=()):
    return apply_weights(Window(1, tuple(records), 0, tuple(transform_log)), kernel)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
