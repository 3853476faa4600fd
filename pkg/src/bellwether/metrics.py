"""Estimation error measures and the significance tests used to compare
weighting functions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from bellwether._special import chi2_sf, t_two_sided_p
from bellwether.errors import ConfigError, DegenerateError, InsufficientDataError

EFFECT_THRESHOLD = 0.5
# exhaustive permutation p-values up to this many distinct group assignments
EXACT_KW_LIMIT = 200_000


@dataclass(frozen=True)
class ErrorSummary:
    mae: float
    mbre: float
    mibre: float
    n: int
    per_case: tuple = field(repr=False, default=())

    def get(self, metric):
        return getattr(self, metric)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: float
    method: str = ""
    degenerate: bool = False

    __test__ = False  # not a pytest class


def error_summary(actual, estimated):
    """MAE, MBRE and MIBRE.

    BRE divides the absolute error by ``min(actual, estimate)``, IBRE by the
    max; both require positive values.
    """
    a = np.asarray(actual, dtype=np.float64)
    e = np.asarray(estimated, dtype=np.float64)
    if a.shape != e.shape:
        raise ConfigError(f"length mismatch: {a.size} actual vs {e.size} estimated")
    if a.size == 0:
        raise InsufficientDataError("need at least one case")
    if np.any(a <= 0) or np.any(e <= 0):
        raise DegenerateError("balanced relative errors need positive actual and estimated values")
    abs_err = np.abs(a - e)
    bre = abs_err / np.minimum(a, e)
    ibre = abs_err / np.maximum(a, e)
    per_case = tuple(zip(abs_err.tolist(), bre.tolist(), ibre.tolist()))
    return ErrorSummary(float(abs_err.mean()), float(bre.mean()), float(ibre.mean()), int(a.size), per_case)


def welch_t(a, b):
    """Welch's unequal-variance t-test, two-sided."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise InsufficientDataError("Welch t-test needs at least two observations per sample")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0:
        if diff == 0:
            raise DegenerateError("both samples have zero variance and equal means")
        raise DegenerateError("both samples have zero variance")
    t = float(diff / math.sqrt(se2))
    df = float(se2 ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1)))
    return TestResult(t, t_two_sided_p(t, df), df, "welch")


def midranks(values):
    """Ranks starting at 1, ties receiving the average of their positions."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size, dtype=np.float64)
    xs = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _h_statistic(ranks, sizes, n_total, correction):
    h = 0.0
    pos = 0
    for n_g in sizes:
        r = ranks[pos:pos + n_g]
        h += r.sum() ** 2 / n_g
        pos += n_g
    h = 12.0 / (n_total * (n_total + 1)) * h - 3.0 * (n_total + 1)
    return h / correction


def _n_assignments(sizes):
    total, left = 1, sum(sizes)
    for s in sizes:
        total *= comb(left, s)
        left -= s
    return total


def _exact_kw_p(ranks, sizes, h_obs, correction):
    n_total = ranks.size
    hits = count = 0

    def assign(remaining, k, sums):
        nonlocal hits, count
        if k == len(sizes) - 1:
            last = ranks[list(remaining)].sum()
            h = 12.0 / (n_total * (n_total + 1)) * (
                sum(s * s / n for s, n in zip(sums + [last], sizes))) - 3.0 * (n_total + 1)
            count += 1
            if h / correction >= h_obs - 1e-9:
                hits += 1
            return
        for chosen in combinations(remaining, sizes[k]):
            rest = [i for i in remaining if i not in chosen]
            assign(rest, k + 1, sums + [ranks[list(chosen)].sum()])

    assign(list(range(n_total)), 0, [])
    return hits / count


def kruskal_wallis(groups, method="auto"):
    """Kruskal-Wallis H test with midranks and the usual tie correction.

    ``method`` is ``"asymptotic"`` (chi-square with k-1 df), ``"exact"``
    (enumerate every assignment of the pooled ranks to groups of the
    observed sizes) or ``"auto"``: exact when there are at most
    ``EXACT_KW_LIMIT`` assignments, asymptotic otherwise. The chi-square
    approximation is off by more than 0.1 for very small samples.
    """
    groups = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    if len(groups) < 2:
        raise InsufficientDataError("need at least two groups")
    if any(g.size == 0 for g in groups):
        raise InsufficientDataError("every group needs at least one observation")
    sizes = [g.size for g in groups]
    n_total = sum(sizes)
    if n_total < 3:
        raise InsufficientDataError("need at least three observations in total")
    if method not in ("auto", "exact", "asymptotic"):
        raise ConfigError(f"unknown method {method!r}")
    pooled = np.concatenate(groups)
    ranks = midranks(pooled)
    _, tie_counts = np.unique(pooled, return_counts=True)
    correction = 1.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / (n_total ** 3 - n_total)
    df = float(len(groups) - 1)
    if correction <= 0:
        return TestResult(0.0, 1.0, df, "degenerate", degenerate=True)
    h = max(0.0, _h_statistic(ranks, sizes, n_total, correction))
    if method == "auto":
        method = "exact" if _n_assignments(sizes) <= EXACT_KW_LIMIT else "asymptotic"
    if method == "exact":
        p = _exact_kw_p(ranks, sizes, h, correction)
    else:
        p = chi2_sf(h, df)
    return TestResult(h, min(1.0, max(0.0, p)), df, method)


def glass_delta(treatment, control):
    """Absolute mean difference over the control group's sample sd."""
    t = np.asarray(treatment, dtype=np.float64)
    c = np.asarray(control, dtype=np.float64)
    if c.size < 2 or t.size < 1:
        raise InsufficientDataError("Glass' delta needs a control group of size >= 2")
    sd = float(c.std(ddof=1))
    if sd <= 0:
        raise DegenerateError("control group has zero standard deviation")
    return abs(float(t.mean()) - float(c.mean())) / sd


def practically_significant(delta, threshold=EFFECT_THRESHOLD):
    return delta > threshold
