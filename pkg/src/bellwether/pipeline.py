"""End-to-end orchestration: preprocess, stratify, search every learner x
kernel cell, evaluate the holdout and compare the weighting kernels."""
from __future__ import annotations

import contextlib
import math
import platform
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
import scipy

from bellwether import _kernels
from bellwether.dataset import (
    RATIO_FEATURES,
    apply_transforms,
    cooks_filter,
    filter_quality,
    load_projects,
    log_transform,
    sort_chronologically,
    zscore_normalize,
)
from bellwether.errors import BellwetherError, ConfigError, DataError, EmptyInputError
from bellwether.metrics import glass_delta, kruskal_wallis, welch_t
from bellwether.search import (
    BELLWETHER,
    NO_BELLWETHER,
    cross_window_errors,
    evaluate_holdout,
    fit_weighted,
    growing_portfolio,
    search_bellwether,
)
from bellwether.stratify import stratify, xmeans

METRIC_INDEX = {"mae": 0, "mbre": 1, "mibre": 2}
from bellwether import __version__ as PACKAGE_VERSION


@contextlib.contextmanager
def stage(name):
    """Tag any error raised inside the block with the pipeline stage."""
    try:
        yield
    except Exception as exc:
        if not hasattr(exc, "stage"):
            exc.stage = name
        raise


@dataclass
class Prepared:
    data: object  # modeling ProjectSet: filtered, sorted, transformed, Cook's-filtered
    holdout: object | None  # raw holdout record
    holdout_transformed: object | None
    loaded: object
    filter_report: object
    cooks_removed: list = field(default_factory=list)

    def counts(self):
        return {
            "loaded": len(self.loaded),
            "rejected_rows": len(self.loaded.rejected),
            "after_filters": self.filter_report.retained,
            "holdout": 0 if self.holdout is None else 1,
            "cooks_removed": len(self.cooks_removed),
            "modeling": len(self.data),
        }


def load_input(cfg):
    if not cfg.input:
        raise ConfigError("no input file configured")
    if cfg.columns is None:
        raise ConfigError("no column mapping configured ([columns] table)")
    path = Path(cfg.input)
    with stage("load"):
        if not path.is_file():
            raise DataError(f"input file not found: {path}")
        return load_projects(path, cfg.columns, strict=cfg.strict_load)


def preprocess(ps, cfg):
    """Filter, sort, split off the holdout, transform and remove influential
    projects. Transform parameters are fitted without the holdout."""
    with stage("filter_quality"):
        filtered, report = filter_quality(ps, cfg.filters)
        if report.empty:
            raise EmptyInputError("no projects left after the quality filters")
    with stage("sort"):
        ordered = sort_chronologically(filtered)
    with stage("holdout"):
        records = list(ordered.records)
        holdout = None
        if cfg.holdout == "latest":
            holdout = records.pop()
        else:
            wanted = cfg.holdout[3:]
            idx = next((i for i, r in enumerate(records) if r.id == wanted), None)
            if idx is None:
                raise DataError(f"holdout project {wanted!r} not found after filtering")
            holdout = records.pop(idx)
        rest = ordered.with_records(records)
    with stage("transform"):
        present = {name for name, kind in rest.feature_schema if kind == "ratio"}
        feats = [f for f in cfg.transform_features if f in present and f in RATIO_FEATURES]
        if cfg.transform == "log":
            rest = log_transform(rest, feats, cfg.log_margin)
        elif cfg.transform == "zscore":
            rest = zscore_normalize(rest, feats)
    removed = []
    if cfg.cooks:
        with stage("cooks_filter"):
            rest, removed = cooks_filter(rest, "effort", list(cfg.cooks_predictors), cfg.cooks_threshold)
    with stage("holdout"):
        for name in ("size", "effort", "elapsed_time", "completion_date"):
            if getattr(holdout, name) is None:
                raise DataError(f"holdout {holdout.id!r} is missing {name}")
        holdout_t = apply_transforms(holdout, rest.transform_log)
    return Prepared(rest, holdout, holdout_t, ps, report, removed)


def make_strata(data, cfg):
    with stage("stratify"):
        clustering = xmeans(data, cfg.kmin, cfg.kmax, cfg.cluster_seed)
        q = clustering.q
        if q < 2:
            raise DataError(f"X-means chose {q} stratum; the search needs at least two")
        return clustering, stratify(data, q)


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _case_errors(summaries, metric):
    j = METRIC_INDEX[metric]
    return [case[j] for s in summaries for case in s.per_case]


@dataclass
class CellOutcome:
    learner: str
    kernel: str
    result: object
    errors: dict  # metric -> pooled value over the validation projects
    window_errors: list  # search metric on each validation window
    holdout: object | None
    model: object | None
    trace_row: int | None = None


def run_cell(prepared, strata, cfg, learner, kernel):
    sc = cfg.search_config(learner, kernel)
    with stage(f"search[{learner}/{kernel}]"):
        result = search_bellwether(strata, sc)
    if not result.found:
        return CellOutcome(learner, kernel, result, {}, [], None, None)
    with stage(f"evaluate[{learner}/{kernel}]"):
        summaries = cross_window_errors(result.window, result.validation, sc)
        pooled = {m: float(np.mean(_case_errors(summaries, m))) for m in METRIC_INDEX}
        holdout = evaluate_holdout(result, prepared.holdout_transformed, sc, prepared.data.records)
        model = fit_weighted(sc, result.window)
    per_window = [s.get(cfg.metric) for s in summaries]
    return CellOutcome(learner, kernel, result, pooled, per_window, holdout, model)


def run_pipeline(cfg, ps=None):
    """Run everything; returns ``(report, artifacts)``.

    ``report`` is a JSON-ready dict; ``artifacts`` holds the objects the
    writers need (prepared data, strata, per-cell outcomes, trace rows).
    """
    ps = load_input(cfg) if ps is None else ps
    prepared = preprocess(ps, cfg)
    clustering, strata = make_strata(prepared.data, cfg)

    cells, trace = [], []
    for learner in cfg.learners:
        for kernel in cfg.kernels:
            outcome = run_cell(prepared, strata, cfg, learner, kernel)
            final_start = outcome.result.window.window.start if outcome.result.found else None
            final_row = None
            for row in outcome.result.trace:
                trace.append({"row": len(trace) + 1, "learner": learner, "kernel": kernel, **row})
                if final_start is not None and row["start"] == final_start:
                    final_row = len(trace)
            outcome.trace_row = final_row
            cells.append(outcome)

    portfolio = {}
    if cfg.portfolio_loocv:
        for learner in cfg.learners:
            with stage(f"growing_portfolio[{learner}]"):
                pf = growing_portfolio(prepared.data, cfg.search_config(learner, "rectangular"))
            portfolio[learner] = {"mae": pf.errors.mae, "mbre": pf.errors.mbre, "mibre": pf.errors.mibre,
                                  "n_folds": pf.n_folds, "skipped": pf.skipped}

    with stage("compare"):
        kw, pairwise = kernel_tests(cells, cfg)

    report = {
        "metadata": {
            "package": "bellwether", "version": PACKAGE_VERSION, "kernel_backend": _kernels.BACKEND,
            "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "seeds": {"search": cfg.seed, "cluster": cfg.cluster_seed, "dnn": cfg.seed},
        },
        "config": {k: v for k, v in cfg.to_dict().items() if k != "output_dir"},
        "preprocessing": {
            **prepared.counts(),
            "filter_removed": dict(prepared.filter_report.removed),
            "filter_skipped": list(prepared.filter_report.skipped),
            "holdout_id": prepared.holdout.id if prepared.holdout else None,
            "transform_log": [dict(e) for e in prepared.data.transform_log],
        },
        "stratification": {
            "q": len(strata),
            "sizes": [len(w) for w in strata],
            "bic_trace": [[int(k), _finite(b)] for k, b in clustering.trace],
        },
        "cells": [_cell_dict(c) for c in cells],
        "tables": error_tables(cells, cfg),
        "kruskal_wallis": kw,
        "pairwise": pairwise,
        "growing_portfolio": portfolio,
    }
    artifacts = {"prepared": prepared, "strata": strata, "cells": cells, "trace": trace,
                 "clustering": clustering}
    return report, artifacts


def _cell_dict(c):
    r = c.result
    d = {"learner": c.learner, "kernel": c.kernel, "status": r.status, "trace_row": c.trace_row}
    if r.found:
        recs = r.window.records
        d.update({
            "size": r.size, "age": r.age, "first_id": recs[0].id, "last_id": recs[-1].id,
            "chain": r.stationarity.status,
            "wins": r.wins.n_wins, "n_validation": len(r.wins.wins),
            "validation_projects": sum(len(w) for w in r.validation),
            **{m: c.errors[m] for m in METRIC_INDEX},
            "window_metrics": list(c.window_errors),
        })
        h = c.holdout
        d["holdout"] = {"id": h.holdout_id, "actual": h.actual, "bellwether_estimate": h.bellwether_estimate,
                        "portfolio_estimate": h.portfolio_estimate, "bellwether_error": h.bellwether_error,
                        "portfolio_error": h.portfolio_error, "portfolio_size": h.portfolio_size}
    return d


def error_tables(cells, cfg):
    """learner x kernel tables per metric with the row minimum marked."""
    tables = {}
    for metric in METRIC_INDEX:
        rows = {}
        best = {}
        for learner in cfg.learners:
            row = {c.kernel: c.errors.get(metric) for c in cells if c.learner == learner}
            rows[learner] = row
            found = {k: v for k, v in row.items() if v is not None}
            best[learner] = min(found, key=lambda k: (found[k], cfg.kernels.index(k))) if found else None
        tables[metric] = {"values": rows, "best": best}
    return tables


def kernel_tests(cells, cfg):
    """Kruskal-Wallis across kernels per learner; Welch t and Glass' delta
    for every kernel pair (first kernel treated, second control)."""
    kw, pairwise = {}, []
    for learner in cfg.learners:
        groups = {c.kernel: c.window_errors for c in cells if c.learner == learner and c.window_errors}
        usable = [k for k in cfg.kernels if k in groups]
        entry = {"kernels": usable, "statistic": None, "p_value": None, "df": None, "method": None}
        if len(usable) >= 2:
            try:
                res = kruskal_wallis([groups[k] for k in usable])
                entry.update({"statistic": res.statistic, "p_value": res.p_value, "df": res.df,
                              "method": res.method})
            except BellwetherError as exc:
                entry["error"] = str(exc)
        kw[learner] = entry
        for a, b in combinations(usable, 2):
            row = {"learner": learner, "treatment": a, "control": b,
                   "t": None, "df": None, "p_value": None, "delta": None}
            try:
                res = welch_t(groups[a], groups[b])
                row.update({"t": res.statistic, "df": res.df, "p_value": res.p_value})
            except BellwetherError as exc:
                row["error"] = str(exc)
            try:
                row["delta"] = glass_delta(groups[a], groups[b])
            except BellwetherError as exc:
                row.setdefault("error", str(exc))
            pairwise.append(row)
    return kw, pairwise


def any_bellwether(report):
    return any(c["status"] != NO_BELLWETHER for c in report["cells"])


def all_confirmed(report):
    return all(c["status"] == BELLWETHER for c in report["cells"])
