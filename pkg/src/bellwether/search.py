"""Bellwether moving-window search and the growing-portfolio baseline.

The search starts from the newest stratum and hill-climbs over the position
of its oldest boundary: *grow* pulls the adjacent older projects into the
candidate, *shrink* hands the candidate's oldest projects back. A candidate
is eligible only when the Markov chain over its project ages is ergodic.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from bellwether import learners
from bellwether.dataset import invert_values
from bellwether.errors import BellwetherError, ConfigError, DataError, InsufficientDataError
from bellwether.learners.network import DnnConfig
from bellwether.markov import DEFAULT_EPS, DEFAULT_MAX_SQUARINGS, check_window, window_dimensions
from bellwether.metrics import error_summary
from bellwether.stratify import Window
from bellwether.weighting import KERNELS, apply_weights

log = logging.getLogger(__name__)

METRICS = ("mae", "mbre", "mibre")
BELLWETHER = "bellwether"
BEST_EFFORT = "best_effort"
NO_BELLWETHER = "no_bellwether"


@dataclass(frozen=True)
class SearchConfig:
    learner: str = "mlr"
    kernel: str = "gaussian"
    metric: str = "mae"
    majority_rule: float = 0.5
    max_adjustments: int = 50
    adjust_step: int = 5
    seed: int = 0
    predictors: tuple = ("size",)
    categoricals: tuple = ()
    dnn: DnnConfig = field(default_factory=DnnConfig)
    bin_width: float | None = None
    age_source: str = "elapsed_time"
    eps: float = DEFAULT_EPS
    max_squarings: int = DEFAULT_MAX_SQUARINGS

    def __post_init__(self):
        if not 0 < self.majority_rule <= 1:
            raise ConfigError("majority_rule must lie in (0, 1]")
        if self.adjust_step < 1:
            raise ConfigError("adjust_step must be >= 1")
        if self.learner not in learners.LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")

    @property
    def dnn_config(self):
        return replace(self.dnn, seed=self.seed)


def train(cfg, records, weights, transform_log):
    """Fit ``cfg.learner`` on ``records`` with the given observation weights."""
    window = Window(0, tuple(records), 0, tuple(transform_log))
    ww = apply_weights(window, "rectangular")
    ww = replace(ww, weights=np.asarray(weights, dtype=np.float64))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return learners.fit(cfg.learner, ww, cfg.predictors, cfg.categoricals, cfg.dnn_config)


def fit_weighted(cfg, ww):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return learners.fit(cfg.learner, ww, cfg.predictors, cfg.categoricals, cfg.dnn_config)


def actual_effort(records, transform_log):
    eff = np.array([r.effort for r in records], dtype=np.float64)
    return invert_values("effort", eff, transform_log)


def evaluate_model(model, records, transform_log):
    """Error summary in raw effort hours."""
    est = model.predict_many(records, transformed=True)
    return error_summary(actual_effort(records, transform_log), est)


@dataclass(frozen=True)
class ScoreLedger:
    metrics: tuple  # candidate metric per validation window
    references: tuple  # reference metric per validation window (inf: no reference)
    wins: tuple
    failed: bool = False
    diagnostic: str = ""

    @property
    def n_wins(self):
        return sum(self.wins)

    @property
    def win_fraction(self):
        return self.n_wins / len(self.wins) if self.wins else 0.0

    @property
    def mean_metric(self):
        finite = [m for m in self.metrics if math.isfinite(m)]
        return float(np.mean(finite)) if finite and not self.failed else math.inf


def reference_metrics(others, cfg, transform_log):
    """Metric on each validation window of a model trained, unweighted, on
    the remaining validation windows. ``inf`` when there is nothing (or too
    little) to train on."""
    refs = []
    for j, target in enumerate(others):
        pool = [r for k, w in enumerate(others) if k != j for r in w.records]
        if not pool:
            refs.append(math.inf)
            continue
        try:
            model = train(cfg, pool, np.ones(len(pool)), transform_log)
            refs.append(evaluate_model(model, target.records, transform_log).get(cfg.metric))
        except (BellwetherError, np.linalg.LinAlgError) as exc:
            log.debug("reference fit failed for window %d: %s", target.index, exc)
            refs.append(math.inf)
    return refs


def cross_window_score(candidate, others, cfg, references=None):
    """Fit on the weighted candidate and score it on every validation window.

    A win on window j means the candidate's metric there is strictly below
    the reference metric for j (see :func:`reference_metrics`).
    """
    if not others:
        raise ConfigError("no validation windows to score against")
    cand_ids = {r.id for r in candidate.records}
    if any(r.id in cand_ids for w in others for r in w.records):
        raise ConfigError("candidate overlaps a validation window")
    log_ = candidate.window.transform_log
    if references is None:
        references = reference_metrics(others, cfg, log_)
    try:
        model = fit_weighted(cfg, candidate)
        metrics = [evaluate_model(model, w.records, log_).get(cfg.metric) for w in others]
    except (BellwetherError, np.linalg.LinAlgError) as exc:
        n = len(others)
        return ScoreLedger((math.inf,) * n, tuple(references), (False,) * n, True, str(exc))
    wins = tuple(m < ref for m, ref in zip(metrics, references))
    return ScoreLedger(tuple(metrics), tuple(references), wins)


def cross_window_errors(candidate, others, cfg):
    """All three error measures per validation window for the candidate."""
    model = fit_weighted(cfg, candidate)
    log_ = candidate.window.transform_log
    return [evaluate_model(model, w.records, log_) for w in others]


@dataclass
class Candidate:
    start: int
    window: Window
    weighted: object
    stationarity: object
    others: list
    ledger: ScoreLedger
    size: int
    age: float

    @property
    def ergodic(self):
        return self.stationarity.ergodic

    def key(self):
        return (self.ergodic, self.ledger.win_fraction, -self.ledger.mean_metric, -self.start)


@dataclass
class BellwetherResult:
    status: str
    window: object  # WeightedWindow, None when no ergodic candidate was found
    size: int
    age: float
    stationarity: object
    wins: ScoreLedger | None
    validation: list
    trace: list
    config: SearchConfig

    @property
    def found(self):
        return self.window is not None


class _Search:
    def __init__(self, strata, cfg):
        if len(strata) < 2:
            raise ConfigError("the search needs at least two strata")
        self.cfg = cfg
        self.records = [r for w in strata for r in w.records]
        self.bounds = [w.start - strata[0].start for w in strata]
        self.q = len(strata)
        self.transform_log = strata[-1].transform_log
        self.min_size = max(4, len(cfg.predictors) + 3)
        self._cache = {}
        self._refs = {}

    def validation_windows(self, s):
        out = []
        for k in range(self.q - 1):
            lo = self.bounds[k]
            hi = s if k == self.q - 2 else min(self.bounds[k + 1], s)
            if hi > lo:
                out.append(Window(k + 1, tuple(self.records[lo:hi]), lo, self.transform_log))
        return out

    def valid_start(self, s):
        return 1 <= s <= len(self.records) - self.min_size

    def evaluate(self, s):
        if s in self._cache:
            return self._cache[s]
        cfg = self.cfg
        window = Window(self.q, tuple(self.records[s:]), s, self.transform_log)
        weighted = apply_weights(window, cfg.kernel)
        _, _, stationarity = check_window(window, cfg.bin_width, cfg.age_source, cfg.eps, cfg.max_squarings)
        others = self.validation_windows(s)
        key = tuple((w.start, w.stop) for w in others)
        if key not in self._refs:
            self._refs[key] = reference_metrics(others, cfg, self.transform_log)
        ledger = cross_window_score(weighted, others, cfg, self._refs[key])
        size, age = window_dimensions(window)
        cand = Candidate(s, window, weighted, stationarity, others, ledger, size, age)
        self._cache[s] = cand
        return cand

    def success(self, cand):
        return cand.ergodic and cand.ledger.win_fraction > self.cfg.majority_rule

    def run(self):
        cfg = self.cfg
        trace = []
        current = self.evaluate(self.bounds[-1])
        trace.append(_trace_row(0, "init", current, True))
        seen = {current.start}
        best = current if current.ergodic else None
        iteration = 0
        while not self.success(current) and iteration < cfg.max_adjustments:
            iteration += 1
            neighbours = []
            for action, s in (("grow", current.start - cfg.adjust_step),
                              ("shrink", current.start + cfg.adjust_step)):
                if self.valid_start(s) and s not in seen:
                    seen.add(s)
                    neighbours.append((action, self.evaluate(s)))
            if not neighbours:
                break
            action, pick = max(neighbours, key=lambda t: t[1].key())
            improved = pick.key() > current.key()
            for act, cand in neighbours:
                trace.append(_trace_row(iteration, act, cand, improved and cand is pick))
            for _, cand in neighbours:
                if cand.ergodic and (best is None or cand.key() > best.key()):
                    best = cand
            if not improved:
                break
            current = pick

        if self.success(current):
            final, status = current, BELLWETHER
        elif best is not None:
            final, status = best, BEST_EFFORT
        else:
            return BellwetherResult(NO_BELLWETHER, None, 0, 0.0, current.stationarity, None, [], trace, cfg)
        return BellwetherResult(status, final.weighted, final.size, final.age, final.stationarity,
                                final.ledger, final.others, trace, cfg)


def _trace_row(iteration, action, cand, accepted):
    led = cand.ledger
    return {
        "iteration": iteration,
        "action": action,
        "start": cand.start,
        "size": cand.size,
        "age": cand.age,
        "chain": cand.stationarity.status,
        "ergodic": cand.ergodic,
        "wins": led.n_wins,
        "n_validation": len(led.wins),
        "mean_metric": led.mean_metric,
        "metrics": ";".join(f"{w.index}:{m:.10g}" for w, m in zip(cand.others, led.metrics)),
        "accepted": accepted,
    }


def search_bellwether(strata, cfg=None):
    """Search for the Bellwether window among chronological ``strata``.

    Returns a :class:`BellwetherResult` whose ``status`` is ``bellwether``
    (ergodic and beating the majority of validation windows),
    ``best_effort`` (best ergodic candidate seen, majority not reached) or
    ``no_bellwether`` (no ergodic candidate within the budget).
    """
    return _Search(list(strata), cfg or SearchConfig()).run()


@dataclass(frozen=True)
class PortfolioReport:
    errors: object  # ErrorSummary over the completed folds
    n_folds: int
    skipped: int
    predictions: tuple
    actual: tuple


def growing_portfolio(records, cfg=None, transform_log=None):
    """Leave-one-out evaluation with every other project as training set."""
    cfg = cfg or SearchConfig()
    if hasattr(records, "records"):
        transform_log = records.transform_log if transform_log is None else transform_log
        records = records.records
    records = list(records)
    transform_log = tuple(transform_log or ())
    n = len(records)
    if n < 3:
        raise InsufficientDataError("leave-one-out needs at least three projects")
    preds, actual, skipped = [], [], 0
    truth = actual_effort(records, transform_log)
    for i in range(n):
        train_set = records[:i] + records[i + 1:]
        try:
            model = train(cfg, train_set, np.ones(n - 1), transform_log)
            preds.append(float(model.predict_many([records[i]])[0]))
            actual.append(float(truth[i]))
        except (BellwetherError, np.linalg.LinAlgError) as exc:
            log.debug("fold %d skipped: %s", i, exc)
            skipped += 1
    if not preds:
        raise DataError("every leave-one-out fold failed")
    return PortfolioReport(error_summary(actual, preds), n - skipped, skipped, tuple(preds), tuple(actual))


@dataclass(frozen=True)
class HoldoutComparison:
    holdout_id: str
    actual: float
    bellwether_estimate: float
    portfolio_estimate: float
    bellwether_size: int
    bellwether_age: float
    portfolio_size: int

    @property
    def bellwether_error(self):
        return abs(self.bellwether_estimate - self.actual)

    @property
    def portfolio_error(self):
        return abs(self.portfolio_estimate - self.actual)


def evaluate_holdout(result, holdout, cfg=None, portfolio=None):
    """Predict the holdout with the Bellwether window and with the growing
    portfolio (all ``portfolio`` records, unweighted).

    ``holdout`` must already be in the training space (see
    :func:`bellwether.dataset.apply_transforms`).
    """
    cfg = cfg or result.config
    if not result.found:
        raise DataError("no Bellwether window to evaluate")
    window = result.window.window
    log_ = window.transform_log
    used = {r.id for r in window.records}
    if portfolio is not None:
        used |= {r.id for r in portfolio}
    if holdout.id in used:
        raise DataError(f"holdout {holdout.id!r} leaked into training data")
    model = fit_weighted(cfg, result.window)
    truth = float(actual_effort([holdout], log_)[0])
    bw = float(model.predict_many([holdout])[0])
    pf = math.nan
    if portfolio is not None:
        portfolio = list(portfolio)
        pf_model = train(cfg, portfolio, np.ones(len(portfolio)), log_)
        pf = float(pf_model.predict_many([holdout])[0])
    return HoldoutComparison(holdout.id, truth, bw, pf, result.size, result.age,
                             len(portfolio) if portfolio is not None else 0)
