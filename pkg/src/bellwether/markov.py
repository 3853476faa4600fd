"""Transition matrices over project-age states and their ergodic limit.

The limit is found by repeated squaring of the transition matrix; the
structure of the chain (communicating classes and their periods) is used to
tell periodic and reducible chains apart from ergodic ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from bellwether import _kernels
from bellwether.dataset import DAYS_PER_YEAR, invert_values
from bellwether.errors import ConfigError, InsufficientDataError

ERGODIC = "ergodic"
PERIODIC = "periodic"
REDUCIBLE = "reducible"
NOT_CONVERGED = "not_converged"

DEFAULT_EPS = 1e-8
DEFAULT_MAX_SQUARINGS = 64


@dataclass(frozen=True)
class StateSequence:
    states: tuple  # state index per record, chronological order
    state_values: dict  # state index -> representative age (bin centre)
    bin_width: float
    origin: float

    @property
    def n_states(self):
        return len(self.state_values)

    @property
    def degenerate(self):
        return self.n_states < 2 or len(self.states) < 2


@dataclass(frozen=True)
class TransitionMatrix:
    p: np.ndarray
    step: int = 0  # P has been squared this many times
    uniform_rows: tuple = ()  # states that had no observed departures

    @property
    def dim(self):
        return self.p.shape[0]


@dataclass(frozen=True)
class StationaryResult:
    status: str
    pi: np.ndarray | None
    limit: np.ndarray | None
    iterations: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def ergodic(self):
        return self.status == ERGODIC


def record_ages(records, age_source="elapsed_time", transform_log=()):
    """Age coordinate per record.

    ``elapsed_time`` uses the project duration in its raw unit (transforms
    undone); ``completion_offset`` uses years since the earliest completion.
    """
    if age_source == "elapsed_time":
        vals = np.array([r.elapsed_time for r in records], dtype=np.float64)
        return invert_values("elapsed_time", vals, transform_log)
    if age_source == "completion_offset":
        t = np.array([r.completion_years for r in records])
        return t - t.min()
    raise ConfigError(f"unknown age_source {age_source!r}")


def default_bin_width(ages):
    ages = np.asarray(ages, dtype=np.float64)
    span = float(ages.max() - ages.min())
    return span / math.ceil(math.sqrt(ages.size)) if span > 0 else 1.0


def quantize_ages(ages, bin_width=None):
    """Bin ages from the minimum upward; occupied bins become states 0..s-1.

    With the default width the top edge is closed so the oldest project does
    not open a bin of its own.
    """
    ages = np.asarray(ages, dtype=np.float64)
    if ages.size == 0:
        raise InsufficientDataError("no ages to quantize")
    clamp = bin_width is None
    width = default_bin_width(ages) if bin_width is None else float(bin_width)
    if not width > 0:
        raise ConfigError("bin_width must be positive")
    origin = float(ages.min())
    bins = np.floor((ages - origin) / width + 1e-9).astype(np.int64)
    if clamp:
        bins = np.minimum(bins, math.ceil(math.sqrt(ages.size)) - 1)
    occupied = np.unique(bins)
    relabel = {int(b): i for i, b in enumerate(occupied)}
    states = tuple(relabel[int(b)] for b in bins)
    values = {i: origin + (int(b) + 0.5) * width for b, i in relabel.items()}
    return StateSequence(states, values, width, origin)


def ages_to_states(window, bin_width=None, age_source="elapsed_time"):
    ages = record_ages(window.records, age_source, window.transform_log)
    return quantize_ages(ages, bin_width)


def build_tpm(seq):
    """Row-normalized transition counts; a state never departed from gets a
    uniform row."""
    states = seq.states if isinstance(seq, StateSequence) else tuple(seq)
    if len(states) < 2:
        raise InsufficientDataError("need at least two states in sequence to count transitions")
    s = seq.n_states if isinstance(seq, StateSequence) else max(states) + 1
    counts = _kernels.count_transitions(np.asarray(states, dtype=np.intp), s)
    totals = counts.sum(axis=1)
    empty = tuple(int(i) for i in np.flatnonzero(totals == 0))
    p = np.empty_like(counts)
    for i in range(s):
        p[i] = counts[i] / totals[i] if totals[i] > 0 else 1.0 / s
    return TransitionMatrix(p, 0, empty)


def _as_matrix(tpm):
    return tpm.p if isinstance(tpm, TransitionMatrix) else np.asarray(tpm, dtype=np.float64)


def communicating_classes(p):
    """Strongly connected components of the transition graph."""
    n_comp, labels = connected_components(csr_matrix(p > 0), directed=True, connection="strong")
    comps = [np.flatnonzero(labels == c).tolist() for c in range(n_comp)]
    return sorted(comps)


def class_period(p, members):
    """Period of an irreducible class: gcd of level differences over its edges."""
    members = list(members)
    inside = set(members)
    level = {members[0]: 0}
    frontier = [members[0]]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(p[u] > 0):
                v = int(v)
                if v in inside and v not in level:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    for u in members:
        for v in np.flatnonzero(p[u] > 0):
            v = int(v)
            if v in inside:
                g = gcd(g, level[u] + 1 - level[v])
    return g


def chain_structure(p):
    """Closed classes, transient states and the period of each closed class."""
    comps = communicating_classes(p)
    closed, transient = [], []
    for comp in comps:
        inside = set(comp)
        leaves = any(v not in inside for u in comp for v in np.flatnonzero(p[u] > 0))
        if leaves:
            transient.extend(comp)
        else:
            closed.append(comp)
    periods = [class_period(p, c) for c in closed]
    return {"closed_classes": closed, "transient": sorted(transient), "periods": periods}


def iterate_to_stationary(tpm, eps=DEFAULT_EPS, max_squarings=DEFAULT_MAX_SQUARINGS):
    """Square P until successive powers agree within ``eps``; classify the chain.

    Rows are renormalized after every squaring to stop drift. The result is
    ergodic only when the limit has identical, strictly positive rows.
    """
    p = _as_matrix(tpm)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ConfigError("transition matrix must be square")
    if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
        raise ConfigError("transition matrix must be row-stochastic")
    structure = chain_structure(p)
    if any(per > 1 for per in structure["periods"]):
        return StationaryResult(PERIODIC, None, None, 0, dict(structure))
    current = p.copy()
    converged = False
    deltas = []
    k = 0
    for k in range(1, max_squarings + 1):
        nxt = current @ current
        nxt /= nxt.sum(axis=1, keepdims=True)
        delta = float(np.max(np.abs(nxt - current)))
        deltas.append(delta)
        current = nxt
        if delta <= eps:
            converged = True
            break
    diagnostics = dict(structure)
    diagnostics["final_delta"] = deltas[-1] if deltas else 0.0
    diagnostics["uniform_rows"] = list(getattr(tpm, "uniform_rows", ()))
    one_step = float(np.max(np.abs(p @ current - current)))
    diagnostics["one_step_residual"] = one_step

    if converged and one_step > math.sqrt(eps):
        return StationaryResult(PERIODIC, None, None, k, diagnostics)
    if not converged:
        return StationaryResult(NOT_CONVERGED, None, None, k, diagnostics)
    pi = current.mean(axis=0)
    rows_equal = float(np.max(np.abs(current - current[0]))) <= max(eps, 1e-12) * 10
    if len(structure["closed_classes"]) == 1 and not structure["transient"] and rows_equal and np.all(current > 0):
        return StationaryResult(ERGODIC, pi, current, k, diagnostics)
    return StationaryResult(REDUCIBLE, pi if rows_equal else None, current, k, diagnostics)


def stationary_by_eigensolve(p):
    """Solve ``pi (P - I) = 0`` with ``sum(pi) = 1`` by least squares."""
    p = _as_matrix(p)
    s = p.shape[0]
    A = np.vstack([p.T - np.eye(s), np.ones((1, s))])
    b = np.zeros(s + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def window_dimensions(window):
    """(size, age) with age the completion-date span in calendar years."""
    records = window.records if hasattr(window, "records") else window
    if not records:
        raise InsufficientDataError("empty window")
    days = [r.completion_date.toordinal() for r in records]
    return len(records), (max(days) - min(days)) / DAYS_PER_YEAR


def check_window(window, bin_width=None, age_source="elapsed_time", eps=DEFAULT_EPS,
                 max_squarings=DEFAULT_MAX_SQUARINGS):
    """States -> TPM -> limit for one window. Degenerate windows are reducible."""
    seq = ages_to_states(window, bin_width, age_source)
    if len(seq.states) < 2:
        return seq, None, StationaryResult(REDUCIBLE, None, None, 0, {"degenerate": True})
    tpm = build_tpm(seq)
    return seq, tpm, iterate_to_stationary(tpm, eps, max_squarings)
