"""Weighted multiple linear regression and the automatically transformed
linear model (ATLM)."""
from __future__ import annotations

import numpy as np
from scipy.linalg import qr, solve_triangular

from bellwether.dataset import raw_record
from bellwether.design import CategoricalEncoder, ratio_matrix
from bellwether.errors import ConfigError, DegenerateError, InsufficientDataError, RankDeficientError
from bellwether.learners.model import FittedModel, atlm_forward
from bellwether.stats import moments

ATLM_MENU = ("identity", "ln", "sqrt")
RANK_TOL = 1e-10


def wls(X, y, w, names=None):
    """Weighted least squares by column-pivoted QR of ``sqrt(w) X``.

    Returns ``(beta, info)``; raises :class:`RankDeficientError` naming the
    dependent columns when the design is rank deficient.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ConfigError("observation weights must be positive and finite")
    sw = np.sqrt(w)
    A = X * sw[:, None]
    Q, R, piv = qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_TOL * max(diag[0] if diag.size else 0.0, 1e-300)))
    if rank < X.shape[1]:
        names = names or [f"x{j}" for j in range(X.shape[1])]
        dependent = [names[j] for j in piv[rank:]]
        raise RankDeficientError(f"rank-deficient design; dependent column(s): {dependent}", dependent)
    z = solve_triangular(R, Q.T @ (y * sw))
    beta = np.empty_like(z)
    beta[piv] = z
    cond = float(diag[0] / diag[-1]) if diag.size else 1.0
    return beta, {"rank": rank, "condition": cond}


def _check_size(ww, n_cols):
    n = len(ww.records)
    if n < n_cols:
        raise InsufficientDataError(f"need at least {n_cols} training projects, got {n}")


def fit_mlr(ww, predictors=("size",), categoricals=()):
    """Weighted linear regression of (transformed) effort on the predictors."""
    records = ww.records
    encoder = CategoricalEncoder.fit(records, categoricals)
    names = ["intercept", *predictors, *encoder.columns]
    X = np.column_stack([np.ones(len(records)), ratio_matrix(records, list(predictors)),
                         encoder.transform(records)])
    _check_size(ww, X.shape[1])
    y = ratio_matrix(records, ["effort"])[:, 0]
    beta, info = wls(X, y, ww.weights, names)
    resid = y - X @ beta
    info["weighted_sse"] = float(np.sum(ww.weights * resid ** 2))
    return FittedModel("mlr", list(predictors), encoder, list(ww.window.transform_log),
                       {"beta": beta}, training_summary=info)


def choose_transform(values):
    """Transform from the menu giving the smallest absolute skewness.

    Ties keep the earlier menu entry, so identity wins on symmetric data.
    """
    values = np.asarray(values, dtype=np.float64)
    if np.any(values <= 0):
        return "identity"
    best, best_skew = "identity", np.inf
    for name in ATLM_MENU:
        try:
            skew = abs(moments(atlm_forward(name, values)).skewness)
        except (DegenerateError, InsufficientDataError):
            skew = 0.0
        if skew < best_skew - 1e-12:
            best, best_skew = name, skew
    return best


def fit_atlm(ww, predictors=("size",), categoricals=()):
    """ATLM: per-variable transform choice on the raw scale, then weighted
    least squares in the transformed space."""
    records = ww.records
    log = list(ww.window.transform_log)
    raw = [raw_record(r, log) for r in records]
    chosen = {}
    cols = []
    for name in predictors:
        vals = ratio_matrix(raw, [name])[:, 0]
        if np.any(vals <= 0):
            raise DegenerateError(f"ATLM needs strictly positive raw values for {name!r}")
        chosen[name] = choose_transform(vals)
        cols.append(atlm_forward(chosen[name], vals))
    effort = ratio_matrix(raw, ["effort"])[:, 0]
    chosen["effort"] = choose_transform(effort)
    y = atlm_forward(chosen["effort"], effort)
    encoder = CategoricalEncoder.fit(records, categoricals)
    X = np.column_stack([np.ones(len(records)), *cols, encoder.transform(records)]) if cols else \
        np.column_stack([np.ones(len(records)), encoder.transform(records)])
    _check_size(ww, X.shape[1])
    beta, info = wls(X, y, ww.weights, ["intercept", *predictors, *encoder.columns])
    info["transforms"] = dict(chosen)
    return FittedModel("atlm", list(predictors), encoder, log, {"beta": beta},
                       atlm_transforms=chosen, training_summary=info)
