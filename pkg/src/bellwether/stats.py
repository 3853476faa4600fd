"""Moments, the skewness/kurtosis normality gate, confidence intervals and
the prediction-probability hit rate."""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from bellwether.errors import ConfigError, DegenerateError, InsufficientDataError

DEFAULT_SKEW_TOL = 0.7
DEFAULT_KURT_TOL = 1.5
DEFAULT_TAU = 0.25


@dataclass(frozen=True)
class MomentSummary:
    n: int
    mean: float
    sd: float
    skewness: float
    kurtosis: float  # non-excess: 3 for a normal distribution


@dataclass(frozen=True)
class GateResult:
    passed: bool
    skew_distance: float
    kurt_distance: float


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    alpha: float
    z: float

    @property
    def half_width(self):
        return (self.upper - self.lower) / 2.0


def moments(sample):
    """Sample mean, sd (n-1 divisor), skewness m3/m2^1.5 and kurtosis m4/m2^2.

    Central moments use the n divisor.
    """
    x = np.asarray(sample, dtype=np.float64)
    n = x.size
    if n < 2:
        raise InsufficientDataError(f"moments need n >= 2, got {n}")
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev ** 2))
    # relative cutoff: an all-equal sample can leave rounding noise in dev
    if m2 <= (1e-14 * max(abs(mean), 1.0)) ** 2:
        raise DegenerateError("zero variance: skewness and kurtosis are undefined")
    m3 = float(np.mean(dev ** 3))
    m4 = float(np.mean(dev ** 4))
    return MomentSummary(n, mean, float(x.std(ddof=1)), m3 / m2 ** 1.5, m4 / m2 ** 2)


def normality_gate(ms, skew_tol=DEFAULT_SKEW_TOL, kurt_tol=DEFAULT_KURT_TOL):
    skew_d = abs(ms.skewness)
    kurt_d = abs(ms.kurtosis - 3.0)
    return GateResult(skew_d <= skew_tol and kurt_d <= kurt_tol, skew_d, kurt_d)


def confidence_interval(xbar, s, q, alpha=0.05):
    """Normal-theory interval ``xbar -/+ z_{alpha/2} * s / sqrt(q)``."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if q < 1:
        raise ConfigError(f"q must be >= 1, got {q}")
    if s < 0:
        raise ConfigError(f"s must be >= 0, got {s}")
    z = NormalDist().inv_cdf(1.0 - alpha / 2.0)
    half = z * s / math.sqrt(q)
    return ConfidenceInterval(xbar - half, xbar + half, alpha, z)


def prediction_probability(predicted, actual, tau=DEFAULT_TAU):
    """Fraction of predictions within a relative band ``tau`` of the actual.

    A sanity check on a training sample rather than a headline accuracy
    metric.
    """
    p = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape:
        raise ConfigError(f"length mismatch: {p.size} predictions vs {a.size} actuals")
    if a.size == 0:
        raise InsufficientDataError("need at least one case")
    if tau <= 0:
        raise ConfigError("tau must be positive")
    if np.any(a <= 0):
        raise DegenerateError("actual values must be positive")
    return float(np.mean(np.abs(p - a) / a <= tau))
