"""Observation weights for moving windows.

Four kernels map a project's normalized time distance from the newest
project in the window onto a regression weight. Rectangular is the
unweighted window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bellwether.errors import ConfigError

KERNELS = ("rectangular", "triangular", "epanechnikov", "gaussian")
GAUSSIAN_SCALE = 2.5


def kernel_weight(kernel, x):
    """Weight at normalized distance ``x >= 0``; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ConfigError("kernel distance must be non-negative")
    inside = arr < 1.0
    if kernel == "rectangular":
        w = np.where(inside, 1.0, 0.0)
    elif kernel == "triangular":
        w = np.where(inside, 1.0 - arr, 0.0)
    elif kernel == "epanechnikov":
        w = np.where(inside, 1.0 - arr ** 2, 0.0)
    elif kernel == "gaussian":
        w = np.exp(-GAUSSIAN_SCALE * arr ** 2 / 2.0)
    else:
        raise ConfigError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    return float(w) if np.ndim(x) == 0 else w


@dataclass(frozen=True)
class WeightedWindow:
    window: object
    kernel: str
    weights: np.ndarray
    x_coords: np.ndarray
    degenerate: bool = False

    @property
    def records(self):
        return self.window.records

    def __len__(self):
        return len(self.window)


def time_distances(records):
    """Distance of each record from the newest, scaled by n/(n+1) into [0, 1).

    The oldest project sits at n/(n+1) so compact kernels never zero out a
    project that is inside the window.
    """
    t = np.array([r.completion_date.toordinal() for r in records], dtype=np.float64)
    n = t.size
    span = t.max() - t.min()
    if span <= 0:
        return np.zeros(n), True
    return (t.max() - t) / span * (n / (n + 1.0)), False


def apply_weights(window, kernel):
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    if len(window.records) == 0:
        raise ConfigError("cannot weight an empty window")
    x, degenerate = time_distances(window.records)
    w = np.asarray(kernel_weight(kernel, x), dtype=np.float64)
    return WeightedWindow(window, kernel, w, x, degenerate or len(window.records) == 1)

