"""Bellwether moving windows for software effort estimation."""
from bellwether._kernels import BACKEND
from bellwether.dataset import (
    ColumnMapping,
    FilterSpec,
    ProjectRecord,
    ProjectSet,
    cooks_filter,
    filter_quality,
    load_projects,
    log_transform,
    sort_chronologically,
    zscore_normalize,
)
from bellwether.markov import build_tpm, iterate_to_stationary, quantize_ages
from bellwether.metrics import error_summary, glass_delta, kruskal_wallis, welch_t
from bellwether.search import SearchConfig, evaluate_holdout, growing_portfolio, search_bellwether
from bellwether.stratify import stratify, xmeans
from bellwether.weighting import KERNELS, apply_weights, kernel_weight

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "KERNELS",
    "ColumnMapping",
    "FilterSpec",
    "ProjectRecord",
    "ProjectSet",
    "SearchConfig",
    "apply_weights",
    "build_tpm",
    "cooks_filter",
    "error_summary",
    "evaluate_holdout",
    "filter_quality",
    "glass_delta",
    "growing_portfolio",
    "iterate_to_stationary",
    "kernel_weight",
    "kruskal_wallis",
    "load_projects",
    "log_transform",
    "quantize_ages",
    "search_bellwether",
    "sort_chronologically",
    "stratify",
    "welch_t",
    "xmeans",
    "zscore_normalize",
]
