"""Effort learners behind one fit/predict contract."""
from bellwether.learners.linear import fit_atlm, fit_mlr, wls
from bellwether.learners.model import FittedModel, load_model, predict, save_model
from bellwether.learners.network import DnnConfig, fit_dnn

LEARNERS = ("mlr", "atlm", "dnn")


def fit(family, ww, predictors=("size",), categoricals=(), dnn_config=None):
    """Fit the named learner family on a weighted window."""
    if family == "mlr":
        return fit_mlr(ww, predictors, categoricals)
    if family == "atlm":
        return fit_atlm(ww, predictors, categoricals)
    if family == "dnn":
        return fit_dnn(ww, dnn_config, predictors, categoricals)
    raise ValueError(f"unknown learner {family!r}; expected one of {LEARNERS}")


__all__ = [
    "LEARNERS",
    "DnnConfig",
    "FittedModel",
    "fit",
    "fit_atlm",
    "fit_dnn",
    "fit_mlr",
    "load_model",
    "predict",
    "save_model",
    "wls",
]
