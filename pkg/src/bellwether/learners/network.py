"""Feed-forward tanh network trained by Levenberg-Marquardt on a weighted
squared-error loss."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from bellwether import _kernels
from bellwether.design import CategoricalEncoder, ratio_matrix
from bellwether.errors import ConfigError, DivergenceError
from bellwether.learners.model import FittedModel

GRAD_TOL = 1e-8
LAMBDA_MAX = 1e10


@dataclass(frozen=True)
class DnnConfig:
    hidden_layers: tuple = (16, 8)
    max_epochs: int = 100
    lm_lambda0: float = 1e-3
    lm_lambda_factor: float = 10.0
    seed: int = 0
    weight_decay: float = 0.0
    activation: str = field(default="tanh", init=False)

    def __post_init__(self):
        if len(self.hidden_layers) < 1 or any(int(h) < 1 for h in self.hidden_layers):
            raise ConfigError("need at least one hidden layer, each with >= 1 neuron")
        if self.lm_lambda_factor <= 1:
            raise ConfigError("lm_lambda_factor must exceed 1")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "hidden_layers" in d:
            d["hidden_layers"] = tuple(int(h) for h in d["hidden_layers"])
        return cls(**d)


def layer_sizes(n_inputs, hidden):
    return [int(n_inputs), *[int(h) for h in hidden], 1]


def n_parameters(sizes):
    return sum(sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(len(sizes) - 1))


def init_parameters(sizes, rng):
    """Glorot-uniform weights, zero biases."""
    parts = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (n_in + n_out))
        parts.append(rng.uniform(-limit, limit, size=n_in * n_out))
        parts.append(np.zeros(n_out))
    return np.concatenate(parts)


def lm_step(J, r, w, lam, theta=None, decay=0.0):
    """Solve ``(J'WJ + (lam + decay) I) delta = J'W r - decay * theta``."""
    g = J.T @ (w * r)
    if decay and theta is not None:
        g = g - decay * theta
    A = J.T @ (J * w[:, None])
    A[np.diag_indices_from(A)] += lam + decay
    return np.linalg.solve(A, g)


def _loss(r, w, theta, decay):
    return 0.5 * float(np.sum(w * r * r)) + 0.5 * decay * float(theta @ theta)


def train_lm(X, y, w, sizes, cfg):
    """Levenberg-Marquardt on ``0.5 * sum(w * (y - f)^2)``.

    Returns ``(theta, summary)``. Lambda shrinks by ``lm_lambda_factor``
    after an accepted step and grows by it after a rejected one.
    """
    rng = np.random.default_rng(cfg.seed)
    theta = init_parameters(sizes, rng)
    f, J = _kernels.mlp_jacobian(theta, sizes, X)
    r = y - f
    loss = _loss(r, w, theta, cfg.weight_decay)
    if not math.isfinite(loss):
        raise DivergenceError(f"non-finite initial loss {loss}")
    lam = cfg.lm_lambda0
    history = [loss]
    reason = "max_epochs"
    epochs = 0
    for epoch in range(cfg.max_epochs):
        epochs = epoch + 1
        grad = J.T @ (w * r) - cfg.weight_decay * theta
        if float(np.max(np.abs(grad))) < GRAD_TOL:
            reason = "gradient"
            break
        accepted = False
        while lam <= LAMBDA_MAX:
            try:
                delta = lm_step(J, r, w, lam, theta, cfg.weight_decay)
            except np.linalg.LinAlgError:
                lam *= cfg.lm_lambda_factor
                continue
            cand = theta + delta
            f_new = _kernels.mlp_forward(cand, sizes, X)
            r_new = y - f_new
            new_loss = _loss(r_new, w, cand, cfg.weight_decay)
            if math.isfinite(new_loss) and new_loss < loss:
                theta, loss = cand, new_loss
                lam = max(lam / cfg.lm_lambda_factor, 1e-12)
                accepted = True
                break
            lam *= cfg.lm_lambda_factor
        if not accepted:
            reason = "lambda_overflow"
            break
        history.append(loss)
        f, J = _kernels.mlp_jacobian(theta, sizes, X)
        r = y - f
    if not math.isfinite(loss):
        raise DivergenceError(f"training diverged: loss={loss}, lambda={lam}")
    summary = {"epochs": epochs, "final_loss": loss, "stop_reason": reason,
               "loss_history": history, "lambda": lam, "n_parameters": int(theta.size)}
    return theta, summary


def fit_dnn(ww, cfg=None, predictors=("size",), categoricals=()):
    """Train the network on a weighted window. Categoricals enter as full
    one-hot columns."""
    cfg = cfg or DnnConfig()
    records = ww.records
    encoder = CategoricalEncoder.fit(records, categoricals, drop_first=False)
    X = np.column_stack([ratio_matrix(records, list(predictors)), encoder.transform(records)])
    y = ratio_matrix(records, ["effort"])[:, 0]
    sizes = layer_sizes(X.shape[1], cfg.hidden_layers)
    n_par = n_parameters(sizes)
    if len(records) < n_par / 2:
        warnings.warn(f"{len(records)} training projects for {n_par} network parameters", stacklevel=2)
    theta, summary = train_lm(X, y, np.asarray(ww.weights, dtype=np.float64), sizes, cfg)
    summary["config"] = {"hidden_layers": list(cfg.hidden_layers), "max_epochs": cfg.max_epochs,
                         "lm_lambda0": cfg.lm_lambda0, "lm_lambda_factor": cfg.lm_lambda_factor,
                         "seed": cfg.seed, "weight_decay": cfg.weight_decay}
    return FittedModel("dnn", list(predictors), encoder, list(ww.window.transform_log),
                       {"theta": theta}, sizes=sizes, training_summary=summary)
