"""The fitted-model container shared by all learners, plus (de)serialization."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from bellwether import _kernels
from bellwether.dataset import apply_transforms, invert_values, raw_record
from bellwether.design import CategoricalEncoder, ratio_matrix
from bellwether.errors import ConfigError, DataError

FORMAT_TAG = "bellwether-model"
FORMAT_VERSION = 1
MIN_EFFORT = 1e-6

_FORWARD = {"identity": lambda v: v, "ln": np.log, "sqrt": np.sqrt}
_INVERSE = {"identity": lambda v: v, "ln": np.exp, "sqrt": lambda v: np.maximum(v, 0.0) ** 2}


def atlm_forward(name, values):
    return _FORWARD[name](np.asarray(values, dtype=np.float64))


def atlm_inverse(name, values):
    return _INVERSE[name](np.asarray(values, dtype=np.float64))


@dataclass
class FittedModel:
    """A trained learner.

    ``transform_log`` is the feature-transform history of the training data;
    it maps raw records into the space the model was fitted in and maps
    response predictions back to raw effort hours.
    """

    family: str
    predictors: list
    encoder: CategoricalEncoder
    transform_log: list
    params: dict
    atlm_transforms: dict = field(default_factory=dict)
    sizes: list = field(default_factory=list)
    training_summary: dict = field(default_factory=dict)

    def design(self, records):
        """Model inputs for records already in the transformed space."""
        try:
            if self.family == "atlm":
                raw = [raw_record(r, self.transform_log) for r in records]
                cols = [atlm_forward(self.atlm_transforms[p], ratio_matrix(raw, [p])[:, 0])
                        for p in self.predictors]
                ratio = np.column_stack(cols) if cols else np.empty((len(records), 0))
            else:
                ratio = ratio_matrix(records, self.predictors)
        except KeyError as exc:
            raise DataError(f"missing predictor feature: {exc.args[0]}") from None
        cats = self.encoder.transform(records)
        if self.family == "dnn":
            return np.column_stack([ratio, cats])
        return np.column_stack([np.ones(len(records)), ratio, cats])

    def predict_response(self, records):
        """Prediction in the model's response space (before inversion)."""
        X = self.design(records)
        if self.family == "dnn":
            return _kernels.mlp_forward(self.params["theta"], self.sizes, X)
        return X @ self.params["beta"]

    def to_raw(self, response):
        """Map response-space predictions to raw effort hours."""
        if self.family == "atlm":
            out = atlm_inverse(self.atlm_transforms["effort"], response)
        else:
            out = invert_values("effort", response, self.transform_log)
        return np.maximum(out, MIN_EFFORT)

    def predict_many(self, records, transformed=True):
        if not transformed:
            records = [apply_transforms(r, self.transform_log) for r in records]
        return self.to_raw(self.predict_response(records))

    def to_dict(self):
        return {
            "format": FORMAT_TAG,
            "version": FORMAT_VERSION,
            "family": self.family,
            "predictors": list(self.predictors),
            "encoder": self.encoder.to_dict(),
            "transform_log": [dict(e) for e in self.transform_log],
            "atlm_transforms": dict(self.atlm_transforms),
            "sizes": [int(s) for s in self.sizes],
            "params": {k: np.asarray(v).tolist() for k, v in self.params.items()},
            "training_summary": self.training_summary,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != FORMAT_TAG:
            raise ConfigError("not a serialized bellwether model")
        if d.get("version") != FORMAT_VERSION:
            raise ConfigError(f"unsupported model format version {d.get('version')}")
        return cls(
            family=d["family"],
            predictors=list(d["predictors"]),
            encoder=CategoricalEncoder.from_dict(d["encoder"]),
            transform_log=[dict(e) for e in d["transform_log"]],
            params={k: np.asarray(v, dtype=np.float64) for k, v in d["params"].items()},
            atlm_transforms=dict(d.get("atlm_transforms", {})),
            sizes=list(d.get("sizes", [])),
            training_summary=dict(d.get("training_summary", {})),
        )


def predict(model, record, transformed=False):
    """Effort estimate in raw hours for one record.

    ``record`` is raw unless ``transformed`` says it already lives in the
    model's training space.
    """
    return float(model.predict_many([record], transformed=transformed)[0])


def save_model(model, path):
    Path(path).write_text(json.dumps(model.to_dict(), indent=1, sort_keys=True), encoding="utf-8")


def load_model(path):
    return FittedModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
