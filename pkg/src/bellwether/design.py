"""Design-matrix helpers shared by the regression code paths."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def ratio_matrix(records, names):
    """Stack the named ratio features of ``records`` into an (n, p) array."""
    out = np.empty((len(records), len(names)), dtype=np.float64)
    for i, rec in enumerate(records):
        for j, name in enumerate(names):
            value = rec.value(name)
            if value is None:
                raise KeyError(f"record {rec.id!r} has no value for feature {name!r}")
            out[i, j] = value
    return out


@dataclass
class CategoricalEncoder:
    """One-hot encoder with first-level drop.

    Levels are learned from the training records only; unseen or missing
    labels at prediction time encode as the dropped (reference) level.
    """

    names: list[str]
    levels: dict[str, list[str]] = field(default_factory=dict)
    drop_first: bool = True

    @classmethod
    def fit(cls, records, names, drop_first=True):
        levels = {}
        for name in names:
            seen = sorted({rec.categoricals.get(name) for rec in records} - {None})
            levels[name] = seen
        return cls(list(names), levels, drop_first)

    @property
    def columns(self):
        cols = []
        for name in self.names:
            kept = self.levels[name][1:] if self.drop_first else self.levels[name]
            cols.extend(f"{name}={level}" for level in kept)
        return cols

    def transform(self, records):
        cols = self.columns
        out = np.zeros((len(records), len(cols)), dtype=np.float64)
        index = {c: j for j, c in enumerate(cols)}
        for i, rec in enumerate(records):
            for name in self.names:
                j = index.get(f"{name}={rec.categoricals.get(name)}")
                if j is not None:
                    out[i, j] = 1.0
        return out

    def to_dict(self):
        return {"names": self.names, "levels": self.levels, "drop_first": self.drop_first}

    @classmethod
    def from_dict(cls, d):
        return cls(list(d["names"]), {k: list(v) for k, v in d["levels"].items()}, bool(d["drop_first"]))
