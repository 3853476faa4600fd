"""Run configuration: TOML file, command-line overrides and a TOML echo.

Grammar: top-level ``key = value`` pairs plus the tables ``[columns]``,
``[columns.categoricals]``, ``[filters]`` and ``[dnn]``. Any key can be
overridden from the command line with ``--set key=value`` or
``--set table.key=value``; the value uses TOML syntax (bare words are read
as strings).
"""
from __future__ import annotations

import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from bellwether.dataset import RATIO_FEATURES, ColumnMapping, FilterSpec
from bellwether.errors import ConfigError
from bellwether.learners import LEARNERS
from bellwether.learners.network import DnnConfig
from bellwether.search import METRICS, SearchConfig
from bellwether.weighting import KERNELS

OUTPUT_ENV = "BELLWETHER_OUTPUT_DIR"
TRANSFORMS = ("log", "zscore", "none")


@dataclass(frozen=True)
class RunConfig:
    input: str = ""
    columns: ColumnMapping = None
    filters: FilterSpec = field(default_factory=FilterSpec)
    strict_load: bool = False
    transform: str = "log"
    transform_features: tuple = RATIO_FEATURES
    log_margin: float = 0.01
    cooks: bool = True
    cooks_threshold: float | None = None
    cooks_predictors: tuple = ("size",)
    kmin: int = 2
    kmax: int | None = None
    cluster_seed: int = 0
    bin_width: float | None = None
    eps: float = 1e-8
    max_squarings: int = 64
    age_source: str = "elapsed_time"
    kernels: tuple = KERNELS
    learners: tuple = ("mlr", "atlm", "dnn")
    dnn: DnnConfig = field(default_factory=DnnConfig)
    metric: str = "mae"
    majority_rule: float = 0.5
    max_adjustments: int = 50
    adjust_step: int = 5
    seed: int = 0
    predictors: tuple = ("size",)
    categoricals: tuple = ()
    holdout: str = "latest"
    output_dir: str = ""
    alpha: float = 0.05
    portfolio_loocv: bool = True

    def __post_init__(self):
        if not self.learners:
            raise ConfigError("select at least one learner")
        if not self.kernels:
            raise ConfigError("select at least one kernel")
        for name in self.learners:
            if name not in LEARNERS:
                raise ConfigError(f"unknown learner {name!r}; expected one of {LEARNERS}")
        for name in self.kernels:
            if name not in KERNELS:
                raise ConfigError(f"unknown kernel {name!r}; expected one of {KERNELS}")
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"unknown transform {self.transform!r}; expected one of {TRANSFORMS}")
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.holdout != "latest" and not self.holdout.startswith("id:"):
            raise ConfigError("holdout must be 'latest' or 'id:<project id>'")
        if self.kmin < 1 or (self.kmax is not None and self.kmax < self.kmin):
            raise ConfigError("need 1 <= kmin <= kmax")

    def search_config(self, learner, kernel):
        return SearchConfig(
            learner=learner, kernel=kernel, metric=self.metric, majority_rule=self.majority_rule,
            max_adjustments=self.max_adjustments, adjust_step=self.adjust_step, seed=self.seed,
            predictors=tuple(self.predictors), categoricals=tuple(self.categoricals), dnn=self.dnn,
            bin_width=self.bin_width, age_source=self.age_source, eps=self.eps,
            max_squarings=self.max_squarings)

    @property
    def resolved_output_dir(self):
        return self.output_dir or os.environ.get(OUTPUT_ENV) or "bellwether-out"

    def to_dict(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "columns":
                value = None if value is None else _columns_dict(value)
            elif f.name in ("filters", "dnn"):
                value = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(value).items()
                         if k != "activation"}
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {unknown}")
        try:
            if d.get("columns") is not None:
                d["columns"] = ColumnMapping.from_dict(d["columns"])
            if "filters" in d:
                d["filters"] = FilterSpec.from_dict(d["filters"])
            if "dnn" in d:
                d["dnn"] = DnnConfig.from_dict(d["dnn"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration table: {exc}") from None
        for key in ("transform_features", "cooks_predictors", "kernels", "learners",
                    "predictors", "categoricals"):
            if key in d:
                value = d[key]
                d[key] = (value,) if isinstance(value, str) else tuple(value)
        return cls(**d)


def _columns_dict(cols):
    d = {k: v for k, v in asdict(cols).items() if v is not None}
    d["categoricals"] = dict(cols.categoricals)
    return d


def load_config(path=None, overrides=()):
    """Read a TOML file (optional) and apply ``key=value`` overrides."""
    data = {}
    if path:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        # a relative input path in a config file is relative to that file
        if data.get("input") and not os.path.isabs(data["input"]):
            data["input"] = os.path.join(os.path.dirname(os.path.abspath(path)), data["input"])
    for item in overrides:
        apply_override(data, item)
    return RunConfig.from_dict(data)


def parse_value(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(data, item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, text = item.split("=", 1)
    parts = key.strip().split(".")
    target = data
    for part in parts[:-1]:
        target = target.setdefault(part, {})
        if not isinstance(target, dict):
            raise ConfigError(f"cannot set {key!r}: {part!r} is not a table")
    target[parts[-1]] = parse_value(text.strip())
    return data


def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot write {value!r} as TOML")


def dump_toml(d):
    """Write a config dict back as TOML (``None`` values are omitted)."""
    lines = []
    tables = []
    for key, value in d.items():
        if value is None:
            continue
        if isinstance(value, dict):
            tables.append((key, value))
        else:
            lines.append(f"{key} = {_toml_value(value)}")
    while tables:
        name, table = tables.pop(0)
        lines.append("")
        lines.append(f"[{name}]")
        for key, value in table.items():
            if value is None:
                continue
            if isinstance(value, dict):
                tables.append((f"{name}.{key}", value))
            else:
                lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def example_config_path():
    """The bundled configuration for the bundled synthetic dataset."""
    return str(Path(__file__).with_name("data") / "default.toml")


def with_overrides(cfg, **changes):
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
