"""Project data ingestion, quality filtering and feature transforms.

Every operation returns a new :class:`ProjectSet`; nothing is mutated in
place. Removed and rejected rows are kept on the set so they can be written
to the sidecar reports.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field, replace
from datetime import date, datetime
from pathlib import Path

import numpy as np

from bellwether.design import CategoricalEncoder, ratio_matrix
from bellwether.errors import (
    EmptyInputError,
    InsufficientDataError,
    RankDeficientError,
    SchemaError,
    TransformError,
)

RATIO_FEATURES = ("size", "effort", "elapsed_time", "pdr")
REQUIRED_FIELDS = ("completion_date", "size", "effort", "elapsed_time")
DAYS_PER_YEAR = 365.25


@dataclass(frozen=True)
class ProjectRecord:
    id: str
    completion_date: date | None
    size: float | None
    effort: float | None
    elapsed_time: float | None
    start_date: date | None = None
    pdr: float | None = None
    categoricals: dict = field(default_factory=dict)
    quality_rating: str | None = None
    fp_version: float | None = None
    web: bool | None = None

    def value(self, name):
        if name in RATIO_FEATURES:
            return getattr(self, name)
        return self.categoricals.get(name)

    @property
    def completion_years(self):
        """Completion date as a continuous coordinate in calendar years."""
        return self.completion_date.toordinal() / DAYS_PER_YEAR


@dataclass(frozen=True)
class RejectedRow:
    line: int
    id: str
    reason: str


@dataclass(frozen=True)
class Removal:
    stage: str
    id: str
    reason: str


@dataclass(frozen=True)
class ColumnMapping:
    """Maps record fields onto CSV column names.

    ``None`` means the field is absent from the file. ``pdr`` is derived as
    effort / size when not mapped.
    """

    completion_date: str
    size: str
    effort: str
    elapsed_time: str
    id: str | None = None
    start_date: str | None = None
    pdr: str | None = None
    quality_rating: str | None = None
    fp_version: str | None = None
    web: str | None = None
    categoricals: dict = field(default_factory=dict)
    date_format: str | None = None

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        cats = d.pop("categoricals", {}) or {}
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown column-mapping keys: {sorted(unknown)}")
        return cls(categoricals=dict(cats), **d)

    def mapped_fields(self):
        names = [f for f in ("id", "completion_date", "start_date", "size", "effort", "elapsed_time",
                             "pdr", "quality_rating", "fp_version", "web") if getattr(self, f)]
        return names


@dataclass(frozen=True)
class ProjectSet:
    records: tuple
    feature_schema: tuple
    transform_log: tuple = ()
    rejected: tuple = ()
    removals: tuple = ()
    fields: frozenset = frozenset(REQUIRED_FIELDS)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def ids(self):
        return [r.id for r in self.records]

    @property
    def categorical_names(self):
        return [name for name, kind in self.feature_schema if kind == "categorical"]

    def with_records(self, records, **changes):
        return replace(self, records=tuple(records), **changes)


_MONTH_YEAR = re.compile(r"^(\d{1,2})/(\d{4})$")
_YEAR_MONTH = re.compile(r"^(\d{4})-(\d{1,2})$")


def parse_date(text, fmt=None):
    """Parse ISO-8601 dates, ``YYYY-MM`` or ``MM/YYYY`` (first day of month).

    ``fmt`` forces a specific :func:`datetime.strptime` format.
    """
    text = text.strip()
    if fmt:
        return datetime.strptime(text, fmt).date()
    m = _MONTH_YEAR.match(text)
    if m:
        return date(int(m.group(2)), int(m.group(1)), 1)
    m = _YEAR_MONTH.match(text)
    if m:
        return date(int(m.group(1)), int(m.group(2)), 1)
    return date.fromisoformat(text[:10])


_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f"}


def _parse_bool(text):
    low = text.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_projects(path, schema, strict=True):
    """Read a CSV file into a :class:`ProjectSet`.

    With ``strict`` (the default) a row missing any required value is
    rejected. With ``strict=False`` empty cells load as ``None`` so that
    :func:`filter_quality` can attribute the removal to a specific filter;
    malformed values are rejected either way.
    """
    path = Path(path)
    if isinstance(schema, dict):
        schema = ColumnMapping.from_dict(schema)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise EmptyInputError(f"{path}: empty file")
        columns = [getattr(schema, f) for f in schema.mapped_fields()] + list(schema.categoricals.values())
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing required column(s) {missing}")
        rows = list(reader)
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")

    records, rejected = [], []
    for lineno, row in enumerate(rows, start=2):
        rid = row[schema.id].strip() if schema.id else str(lineno - 1)
        try:
            records.append(_parse_row(row, schema, rid, strict))
        except ValueError as exc:
            rejected.append(RejectedRow(lineno, rid, str(exc)))

    schema_fields = [(f, "ratio") for f in RATIO_FEATURES if f == "pdr" or getattr(schema, f)]
    schema_fields += [(name, "categorical") for name in schema.categoricals]
    fields = set(schema.mapped_fields()) | {"pdr"}
    if schema.categoricals:
        fields.add("categoricals")
    return ProjectSet(tuple(records), tuple(schema_fields), rejected=tuple(rejected), fields=frozenset(fields))


def _parse_row(row, schema, rid, strict):
    def cell(name):
        col = getattr(schema, name)
        if not col:
            return None
        text = (row.get(col) or "").strip()
        if text == "" and strict and name in REQUIRED_FIELDS:
            raise ValueError(f"missing value for {name} (column {col!r})")
        return text or None

    def number(name):
        text = cell(name)
        if text is None:
            return None
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"unparseable {name}: {text!r}") from None

    def when(name):
        text = cell(name)
        if text is None:
            return None
        try:
            return parse_date(text, schema.date_format)
        except ValueError:
            raise ValueError(f"unparseable {name}: {text!r}") from None

    size, effort = number("size"), number("effort")
    pdr = number("pdr")
    if pdr is None and size and effort is not None and size > 0:
        pdr = effort / size
    web_text = cell("web")
    cats = {}
    for name, col in schema.categoricals.items():
        text = (row.get(col) or "").strip()
        cats[name] = text or None
    return ProjectRecord(
        id=rid,
        completion_date=when("completion_date"),
        start_date=when("start_date"),
        size=size,
        effort=effort,
        elapsed_time=number("elapsed_time"),
        pdr=pdr,
        categoricals=cats,
        quality_rating=cell("quality_rating"),
        fp_version=number("fp_version"),
        web=None if web_text is None else _parse_bool(web_text),
    )


@dataclass(frozen=True)
class FilterSpec:
    """Active quality filters, applied in declaration order.

    A filter whose source column was never mapped is skipped (and reported
    as skipped) rather than removing every record.
    """

    missing_completion: bool = True
    unknown_age: bool = True
    low_quality: bool = True
    outdated_fp: bool = True
    unknown_effort: bool = True
    unknown_size: bool = True
    web: bool = True
    missing_values: bool = True
    allowed_ratings: tuple = ("A", "B")
    min_fp_version: float = 4.0

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "allowed_ratings" in d:
            d["allowed_ratings"] = tuple(d["allowed_ratings"])
        return cls(**d)


def _positive(x):
    return x is not None and math.isfinite(x) and x > 0


_FILTERS = (
    ("missing_completion", "completion_date", lambda r, s: r.completion_date is not None),
    ("unknown_age", "elapsed_time", lambda r, s: _positive(r.elapsed_time)),
    ("low_quality", "quality_rating", lambda r, s: (r.quality_rating or "").upper() in s.allowed_ratings),
    ("outdated_fp", "fp_version", lambda r, s: r.fp_version is not None and r.fp_version >= s.min_fp_version),
    ("unknown_effort", "effort", lambda r, s: _positive(r.effort)),
    ("unknown_size", "size", lambda r, s: _positive(r.size)),
    ("web", "web", lambda r, s: r.web is not True),
)


@dataclass(frozen=True)
class FilterReport:
    removed: dict
    skipped: tuple
    retained: int

    @property
    def empty(self):
        return self.retained == 0


def filter_quality(ps, spec=None):
    """Drop records failing any active filter; returns ``(ProjectSet, FilterReport)``.

    Each removal is attributed to the first filter the record fails.
    """
    spec = spec or FilterSpec()
    active, skipped = [], []
    for name, source, check in _FILTERS:
        if not getattr(spec, name):
            continue
        if source not in ps.fields:
            skipped.append(name)
            continue
        active.append((name, check))
    if spec.missing_values:
        active.append(("missing_values", lambda r, s: _complete(r, ps.fields)))

    kept, removals = [], []
    removed = {name: 0 for name, _ in active}
    for rec in ps.records:
        failed = next((name for name, check in active if not check(rec, spec)), None)
        if failed is None:
            kept.append(rec)
        else:
            removed[failed] += 1
            removals.append(Removal("filter_quality", rec.id, failed))
    out = ps.with_records(kept, removals=ps.removals + tuple(removals))
    return out, FilterReport(removed, tuple(skipped), len(kept))


def _complete(rec, fields):
    for name in ("completion_date", "size", "effort", "elapsed_time", "start_date",
                 "quality_rating", "fp_version", "web"):
        if name in fields and getattr(rec, name) is None:
            return False
    return all(v is not None for v in rec.categoricals.values())


def _replace_feature(rec, name, value):
    return replace(rec, **{name: value})


def _ratio_values(ps, feature):
    if feature not in RATIO_FEATURES:
        raise TransformError(f"{feature!r} is not a ratio feature")
    return np.array([r.value(feature) for r in ps.records], dtype=np.float64)


def log_transform(ps, features, margin=0.01):
    """Natural log followed by per-feature min-max rescaling into (0, 1).

    The rescaled range is ``[margin, 1 - margin]``; ``lo``/``hi`` of the log
    values are stored in the transform log for inversion.
    """
    if not 0 <= margin < 0.5:
        raise TransformError("margin must lie in [0, 0.5)")
    records = list(ps.records)
    entries = []
    for feature in features:
        vals = _ratio_values(ps, feature)
        bad = [i for i, v in enumerate(vals) if not (np.isfinite(v) and v > 0)]
        if bad:
            rec = records[bad[0]]
            raise TransformError(f"log transform needs positive values: record {rec.id!r}, "
                                 f"feature {feature!r} = {vals[bad[0]]!r}")
        logs = np.log(vals)
        lo, hi = float(logs.min()), float(logs.max())
        if hi - lo <= 0:
            raise TransformError(f"zero range for feature {feature!r}")
        entry = {"op": "log_minmax", "feature": feature, "lo": lo, "hi": hi, "margin": margin}
        scaled = _forward(entry, logs, already_logged=True)
        records = [_replace_feature(r, feature, float(v)) for r, v in zip(records, scaled)]
        entries.append(entry)
    return ps.with_records(records, transform_log=ps.transform_log + tuple(entries))


def zscore_normalize(ps, features):
    """Replace each named feature by ``(x - mean) / sd`` (sample sd)."""
    records = list(ps.records)
    entries = []
    for feature in features:
        vals = _ratio_values(ps, feature)
        if len(vals) < 2:
            raise InsufficientDataError("z-score needs at least two records")
        mean, sd = float(vals.mean()), float(vals.std(ddof=1))
        if not sd > 0:
            raise TransformError(f"zero standard deviation for feature {feature!r}")
        entry = {"op": "zscore", "feature": feature, "mean": mean, "sd": sd}
        records = [_replace_feature(r, feature, float(v)) for r, v in zip(records, (vals - mean) / sd)]
        entries.append(entry)
    return ps.with_records(records, transform_log=ps.transform_log + tuple(entries))


def _forward(entry, x, already_logged=False):
    x = np.asarray(x, dtype=np.float64)
    if entry["op"] == "log_minmax":
        logs = x if already_logged else np.log(x)
        m = entry["margin"]
        return m + (1 - 2 * m) * (logs - entry["lo"]) / (entry["hi"] - entry["lo"])
    if entry["op"] == "zscore":
        return (x - entry["mean"]) / entry["sd"]
    raise TransformError(f"unknown transform {entry['op']!r}")


def _inverse(entry, y):
    y = np.asarray(y, dtype=np.float64)
    if entry["op"] == "log_minmax":
        m = entry["margin"]
        return np.exp(entry["lo"] + (y - m) / (1 - 2 * m) * (entry["hi"] - entry["lo"]))
    if entry["op"] == "zscore":
        return entry["mean"] + entry["sd"] * y
    raise TransformError(f"unknown transform {entry['op']!r}")


def transform_values(feature, values, transform_log):
    """Map raw values of ``feature`` through every logged transform."""
    out = np.asarray(values, dtype=np.float64)
    for entry in transform_log:
        if entry["feature"] == feature:
            out = _forward(entry, out)
    return out


def invert_values(feature, values, transform_log):
    """Undo the logged transforms of ``feature`` (latest first)."""
    out = np.asarray(values, dtype=np.float64)
    for entry in reversed(transform_log):
        if entry["feature"] == feature:
            out = _inverse(entry, out)
    return out


def apply_transforms(record, transform_log):
    """Transform one raw record the same way its training set was transformed."""
    changes = {}
    for feature in {e["feature"] for e in transform_log}:
        value = record.value(feature)
        if value is None:
            continue
        changes[feature] = float(transform_values(feature, [value], transform_log)[0])
    return replace(record, **changes) if changes else record


def raw_record(record, transform_log):
    """Inverse of :func:`apply_transforms`."""
    changes = {}
    for feature in {e["feature"] for e in transform_log}:
        value = record.value(feature)
        if value is None:
            continue
        changes[feature] = float(invert_values(feature, [value], transform_log)[0])
    return replace(record, **changes) if changes else record


def inverse_transform(ps):
    """Return ``ps`` with all logged transforms undone."""
    records = [raw_record(r, ps.transform_log) for r in ps.records]
    return ps.with_records(records, transform_log=())


def cooks_distance(ps, target, predictors):
    """Cook's distance of every record for an OLS fit of target on predictors."""
    n = len(ps)
    cats = [p for p in predictors if p not in RATIO_FEATURES]
    ratios = [p for p in predictors if p in RATIO_FEATURES]
    records = ps.records
    enc = CategoricalEncoder.fit(records, cats)
    X = np.column_stack([np.ones(n), ratio_matrix(records, ratios), enc.transform(records)])
    k = X.shape[1]
    if n < k + 1:
        raise InsufficientDataError(f"Cook's distance needs more than {k} records, got {n}")
    y = ratio_matrix(records, [target])[:, 0]
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * max(diag.max(), 1.0):
        names = ["intercept"] + ratios + enc.columns
        dep = [names[j] for j in np.flatnonzero(diag <= 1e-10 * max(diag.max(), 1.0))]
        raise RankDeficientError(f"singular design matrix; consider removing predictor(s) {dep}", dep)
    beta = np.linalg.solve(R, Q.T @ y)
    resid = y - X @ beta
    h = (Q ** 2).sum(axis=1)
    mse = resid @ resid / (n - k)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = resid ** 2 / (k * mse) * h / (1 - h) ** 2
    d[h >= 1 - 1e-12] = np.nan
    return d


def cooks_filter(ps, target, predictors, threshold=None):
    """Remove records whose Cook's distance exceeds ``threshold`` (default 4/n).

    Returns ``(ProjectSet, removed_ids)``. Records with undefined distance
    (leverage 1) are kept.
    """
    n = len(ps)
    if n < len(predictors) + 2:
        raise InsufficientDataError(f"need at least {len(predictors) + 2} records, got {n}")
    threshold = 4.0 / n if threshold is None else threshold
    d = cooks_distance(ps, target, predictors)
    drop = {i for i in range(n) if np.isfinite(d[i]) and d[i] > threshold}
    kept = [r for i, r in enumerate(ps.records) if i not in drop]
    removed = [ps.records[i].id for i in sorted(drop)]
    removals = tuple(Removal("cooks_filter", rid, f"D={d[i]:.6g} > {threshold:.6g}")
                     for rid, i in zip(removed, sorted(drop)))
    return ps.with_records(kept, removals=ps.removals + removals), removed


def sort_chronologically(ps):
    """Order by completion date; ties broken by id."""
    missing = [r.id for r in ps.records if r.completion_date is None]
    if missing:
        raise TransformError(f"records without completion_date: {missing[:5]}")
    return ps.with_records(sorted(ps.records, key=lambda r: (r.completion_date, r.id)))


def write_csv(ps, path, schema):
    """Write the set back out with the input's column names."""
    if isinstance(schema, dict):
        schema = ColumnMapping.from_dict(schema)
    cols = [(f, getattr(schema, f)) for f in schema.mapped_fields()]
    if "pdr" not in dict(cols):
        cols.append(("pdr", "pdr"))
    cols += [(f"cat:{name}", col) for name, col in schema.categoricals.items()]
    if schema.id is None:
        cols.insert(0, ("id", "id"))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([c for _, c in cols])
        for rec in ps.records:
            writer.writerow([_fmt(rec, f) for f, _ in cols])


def _fmt(rec, field_name):
    if field_name.startswith("cat:"):
        v = rec.categoricals.get(field_name[4:])
    else:
        v = getattr(rec, field_name)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, date):
        return v.isoformat()
    return str(v)


def write_removals(ps, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["stage", "id", "line", "reason"])
        for row in ps.rejected:
            writer.writerow(["load_projects", row.id, row.line, row.reason])
        for rem in ps.removals:
            writer.writerow([rem.stage, rem.id, "", rem.reason])
