"""Markdown, CSV and JSON renderings of a pipeline report."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from bellwether.config import dump_toml
from bellwether.dataset import write_csv, write_removals
from bellwether.learners import save_model
from bellwether.metrics import EFFECT_THRESHOLD

TRACE_FIELDS = ("row", "learner", "kernel", "iteration", "action", "start", "size", "age", "chain",
                "ergodic", "wins", "n_validation", "mean_metric", "metrics", "accepted")
METRICS = ("mae", "mbre", "mibre")
BEST_MARK = "[{}]"


def p_marker(p, alpha=0.05):
    return "*" if p is not None and p < alpha else ""


def delta_marker(delta, threshold=EFFECT_THRESHOLD):
    return "**" if delta is not None and delta > threshold else ""


def fmt(x, digits=4):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "n/a"
    return f"{x:.{digits}f}"


def compare_report(report, alpha=None):
    """Significance-annotated kernel comparisons.

    ``*`` marks p < alpha, ``**`` marks Glass' delta above 0.5.
    """
    alpha = report["config"]["alpha"] if alpha is None else alpha
    kw_rows = []
    for learner, entry in report["kruskal_wallis"].items():
        p = entry.get("p_value")
        kw_rows.append({"learner": learner, "statistic": fmt(entry.get("statistic")),
                        "df": fmt(entry.get("df"), 0), "p_value": fmt(p) + p_marker(p, alpha),
                        "method": entry.get("method") or "n/a"})
    pair_rows = []
    for row in report["pairwise"]:
        p, d = row.get("p_value"), row.get("delta")
        pair_rows.append({"learner": row["learner"], "pair": f"{row['treatment']} vs. {row['control']}",
                          "t": fmt(row.get("t")), "p_value": fmt(p) + p_marker(p, alpha),
                          "delta": fmt(d) + delta_marker(d)})
    return {"alpha": alpha, "kruskal_wallis": kw_rows, "pairwise": pair_rows}


def table_cells(report):
    """(table, row, column, text) for every cell shown in the error tables."""
    out = []
    kernels = report["config"]["kernels"]
    for metric in METRICS:
        tab = report["tables"][metric]
        for learner, row in tab["values"].items():
            for kernel in kernels:
                text = fmt(row.get(kernel))
                if tab["best"].get(learner) == kernel:
                    text = BEST_MARK.format(text)
                out.append((metric, learner, kernel, text))
    return out


def _md_table(header, rows):
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return "\n".join(lines)


def render_markdown(report, alpha=None):
    cmp_ = compare_report(report, alpha)
    cfg = report["config"]
    pre = report["preprocessing"]
    kernels = cfg["kernels"]
    parts = ["# Bellwether moving-window report", ""]
    parts.append("## Data")
    parts.append(_md_table(["stage", "projects"], [
        ["loaded", pre["loaded"]], ["rejected rows", pre["rejected_rows"]],
        ["after quality filters", pre["after_filters"]], ["holdout", pre["holdout"]],
        ["removed as influential", pre["cooks_removed"]], ["modeling set", pre["modeling"]]]))
    removed = ", ".join(f"{k}: {v}" for k, v in pre["filter_removed"].items()) or "none"
    parts += ["", f"Filter removals: {removed}.", f"Holdout project: {pre['holdout_id']}.", ""]
    st = report["stratification"]
    parts.append(f"## Strata\n\nX-means chose q = {st['q']}; stratum sizes {st['sizes']}.\n")

    parts.append("## Bellwether windows\n")
    rows = []
    for c in report["cells"]:
        if c["status"] == "no_bellwether":
            rows.append([c["learner"], c["kernel"], c["status"], "n/a", "n/a", "n/a", "n/a"])
        else:
            rows.append([c["learner"], c["kernel"], c["status"], c["size"], fmt(c["age"], 2),
                         f"{c['wins']}/{c['n_validation']}", c["trace_row"]])
    parts.append(_md_table(["learner", "kernel", "status", "size", "age (years)", "wins", "trace row"], rows))
    parts.append("")

    cells = table_cells(report)
    for metric in METRICS:
        parts.append(f"## {metric.upper()} on the validation windows\n")
        body = []
        for learner in cfg["learners"]:
            lookup = {k: t for m, lr, k, t in cells if m == metric and lr == learner}
            body.append([learner] + [lookup[k] for k in kernels])
        parts.append(_md_table(["learner"] + kernels, body))
        parts.append("\nThe bracketed cell is the row minimum.\n")

    parts.append(f"## Kruskal-Wallis across kernels (alpha = {cmp_['alpha']})\n")
    parts.append(_md_table(["learner", "H", "df", "p", "method"],
                           [[r["learner"], r["statistic"], r["df"], r["p_value"], r["method"]]
                            for r in cmp_["kruskal_wallis"]]))
    parts.append("\n## Pairwise kernel comparison (Welch t, Glass' delta)\n")
    parts.append(_md_table(["learner", "pair", "t", "p", "delta"],
                           [[r["learner"], r["pair"], r["t"], r["p_value"], r["delta"]]
                            for r in cmp_["pairwise"]]))
    parts.append(f"\n`*` p < {cmp_['alpha']}; `**` delta > {EFFECT_THRESHOLD}.\n")

    parts.append("## Holdout estimate\n")
    rows = []
    for c in report["cells"]:
        h = c.get("holdout")
        if h:
            rows.append([c["learner"], c["kernel"], fmt(h["actual"], 2), fmt(h["bellwether_estimate"], 2),
                         fmt(h["bellwether_error"], 2), fmt(h["portfolio_estimate"], 2),
                         fmt(h["portfolio_error"], 2)])
    parts.append(_md_table(["learner", "kernel", "actual", "bellwether", "abs error", "portfolio",
                            "abs error"], rows))
    if report["growing_portfolio"]:
        parts.append("\n## Growing portfolio (leave-one-out)\n")
        parts.append(_md_table(["learner", "MAE", "MBRE", "MIBRE", "folds", "skipped"], [
            [lr, fmt(v["mae"]), fmt(v["mbre"]), fmt(v["mibre"]), v["n_folds"], v["skipped"]]
            for lr, v in report["growing_portfolio"].items()]))
    return "\n".join(parts) + "\n"


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def to_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cell_text(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else str(v)


def trace_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_FIELDS)
    for row in rows:
        writer.writerow([_cell_text(row.get(f)) for f in TRACE_FIELDS])
    return buf.getvalue()


def tables_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["table", "row", "column", "value"])
    for cell in table_cells(report):
        writer.writerow(cell)
    cmp_ = compare_report(report)
    for r in cmp_["kruskal_wallis"]:
        writer.writerow(["kruskal_wallis", r["learner"], "p", r["p_value"]])
    for r in cmp_["pairwise"]:
        writer.writerow(["pairwise", f"{r['learner']}:{r['pair']}", "p", r["p_value"]])
        writer.writerow(["pairwise", f"{r['learner']}:{r['pair']}", "delta", r["delta"]])
    return buf.getvalue()


def holdout_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["learner", "kernel", "holdout_id", "actual", "bellwether_estimate",
                     "portfolio_estimate", "bellwether_error", "portfolio_error", "window_size", "window_age"])
    for c in report["cells"]:
        h = c.get("holdout")
        if h:
            writer.writerow([c["learner"], c["kernel"], h["id"], repr(h["actual"]), repr(h["bellwether_estimate"]),
                             repr(h["portfolio_estimate"]), repr(h["bellwether_error"]),
                             repr(h["portfolio_error"]), c["size"], repr(c["age"])])
    return buf.getvalue()


def write_outputs(report, artifacts, outdir, cfg):
    """Write every artifact of a full run. Returns the list of paths."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        path = out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        written.append(path)

    put("report.json", to_json(report))
    put("report.md", render_markdown(report))
    put("trace.csv", trace_csv(artifacts["trace"]))
    put("tables.csv", tables_csv(report))
    put("holdout.csv", holdout_csv(report))
    put("config.toml", dump_toml({k: v for k, v in cfg.to_dict().items() if k != "output_dir"}))
    written += write_preprocessing(artifacts["prepared"], out, cfg)
    for cell in artifacts["cells"]:
        if cell.model is not None:
            path = out / "models" / f"{cell.learner}_{cell.kernel}.json"
            path.parent.mkdir(parents=True, exist_ok=True)
            save_model(cell.model, path)
            written.append(path)
    return written


def write_preprocessing(prepared, outdir, cfg):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    data = prepared.data
    write_csv(data, out / "clean_data.csv", cfg.columns)
    write_removals(data, out / "removals.csv")
    sidecar = {
        "transform_log": [dict(e) for e in data.transform_log],
        "holdout_id": prepared.holdout.id if prepared.holdout else None,
        "filter_removed": dict(prepared.filter_report.removed),
        "filter_skipped": list(prepared.filter_report.skipped),
        "cooks_removed": list(prepared.cooks_removed),
        "rejected_rows": [{"line": r.line, "id": r.id, "reason": r.reason} for r in prepared.loaded.rejected],
    }
    (out / "transforms.json").write_text(to_json(sidecar), encoding="utf-8")
    return [out / "clean_data.csv", out / "removals.csv", out / "transforms.json"]
