"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 no Bellwether
window found, 5 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from bellwether.config import load_config
from bellwether.dataset import ProjectRecord, filter_quality, log_transform, zscore_normalize
from bellwether.errors import BellwetherError, ConfigError, DataError, DivergenceError, NoBellwetherError
from bellwether.learners import load_model, predict, save_model
from bellwether.pipeline import (
    any_bellwether,
    load_input,
    make_strata,
    preprocess,
    run_cell,
    run_pipeline,
    stage,
)
from bellwether.report import render_markdown, to_json, trace_csv, write_outputs, write_preprocessing
from bellwether.stats import moments, normality_gate
from bellwether.stratify import window_assignments

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NO_BELLWETHER, EXIT_INTERNAL = 0, 2, 3, 4, 5

log = logging.getLogger("bellwether")


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="TOML configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key (repeatable), e.g. --set dnn.max_epochs=50")
    common.add_argument("-i", "--input", help="input CSV file")
    common.add_argument("-o", "--output", help="output directory (default: $BELLWETHER_OUTPUT_DIR)")
    common.add_argument("--seed", type=int)
    common.add_argument("--learners", type=_split, help="comma-separated subset of mlr,atlm,dnn")
    common.add_argument("--kernels", type=_split,
                        help="comma-separated subset of rectangular,triangular,epanechnikov,gaussian")
    common.add_argument("--holdout", help="'latest' or 'id:<project id>'")
    common.add_argument("--alpha", type=float, help="significance level")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bellwether", description="Bellwether moving-window effort estimation")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="full pipeline and report")
    sub.add_parser("preprocess", parents=[common], help="filter, transform and write the clean data")
    sub.add_parser("stratify", parents=[common], help="choose q and write the stratum of every project")
    p = sub.add_parser("search", parents=[common], help="search one learner/kernel cell")
    p.add_argument("--learner", default="mlr")
    p.add_argument("--kernel", default="gaussian")
    p = sub.add_parser("predict", help="predict one project with a saved model")
    p.add_argument("--model", required=True, help="model JSON written by run or search")
    p.add_argument("--size", type=float, required=True)
    p.add_argument("--elapsed-time", type=float)
    p.add_argument("--category", action="append", default=[], metavar="NAME=LEVEL")
    p.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("stats", parents=[common], help="skewness/kurtosis of the ratio features")
    return parser


def resolve_config(args):
    overrides = list(args.set)
    if args.input:
        overrides.append(f"input={json.dumps(args.input)}")
    if args.output:
        overrides.append(f"output_dir={json.dumps(args.output)}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.learners:
        overrides.append(f"learners={json.dumps(args.learners)}")
    if args.kernels:
        overrides.append(f"kernels={json.dumps(args.kernels)}")
    if args.holdout:
        overrides.append(f"holdout={json.dumps(args.holdout)}")
    if args.alpha is not None:
        overrides.append(f"alpha={args.alpha!r}")
    return load_config(args.config, overrides)


def cmd_run(cfg):
    report, artifacts = run_pipeline(cfg)
    out = cfg.resolved_output_dir
    with stage("write"):
        write_outputs(report, artifacts, out, cfg)
    print(render_markdown(report))
    print(f"outputs written to {out}")
    if not any_bellwether(report):
        raise NoBellwetherError("no ergodic candidate window in any learner/kernel cell")
    return EXIT_OK


def cmd_preprocess(cfg):
    prepared = preprocess(load_input(cfg), cfg)
    out = cfg.resolved_output_dir
    with stage("write"):
        write_preprocessing(prepared, out, cfg)
    for key, value in prepared.counts().items():
        print(f"{key}: {value}")
    return EXIT_OK


def cmd_stratify(cfg):
    prepared = preprocess(load_input(cfg), cfg)
    clustering, strata = make_strata(prepared.data, cfg)
    out = Path(cfg.resolved_output_dir)
    with stage("write"):
        write_preprocessing(prepared, out, cfg)
        with (out / "strata.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id", "stratum"])
            writer.writerows(window_assignments(strata))
    print(f"q = {clustering.q}; sizes {[len(w) for w in strata]}")
    return EXIT_OK


def cmd_search(cfg, learner, kernel):
    cfg = replace(cfg, learners=(learner,), kernels=(kernel,))
    prepared = preprocess(load_input(cfg), cfg)
    _, strata = make_strata(prepared.data, cfg)
    cell = run_cell(prepared, strata, cfg, learner, kernel)
    out = Path(cfg.resolved_output_dir)
    rows = [{"row": i + 1, "learner": learner, "kernel": kernel, **r} for i, r in enumerate(cell.result.trace)]
    with stage("write"):
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.csv").write_text(trace_csv(rows), encoding="utf-8")
        res = cell.result
        summary = {"learner": learner, "kernel": kernel, "status": res.status}
        if res.found:
            summary.update({"size": res.size, "age": res.age, "first_id": res.window.records[0].id,
                            "last_id": res.window.records[-1].id, "errors": cell.errors,
                            "wins": res.wins.n_wins, "n_validation": len(res.wins.wins)})
            (out / "models").mkdir(exist_ok=True)
            save_model(cell.model, out / "models" / f"{learner}_{kernel}.json")
        (out / "bellwether.json").write_text(to_json(summary), encoding="utf-8")
    print(json.dumps(summary, indent=2, sort_keys=True))
    if not res.found:
        raise NoBellwetherError(f"no ergodic candidate window for {learner}/{kernel}")
    return EXIT_OK


def cmd_predict(args):
    with stage("predict"):
        model = load_model(args.model)
        cats = {}
        for item in args.category:
            if "=" not in item:
                raise ConfigError(f"--category expects NAME=LEVEL, got {item!r}")
            name, level = item.split("=", 1)
            cats[name.strip()] = level.strip()
        rec = ProjectRecord(id="query", completion_date=None, size=args.size, effort=None,
                            elapsed_time=args.elapsed_time, categoricals=cats)
        print(f"{predict(model, rec):.6g}")
    return EXIT_OK


def feature_statistics(ps):
    """Skewness, kurtosis and gate outcome per ratio feature under the raw,
    log and z-score representations."""
    feats = [n for n, k in ps.feature_schema if k == "ratio"]
    views = {"raw": ps, "log": log_transform(ps, feats), "zscore": zscore_normalize(ps, feats)}
    rows = []
    for view, data in views.items():
        for feat in feats:
            ms = moments([r.value(feat) for r in data.records])
            gate = normality_gate(ms)
            rows.append({"representation": view, "feature": feat, "mean": ms.mean, "sd": ms.sd,
                         "skewness": ms.skewness, "kurtosis": ms.kurtosis, "passes_gate": gate.passed})
    return rows


def cmd_stats(cfg):
    ps = load_input(cfg)
    with stage("filter_quality"):
        ps, _ = filter_quality(ps, cfg.filters)
    with stage("stats"):
        rows = feature_statistics(ps)
    out = Path(cfg.resolved_output_dir)
    with stage("write"):
        out.mkdir(parents=True, exist_ok=True)
        (out / "stats.json").write_text(to_json(rows), encoding="utf-8")
    print("| representation | feature | mean | sd | skewness | kurtosis | gate |")
    print("|---|---|---|---|---|---|---|")
    for r in rows:
        print(f"| {r['representation']} | {r['feature']} | {r['mean']:.4f} | {r['sd']:.4f} | "
              f"{r['skewness']:.4f} | {r['kurtosis']:.4f} | {'pass' if r['passes_gate'] else 'fail'} |")
    return EXIT_OK


def _fail(code, exc):
    where = getattr(exc, "stage", None)
    prefix = f"error in stage {where}: " if where else "error: "
    print(f"bellwether: {prefix}{exc}", file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "predict":
            return cmd_predict(args)
        cfg = resolve_config(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "preprocess":
            return cmd_preprocess(cfg)
        if args.command == "stratify":
            return cmd_stratify(cfg)
        if args.command == "search":
            return cmd_search(cfg, args.learner, args.kernel)
        return cmd_stats(cfg)
    except NoBellwetherError as exc:
        return _fail(EXIT_NO_BELLWETHER, exc)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except (DataError, DivergenceError, OSError) as exc:
        return _fail(EXIT_DATA, exc)
    except BellwetherError as exc:
        return _fail(EXIT_DATA, exc)
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        return _fail(EXIT_INTERNAL, exc)


if __name__ == "__main__":
    sys.exit(main())
