"""Command line: simulate -> dataset -> train-eval -> report, or all of it via pipeline.

Exit codes: 0 success, 2 usage or configuration error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

from . import __version__
from .classifiers import DivergenceError
from .config import FEATURE_MODES, ConfigError, RunConfig, dump_config, load_config
from .dataset import (COLUMNS, FEATURES, LABEL, LEAKY, Dataset, SchemaError, extract_records,
                      read_records, train_test_split, write_records)
from .evaluation import cross_validate, evaluate, format_confusion, roc_points
from .features import read_feature_list, select_features, write_feature_list
from .models import MODEL_KINDS, fit_model, save_model
from .simulator import (TraceFormatError, energy_curve, lifetime_stats, read_trace, run_simulation,
                        throughput, write_trace)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class DataError(Exception):
    pass


def _log(msg: str) -> None:
    print(msg, flush=True)


# ------------------------------------------------------------------ stages

def simulate(cfg: RunConfig):
    return run_simulation(cfg.deployment, cfg.energy, cfg.attack_mix, cfg.behavior)


def trace_summary(trace) -> str:
    tp100, kbps = throughput(trace)
    life = lifetime_stats(trace)
    curve = energy_curve(trace)
    alive = int(trace.ledgers[-1].alive.sum()) - len(trace.ledgers[-1].deaths) if trace.ledgers else 0
    lines = [
        f"rounds run            {trace.rounds_run}",
        f"nodes alive at end    {alive}",
        f"delivered bits        {trace.delivered_bits()}",
        f"throughput (x100)     {tp100:.6g}",
        f"throughput (kbit/s)   {kbps:.6g}",
        f"lifetime mean (ms)    {life.mean:.6g}",
        f"lifetime sd (ms)      {life.std:.6g}",
        f"lifetime se (ms)      {life.std_error:.6g}",
        f"lifetime 95% CI (ms)  [{life.ci_lower:.6g}, {life.ci_upper:.6g}]",
        f"lifetime range (ms)   [{life.minimum:.6g}, {life.maximum:.6g}]",
        f"final mean energy (J) {curve[-1][1] if curve else 0.0:.6g}",
    ]
    return "\n".join(lines) + "\n"


def write_energy_curve(trace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("round", "mean_energy"))
        for r, e in energy_curve(trace):
            w.writerow((r, repr(e)))


def _is_records_csv(path) -> bool:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    return first.rstrip("\r\n").split(",")[0] == COLUMNS[0]


def load_any_dataset(path, sample_every: int) -> Dataset:
    """Records CSV as is, or the records extracted from a trace file."""
    if _is_records_csv(path):
        return read_records(path)
    return extract_records(read_trace(path), sample_every)


def class_table(ds: Dataset) -> str:
    counts = ds.class_counts()
    w = max(len(c) for c in counts) + 2
    lines = [f"{'Class':<{w}}{'Records':>10}{'Share %':>10}"]
    n = len(ds)
    for c, k in counts.items():
        lines.append(f"{c:<{w}}{k:>10}{100 * k / n:>10.2f}")
    lines.append(f"{'Total':<{w}}{n:>10}{100.0:>10.2f}")
    return "\n".join(lines) + "\n"


def make_splits(ds: Dataset, cfg: RunConfig, out_dir: Path, train_ratio=None, seed=None):
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test = train_test_split(ds, cfg.dataset.train_ratio if train_ratio is None else train_ratio,
                                   cfg.dataset.split_seed if seed is None else seed,
                                   cfg.dataset.stratify)
    write_records(ds, out_dir / "records.csv")
    write_records(train, out_dir / "train.csv")
    write_records(test, out_dir / "test.csv")
    (out_dir / "classes.txt").write_text(class_table(ds), encoding="utf-8")
    return train, test


def _slug(name: str) -> str:
    return name.lower().replace(" ", "_")


def choose_features(train: Dataset, mode: str, k_each: int, allow_leaky: bool, feature_list=None):
    if feature_list is not None:
        names = tuple(feature_list)
        unknown = [n for n in names if n not in COLUMNS or n == LABEL]
        if unknown:
            raise DataError(f"unknown feature {unknown[0]!r}")
        leaking = [n for n in names if n in LEAKY]
        if leaking and not allow_leaky:
            raise DataError(f"feature list includes label-restating columns {leaking}; "
                            "pass --allow-leaky to keep them")
        return names
    pool = tuple(c for c in COLUMNS if c != LABEL) if allow_leaky else FEATURES
    X, _ = train.feature_matrix(pool, allow_leaky=allow_leaky)
    return select_features(X, pool, mode, k_each)


def train_eval(train: Dataset, test: Dataset, kind: str, mode: str, cfg: RunConfig, out_dir: Path,
               K=None, allow_leaky=False, feature_list=None) -> dict:
    """Cross-validate on train, refit on all of train, evaluate on test, write every artifact."""
    out_dir.mkdir(parents=True, exist_ok=True)
    K = cfg.evaluation.K if K is None else K
    names = choose_features(train, mode, cfg.evaluation.k_each, allow_leaky, feature_list)
    classes = train.class_names
    Xtr, _ = train.feature_matrix(names, allow_leaky=allow_leaky)
    Xte, _ = test.feature_matrix(names, allow_leaky=allow_leaky)
    ytr, yte = train.y, test.y
    params = cfg.models[kind]
    title = f"model {kind}, features {mode} ({len(names)})"

    def fit(X, y):
        return fit_model(kind, X, y, names, classes, params)

    parts = []
    if K >= 2:
        cv = cross_validate(Xtr, ytr, fit, classes, K, cfg.evaluation.cv_seed, cfg.evaluation.phi)
        for r in cv.folds:
            r.title = f"{title}, cross-validation {r.title}"
        cv.mean.title = f"{title}, cross-validation {cv.mean.title}"
        parts += [r.to_text() for r in cv.folds] + [cv.mean.to_text()]
        cv.mean.to_csv(out_dir / "cv_mean.csv")
    model = fit(Xtr, ytr)
    report = evaluate(yte, model.predict(Xte), classes, cfg.evaluation.phi, f"{title}, test set")
    scores = model.scores(Xte)
    auc_lines = []
    for k, c in enumerate(classes):
        positive = yte == k
        if positive.all() or not positive.any():
            auc_lines.append(f"{c}: undefined")
            continue
        points, auc = roc_points(scores[:, k], positive)
        with open(out_dir / f"roc_{_slug(c)}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("fp_rate", "tp_rate"))
            w.writerows((repr(a), repr(b)) for a, b in points)
        auc_lines.append(f"{c}: {auc:.6f}")
    text = report.to_text() + "\nROC AUC (one class against the rest)\n" + "\n".join(auc_lines) + "\n"
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    (out_dir / "cv_report.txt").write_text("\n".join(parts), encoding="utf-8")
    report.to_csv(out_dir / "report.csv")
    (out_dir / "confusion.txt").write_text(format_confusion(report.confusion) + "\n", encoding="utf-8")
    write_feature_list(names, out_dir / "features.txt")
    save_model(model, out_dir / "model.txt")
    return {"model": kind, "features": mode, "n_features": len(names), "accuracy": report.accuracy,
            "report": report}


# ------------------------------------------------------------------ report merging

def _kind_of(path) -> str:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\r\n")
    if first.startswith("# config."):
        return "trace"
    if first == "name,class,value":
        return "report"
    raise DataError(f"{path}: neither a trace nor a report CSV")


def merge_reports(paths, out_dir: Path) -> str:
    kinds = {_kind_of(p) for p in paths}
    if len(kinds) > 1:
        raise DataError("cannot mix traces and report CSVs in one report")
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = _labels(paths)
    if kinds == {"trace"}:
        traces = [read_trace(p) for p in paths]
        curves = [dict(energy_curve(t)) for t in traces]
        rounds = sorted(set().union(*curves))
        with open(out_dir / "energy_curves.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("round", *labels))
            for r in rounds:
                w.writerow((r, *(repr(c[r]) if r in c else "" for c in curves)))
        rows = []
        with open(out_dir / "throughput.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("run", "sensor_count", "throughput_x100", "throughput_kbps", "lifetime_mean_ms"))
            for label, t in zip(labels, traces):
                tp100, kbps = throughput(t)
                life = lifetime_stats(t).mean
                w.writerow((label, t.config.sensor_count, repr(tp100), repr(kbps), repr(life)))
                rows.append(f"{label:<24}{t.config.sensor_count:>8}{tp100:>16.6g}{life:>16.6g}")
        return (f"{'run':<24}{'nodes':>8}{'throughput x100':>16}{'lifetime ms':>16}\n"
                + "\n".join(rows) + "\n")
    tables = []
    for p in paths:
        with open(p, newline="", encoding="utf-8") as fh:
            tables.append({(r["name"], r["class"]): r["value"] for r in csv.DictReader(fh)})
    keys = list(tables[0])
    for t in tables[1:]:
        keys += [k for k in t if k not in tables[0]]
    with open(out_dir / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("name", "class", *labels))
        for k in keys:
            w.writerow((*k, *(t.get(k, "") for t in tables)))
    width = max(12, *(len(l) + 2 for l in labels))
    head = f"{'metric':<12}{'class':<24}" + "".join(f"{l:>{width}}" for l in labels)
    body = [f"{n:<12}{c:<24}" + "".join(f"{_short(t.get((n, c), '')):>{width}}" for t in tables)
            for n, c in keys if n in ("accuracy", "f1", "recall", "precision")]
    return "\n".join([head] + body) + "\n"


def _short(v: str) -> str:
    try:
        return f"{float(v):.4f}"
    except ValueError:
        return v


def _labels(paths) -> list[str]:
    """Distinct column labels: file stems, or parent/stem when stems collide."""
    stems = [Path(p).stem for p in paths]
    if len(set(stems)) == len(stems):
        return stems
    labels = [f"{Path(p).parent.name}/{Path(p).stem}" for p in paths]
    return labels if len(set(labels)) == len(labels) else [f"{i}:{s}" for i, s in enumerate(stems)]


# ------------------------------------------------------------------ commands

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    trace = simulate(cfg)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trace(trace, out)
    summary = trace_summary(trace)
    out.with_suffix(".summary.txt").write_text(summary, encoding="utf-8")
    write_energy_curve(trace, out.with_suffix(".energy.csv"))
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_dataset(args) -> int:
    cfg = load_config(args.config)
    sample = args.sample_every if args.sample_every is not None else cfg.dataset.sample_every
    ds = load_any_dataset(args.input, sample)
    train, test = make_splits(ds, cfg, Path(args.output), args.train_ratio, args.seed)
    sys.stdout.write(class_table(ds))
    _log(f"train {len(train)} records, test {len(test)} records -> {args.output}")
    return EXIT_OK


def cmd_train_eval(args) -> int:
    cfg = load_config(args.config)
    train = read_records(args.train)
    test = read_records(args.test)
    flist = read_feature_list(args.feature_list) if args.feature_list else None
    res = train_eval(train, test, args.model, args.features, cfg, Path(args.output), args.k,
                     args.allow_leaky, flist)
    sys.stdout.write(res["report"].to_text())
    return EXIT_OK


def cmd_report(args) -> int:
    sys.stdout.write(merge_reports(args.inputs, Path(args.output)))
    return EXIT_OK


def run_pipeline(cfg: RunConfig, out: Path, echo=_log) -> list[dict]:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(dump_config(cfg), encoding="utf-8")
    t0 = time.perf_counter()
    trace = simulate(cfg)
    write_trace(trace, out / "trace.csv")
    (out / "trace.summary.txt").write_text(trace_summary(trace), encoding="utf-8")
    write_energy_curve(trace, out / "trace.energy.csv")
    echo(f"simulated {trace.rounds_run} rounds ({time.perf_counter() - t0:.1f} s)")
    ds = extract_records(trace, cfg.dataset.sample_every)
    train, test = make_splits(ds, cfg, out / "dataset")
    echo(f"dataset: {len(ds)} records, train {len(train)}, test {len(test)}")
    results = []
    for run in cfg.evaluation.runs:
        kind, _, mode = run.partition(":")
        t = time.perf_counter()
        res = train_eval(train, test, kind, mode, cfg, out / "runs" / f"{kind}_{mode}")
        results.append(res)
        echo(f"{kind:<9}{mode:<9}test accuracy {res['accuracy']:.4f} ({time.perf_counter() - t:.1f} s)")
    lines = [f"{'model':<10}{'features':<10}{'n':>4}{'test accuracy':>16}"]
    lines += [f"{r['model']:<10}{r['features']:<10}{r['n_features']:>4}{r['accuracy']:>16.6f}"
              for r in results]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return results


def cmd_pipeline(args) -> int:
    cfg = load_config(args.config)
    t = time.perf_counter()
    run_pipeline(cfg, Path(args.output))
    _log(f"pipeline finished in {time.perf_counter() - t:.1f} s -> {args.output}")
    return EXIT_OK


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    # show defaults, but not the uninformative "None" of required or config-backed flags
    def _get_help_string(self, action):
        if action.default is None or action.required:
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    p = argparse.ArgumentParser(prog="fogshield", formatter_class=fmt,
                                description="Simulate DoS attacks in a fog-assisted sensor network "
                                            "and train detectors on the traffic records.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    cfg_help = "run configuration file (default: the shipped reference configuration)"

    s = sub.add_parser("simulate", formatter_class=fmt, help="run the network simulation")
    s.add_argument("-c", "--config", default=None, help=cfg_help)
    s.add_argument("-o", "--output", required=True, help="trace CSV to write")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("dataset", formatter_class=fmt, help="extract records and split train/test")
    s.add_argument("-i", "--input", required=True, help="trace CSV or records CSV")
    s.add_argument("-o", "--output", required=True, help="directory for records/train/test CSVs")
    s.add_argument("-c", "--config", default=None, help=cfg_help)
    s.add_argument("--train-ratio", type=float, default=None, help="training share (config value if unset)")
    s.add_argument("--seed", type=int, default=None, help="split seed (config value if unset)")
    s.add_argument("--sample-every", type=int, default=None,
                   help="keep every n-th round of a trace (config value if unset)")
    s.set_defaults(func=cmd_dataset)

    s = sub.add_parser("train-eval", formatter_class=fmt, help="cross-validate, fit and test one model")
    s.add_argument("--train", required=True, help="training records CSV")
    s.add_argument("--test", required=True, help="test records CSV")
    s.add_argument("--model", required=True, choices=MODEL_KINDS, help="classifier")
    s.add_argument("--features", default="all", choices=FEATURE_MODES, help="feature selection mode")
    s.add_argument("--feature-list", default=None, help="file with one feature name per line")
    s.add_argument("--k", type=int, default=None, help="cross-validation folds; 0 or 1 skips (config value if unset)")
    s.add_argument("--allow-leaky", action="store_true", help="permit label-restating columns N_n, C_n, I_fn")
    s.add_argument("-c", "--config", default=None, help=cfg_help)
    s.add_argument("-o", "--output", required=True, help="directory for reports and the model")
    s.set_defaults(func=cmd_train_eval)

    s = sub.add_parser("report", formatter_class=fmt, help="merge traces or report CSVs for comparison")
    s.add_argument("inputs", nargs="+", help="trace CSVs or report CSVs (not mixed)")
    s.add_argument("-o", "--output", required=True, help="directory for merged CSVs")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("pipeline", formatter_class=fmt, help="simulate, extract, train and evaluate in one go")
    s.add_argument("-c", "--config", default=None, help=cfg_help)
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        code, msg = EXIT_USAGE, str(exc)
    except (SchemaError, TraceFormatError, DataError) as exc:
        code, msg = EXIT_DATA, str(exc)
    except FileNotFoundError as exc:
        code, msg = EXIT_DATA, f"cannot read {exc.filename}: {exc.strerror}"
    except (DivergenceError, FloatingPointError) as exc:
        code, msg = EXIT_NUMERIC, str(exc)
    except ValueError as exc:
        code, msg = EXIT_DATA, str(exc)
    print(f"fogshield: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
