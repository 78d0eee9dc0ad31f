"""Command line entry point.

Subcommands: synth, ingest, cv, gridsearch, train, predict, report.
Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
Failures print a single machine-parsable line `ERROR <code>: <message>`
to stderr; every run echoes its resolved seed to stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import CalibrationError, ConfigError, DataError, ParseError, TrainingError
from .experiment import (
    CvResult,
    build_report,
    cross_validate,
    default_grid,
    derive_seed,
    grid_search,
    stratified_kfold,
    write_report,
)
from .ingest import EstuaryConfig, EstuaryDataset, build_dataset, parse_raw, write_drop_log
from .models import MODEL_KINDS, load_model, make_classifier, resolve_params, save_model
from .synth import SyntheticEstuarySpec, generate

USAGE_ERROR, DATA_ERROR, RUNTIME_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"ERROR {USAGE_ERROR}: {message}", file=sys.stderr)
        sys.exit(USAGE_ERROR)


class UsageError(Exception):
    pass


def _json_flag(text: str, flag: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{flag} is not valid JSON: {exc}") from exc


def _load_spec(path_or_name: str) -> SyntheticEstuarySpec:
    path = Path(path_or_name)
    if path.is_file():
        return SyntheticEstuarySpec.from_json(path)
    bundled = resources.files("shellcast") / "presets" / f"{path_or_name}.json"
    if bundled.is_file():
        return SyntheticEstuarySpec.from_json(bundled)
    raise FileNotFoundError(f"no spec file or bundled preset named {path_or_name!r}")


def _load_dataset(path: str, name: str | None) -> EstuaryDataset:
    return EstuaryDataset.load_csv(path, name=name or Path(path).stem)


def cmd_synth(args) -> int:
    spec = _load_spec(args.spec)
    seed = spec.seed if args.seed is None else args.seed
    print(f"seed: {seed}")
    result = generate(spec, args.out, seed=seed)
    print(f"wrote {result.out_dir} (tau_hi={result.tau_hi:.6g}, tau_lo={result.tau_lo:.6g}, "
          f"label_fraction={result.label_fraction:.4f})")
    return 0


def cmd_ingest(args) -> int:
    print(f"seed: {args.seed}")
    config = EstuaryConfig.from_json(args.config)
    records = parse_raw(args.profiles, args.surface, args.status, args.upwelling, config)
    dataset, drops, nulls = build_dataset(config, *records)
    out = Path(args.out)
    dataset.save_csv(out)
    drop_path = out.parent / "drops.csv"
    write_drop_log(drops, drop_path)
    print(f"wrote {out}: {dataset.n} samples x {dataset.X.shape[1]} features "
          f"({int(dataset.y.sum())} closures); dropped {nulls} incomplete rows; "
          f"{len(drops)} candidates without status in {drop_path}")
    return 0


def _folds_for(dataset: EstuaryDataset, k: int, seed: int):
    return stratified_kfold(dataset.y, k=k, seed=derive_seed(seed, dataset.name, "folds"))


def _checked_params(kind: str, params: dict | None) -> dict:
    try:
        return resolve_params(kind, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_cv(args) -> int:
    print(f"seed: {args.seed}")
    dataset = _load_dataset(args.dataset, args.name)
    params = _checked_params(args.model, _json_flag(args.params, "--params") if args.params else None)
    folds = _folds_for(dataset, args.k, args.seed)
    result = cross_validate(dataset, args.model, params, folds,
                            seed=derive_seed(args.seed, dataset.name, args.model, 0))
    with open(args.out, "w") as fh:
        json.dump(result.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    recall = result.summary.metrics["recall"]
    print(f"wrote {args.out}: recall mean={recall.mean} std={recall.std}")
    return 0


def cmd_gridsearch(args) -> int:
    print(f"seed: {args.seed}")
    dataset = _load_dataset(args.dataset, args.name)
    grid = _json_flag(args.grid, "--grid") if args.grid else default_grid(args.model)
    if not isinstance(grid, list):
        raise UsageError("--grid must be a JSON list of parameter objects")
    for cell in grid:
        _checked_params(args.model, cell)
    folds = _folds_for(dataset, args.k, args.seed)
    best_params, results = grid_search(dataset, args.model, grid, folds,
                                       seed=args.seed, jobs=args.jobs)
    payload = {
        "format": "shellcast-gridsearch-v1",
        "model": args.model,
        "best_params": best_params,
        "results": [r.to_json_dict() for r in results],
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out}: best {best_params} over {len(results)} cells")
    return 0


def cmd_train(args) -> int:
    print(f"seed: {args.seed}")
    dataset = _load_dataset(args.dataset, args.name)
    params = _checked_params(args.model, _json_flag(args.params, "--params") if args.params else None)
    model = make_classifier(args.model, params, seed=args.seed)
    model.fit(dataset.X, dataset.y)
    save_model(model, args.out)
    print(f"wrote {args.out} ({args.model}, trained on {dataset.n} samples)")
    return 0


def _read_feature_rows(path: str, expected_width: int) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty input")
        has_label = header[-1] == "label"
        width = len(header) - (1 if has_label else 0)
        if width != expected_width:
            raise DataError(
                f"{path}: expected {expected_width} feature columns, got {width}")
        rows = []
        for i, row in enumerate(reader, start=2):
            cells = row[:-1] if has_label else row
            if len(cells) != expected_width:
                raise DataError(
                    f"{path}:{i}: expected {expected_width} feature columns, got {len(cells)}")
            try:
                rows.append([float(v) for v in cells])
            except ValueError as exc:
                raise ParseError(f"{path}:{i}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no feature rows")
    return np.array(rows, dtype=np.float64)


def _model_input_width(model) -> int:
    inner = model.inner
    if hasattr(inner, "architecture"):
        return inner.architecture.n_inputs
    if hasattr(inner, "members"):
        return inner.members[0].model.architecture.n_inputs
    if hasattr(inner, "input_mean"):
        return len(inner.input_mean)
    if hasattr(inner, "means"):
        return inner.means.shape[1]
    raise DataError("cannot determine the model's input width")


def cmd_predict(args) -> int:
    print(f"seed: {args.seed}")
    model = load_model(args.model)
    X = _read_feature_rows(args.input, _model_input_width(model))
    probs = model.predict_proba(X)
    preds = model.predict(X)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "probability", "prediction"])
        for i, (p, label) in enumerate(zip(probs, preds)):
            writer.writerow([i, repr(float(p)), int(label)])
    print(f"wrote {args.out}: {len(preds)} rows, {int(preds.sum())} predicted closures")
    return 0


def _collect_results(results_dir: Path) -> list[CvResult]:
    collected = []
    for path in sorted(results_dir.glob("*.json")):
        with open(path) as fh:
            obj = json.load(fh)
        fmt = obj.get("format")
        if fmt == "shellcast-cv-v1":
            collected.append(CvResult.from_json_dict(obj))
        elif fmt == "shellcast-gridsearch-v1":
            collected.extend(CvResult.from_json_dict(r) for r in obj["results"])
    if not collected:
        raise DataError(f"no cv or gridsearch result files found in {results_dir}")
    return collected


def cmd_report(args) -> int:
    print(f"seed: {args.seed}")
    from .experiment import _better  # best-cell rule shared with grid search
    results = _collect_results(Path(args.results))
    best: dict[tuple[str, str], CvResult] = {}
    for result in results:
        key = (result.estuary, result.kind)
        if _better(result, best.get(key)):
            best[key] = result
    report = build_report(list(best.values()), seed=args.seed, k=None, roster=None)
    stem = Path(args.out)
    if stem.suffix in (".json", ".csv"):
        stem = stem.with_suffix("")
    chart_dir = Path(args.charts) if args.charts else None
    if chart_dir is not None:
        chart_dir.mkdir(parents=True, exist_ok=True)
    write_report(report, stem.with_suffix(".json"), stem.with_suffix(".csv"), chart_dir)
    print(f"wrote {stem.with_suffix('.json')} and {stem.with_suffix('.csv')} "
          f"({len(best)} estuary/model cells)")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="shellcast",
                     description="Forecast next-Monday open/closed status of shellfish "
                                 "production areas from weekly oceanographic features.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=None if name == "synth" else 0,
                       help="master seed; every run echoes it" +
                            (" (default: the spec's own seed)" if name == "synth" else ""))
        return p

    p = add("synth", cmd_synth, "generate a synthetic estuary from a spec or bundled preset")
    p.add_argument("--spec", required=True,
                   help="spec JSON path or bundled preset name "
                        "(ares_betanzos, muros_noia, arousa, pontevedra, vigo)")
    p.add_argument("--out", required=True, help="output directory for the raw CSVs")

    p = add("ingest", cmd_ingest, "build a dataset CSV from raw observation files")
    p.add_argument("--config", required=True, help="estuary config JSON")
    p.add_argument("--profiles", required=True, help="profiles.csv")
    p.add_argument("--surface", required=True, help="surface.csv")
    p.add_argument("--status", required=True, help="zone_status.csv")
    p.add_argument("--upwelling", required=True, help="upwelling.csv")
    p.add_argument("--out", required=True, help="output dataset CSV; drops.csv lands beside it")

    for name, func in [("cv", cmd_cv), ("gridsearch", cmd_gridsearch), ("train", cmd_train)]:
        p = add(name, func, {"cv": "stratified k-fold cross-validation of one model",
                             "gridsearch": "exhaustive hyperparameter search",
                             "train": "fit one model on a full dataset"}[name])
        p.add_argument("--dataset", required=True, help="dataset CSV from ingest")
        p.add_argument("--model", required=True, choices=MODEL_KINDS, help="model kind")
        p.add_argument("--name", default=None, help="estuary name (default: dataset file stem)")
        if name in ("cv", "gridsearch"):
            p.add_argument("--k", type=int, default=10, help="number of folds")
        if name == "gridsearch":
            p.add_argument("--grid", default=None,
                           help="JSON list of parameter objects (default: built-in grid)")
            p.add_argument("--jobs", type=int, default=1,
                           help="parallel workers; results are identical for any value")
        else:
            p.add_argument("--params", default=None, help="JSON parameter object")
        p.add_argument("--out", required=True, help="output JSON path")

    p = add("predict", cmd_predict, "predict probabilities/labels for feature rows")
    p.add_argument("--model", required=True, help="model JSON from train")
    p.add_argument("--input", required=True, help="features CSV (label column ignored)")
    p.add_argument("--out", required=True, help="predictions CSV (row_id,probability,prediction)")

    p = add("report", cmd_report, "assemble cv/gridsearch results into report.json/report.csv")
    p.add_argument("--results", required=True, help="directory of cv/gridsearch JSON files")
    p.add_argument("--out", required=True, help="output stem; writes <stem>.json and <stem>.csv")
    p.add_argument("--charts", default=None, help="directory for per-metric chart CSVs")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ERROR {USAGE_ERROR}: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ParseError, ConfigError, DataError, FileNotFoundError) as exc:
        print(f"ERROR {DATA_ERROR}: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (CalibrationError, TrainingError, ValueError) as exc:
        print(f"ERROR {RUNTIME_ERROR}: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
