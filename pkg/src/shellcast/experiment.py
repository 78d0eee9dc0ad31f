"""Stratified 10-fold cross-validation, grid search and report assembly.

Fold splitting is stratified per class (shuffle within class, deal round
robin), model standardization and class weights are computed inside each
fold's fit so no held-out row leaks into training, and every unit of work
derives its seed from (seed, estuary, model, cell, fold) so results do not
depend on scheduling or worker count.

Grid selection maximizes mean F1 on the same folds that are reported,
breaking ties by higher mean recall and then by grid order.  The summary
block pools every fold value across estuaries before taking mean/std.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ingest import EstuaryDataset
from .metrics import (
    METRIC_NAMES,
    FoldSummary,
    KappaBand,
    MetricsReport,
    confusion,
    evaluate,
    summarize_folds,
)
from .models import make_classifier, resolve_params
from .svmknn import C_GRID, K_GRID

ONE_LAYER_WIDTHS = [2, 4, 8, 10, 16, 24, 32]
TWO_LAYER_WIDTHS = [
    (4, 2), (8, 4), (16, 8), (24, 16), (32, 16), (32, 24),
    (64, 32), (128, 32), (128, 64), (192, 128), (256, 192),
]

AGGREGATION_NOTE = (
    "summary mean/std pooled over all per-estuary fold values; "
    "grid cells selected by mean F1 on the same folds used for reporting"
)


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from a mixed tuple of strings and ints."""
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=4).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: np.ndarray
    seed: int


def stratified_kfold(labels: np.ndarray, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Shuffle each class separately and deal its indices round robin, so
    per-fold class counts stay within one of the proportional ideal."""
    y = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise DataError("k must be >= 2")
    fold_of = np.empty(y.shape[0], dtype=np.int64)
    rng = np.random.default_rng(seed)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if idx.size < k:
            raise DataError(f"class {cls} has {idx.size} samples, fewer than k={k}")
        rng.shuffle(idx)
        fold_of[idx] = np.arange(idx.size) % k
    return FoldAssignment(k=k, fold_of=fold_of, seed=seed)


@dataclass
class CvResult:
    estuary: str
    kind: str
    params: dict
    seed: int
    fold_reports: list[MetricsReport]
    summary: FoldSummary
    fold_model_hashes: list[str] | None = None

    def mean_of(self, metric: str) -> float | None:
        return self.summary.metrics[metric].mean

    def to_json_dict(self) -> dict:
        return {
            "format": "shellcast-cv-v1",
            "estuary": self.estuary,
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "folds": [r.to_dict() for r in self.fold_reports],
            "summary": self.summary.to_dict(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CvResult":
        if obj.get("format") != "shellcast-cv-v1":
            raise ValueError(f"unsupported cv result format {obj.get('format')!r}")
        reports = []
        for d in obj["folds"]:
            band = d.get("kappa_band")
            reports.append(MetricsReport(
                accuracy=d["accuracy"], recall=d["recall"], precision=d["precision"],
                f1=d["f1"], kappa=d["kappa"],
                kappa_band=None if band is None else KappaBand(band),
                pr_a=None, pr_e=None,
            ))
        return cls(
            estuary=obj["estuary"], kind=obj["kind"], params=obj["params"],
            seed=obj["seed"], fold_reports=reports, summary=summarize_folds(reports),
        )


def _model_hash(classifier) -> str:
    payload = json.dumps(classifier.to_json_dict(), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def cross_validate(dataset: EstuaryDataset, kind: str, params: dict | None,
                   folds: FoldAssignment, seed: int = 0,
                   keep_model_hashes: bool = False) -> CvResult:
    """Fit on out-of-fold rows, score the held-out rows, one report per fold."""
    params = resolve_params(kind, params)
    X, y = dataset.X, dataset.y
    if folds.fold_of.shape[0] != X.shape[0]:
        raise DataError("fold assignment does not match the dataset")
    reports: list[MetricsReport] = []
    hashes: list[str] = []
    for fold in range(folds.k):
        test_mask = folds.fold_of == fold
        train_mask = ~test_mask
        if len(np.unique(y[train_mask])) < 2:
            raise DataError(f"fold {fold}: training split is single-class")
        model = make_classifier(kind, params, seed=derive_seed(seed, fold))
        model.fit(X[train_mask], y[train_mask])
        preds = model.predict(X[test_mask])
        reports.append(evaluate(confusion(preds.tolist(), y[test_mask].tolist())))
        if keep_model_hashes:
            hashes.append(_model_hash(model))
    return CvResult(
        estuary=dataset.name, kind=kind, params=params, seed=seed,
        fold_reports=reports, summary=summarize_folds(reports),
        fold_model_hashes=hashes if keep_model_hashes else None,
    )


def default_grid(kind: str) -> list[dict]:
    """Exhaustive hyperparameter combinations per model kind."""
    if kind == "bagnet" or kind == "ann":
        hiddens = [[w] for w in ONE_LAYER_WIDTHS] + [list(t) for t in TWO_LAYER_WIDTHS]
        return [{"hidden": h} for h in hiddens]
    if kind == "svmknn":
        return [{"k": k, "C": c} for k in K_GRID for c in C_GRID]
    if kind == "knn":
        return [{"k": 5}]
    if kind == "svm":
        return [{"C": 1.0}]
    if kind == "nb":
        return [{}]
    raise ValueError(f"unknown model kind {kind!r}")


def _better(candidate: CvResult, incumbent: CvResult | None) -> bool:
    if incumbent is None:
        return True
    key = lambda r: (
        -np.inf if r.mean_of("f1") is None else r.mean_of("f1"),
        -np.inf if r.mean_of("recall") is None else r.mean_of("recall"),
    )
    return key(candidate) > key(incumbent)


def _grid_unit(args):
    dataset, kind, cell_index, cell, folds, seed = args
    return cell_index, cross_validate(
        dataset, kind, cell, folds,
        seed=derive_seed(seed, dataset.name, kind, cell_index),
    )


def grid_search(dataset: EstuaryDataset, kind: str, grid: list[dict],
                folds: FoldAssignment, seed: int = 0, jobs: int = 1):
    """Cross-validate every cell; returns (best_params, all_results).

    Cell seeds depend only on (seed, dataset, kind, cell index), so the
    outcome is identical for any worker count.
    """
    if not grid:
        raise DataError("empty hyperparameter grid")
    units = [(dataset, kind, i, cell, folds, seed) for i, cell in enumerate(grid)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            indexed = list(pool.map(_grid_unit, units, chunksize=1))
    else:
        indexed = [_grid_unit(u) for u in units]
    results = [r for _, r in sorted(indexed, key=lambda t: t[0])]
    best = None
    for result in results:
        if _better(result, best):
            best = result
    return best.params, results


DEFAULT_ROSTER = ("bagnet", "svmknn", "ann", "knn", "nb", "svm")


def _run_unit(args):
    dataset, kind, cell_index, cell, k, seed = args
    folds = stratified_kfold(dataset.y, k=k, seed=derive_seed(seed, dataset.name, "folds"))
    result = cross_validate(
        dataset, kind, cell, folds,
        seed=derive_seed(seed, dataset.name, kind, cell_index),
    )
    return dataset.name, kind, cell_index, result


def run_experiment(datasets: list[EstuaryDataset], roster: dict[str, list[dict]] | None = None,
                   k: int = 10, seed: int = 0, jobs: int = 1) -> dict:
    """Grid search + final CV for every (estuary, model); returns the report.

    The report is a plain JSON-ready dict, byte-stable for a fixed seed and
    independent of the worker count.
    """
    if roster is None:
        roster = {kind: default_grid(kind) for kind in DEFAULT_ROSTER}
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise DataError(f"dataset names must be unique, got {names}")
    units = []
    for dataset in datasets:
        for kind, grid in sorted(roster.items()):
            if not grid:
                raise DataError(f"empty grid for {kind}")
            for cell_index, cell in enumerate(grid):
                units.append((dataset, kind, cell_index, cell, k, seed))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_unit, units, chunksize=1))
    else:
        outcomes = [_run_unit(u) for u in units]

    by_cell: dict[tuple[str, str], list[tuple[int, CvResult]]] = {}
    for est_name, kind, cell_index, result in outcomes:
        by_cell.setdefault((est_name, kind), []).append((cell_index, result))
    best: dict[tuple[str, str], CvResult] = {}
    for key, cells in by_cell.items():
        incumbent = None
        for _, result in sorted(cells, key=lambda t: t[0]):
            if _better(result, incumbent):
                incumbent = result
        best[key] = incumbent
    return build_report(list(best.values()), seed=seed, k=k, roster=roster)


def load_experiment_config(path):
    """Experiment config JSON: dataset paths, roster with grids, seed, k.

    {
      "datasets": ["a.csv", {"path": "b.csv", "name": "ria_b"}],
      "roster": {"svmknn": [{"k": 5, "C": 1.0}], "knn": null},
      "seed": 7,
      "k": 10
    }
    A null grid means the built-in default grid for that kind.  Returns
    (datasets, roster, k, seed).
    """
    import pathlib

    with open(path) as fh:
        obj = json.load(fh)
    datasets = []
    for entry in obj["datasets"]:
        if isinstance(entry, str):
            csv_path, name = entry, pathlib.Path(entry).stem
        else:
            csv_path, name = entry["path"], entry.get("name") or pathlib.Path(entry["path"]).stem
        datasets.append(EstuaryDataset.load_csv(csv_path, name=name))
    roster = {
        kind: (default_grid(kind) if grid is None else grid)
        for kind, grid in obj["roster"].items()
    }
    return datasets, roster, obj.get("k", 10), obj.get("seed", 0)


def run_experiment_config(path, jobs: int = 1) -> dict:
    """run_experiment driven by a config file."""
    datasets, roster, k, seed = load_experiment_config(path)
    return run_experiment(datasets, roster, k=k, seed=seed, jobs=jobs)


def build_report(results: list[CvResult], seed: int | None = None, k: int | None = None,
                 roster: dict | None = None) -> dict:
    """Assemble the per-estuary tables and the pooled cross-estuary summary."""
    if not results:
        raise DataError("no cross-validation results to report")
    estuaries: dict[str, dict] = {}
    pooled: dict[str, list[MetricsReport]] = {}
    params_per_estuary: dict[str, dict[str, dict]] = {}
    for result in results:
        estuaries.setdefault(result.estuary, {})[result.kind] = {
            "params": result.params,
            "folds": [r.to_dict() for r in result.fold_reports],
            "summary": result.summary.to_dict(),
        }
        pooled.setdefault(result.kind, []).extend(result.fold_reports)
        params_per_estuary.setdefault(result.kind, {})[result.estuary] = result.params
    summary = {
        kind: {
            "pooled_folds": len(reports),
            "metrics": summarize_folds(reports).to_dict(),
            "params_per_estuary": params_per_estuary[kind],
        }
        for kind, reports in pooled.items()
    }
    return {
        "format": "shellcast-report-v1",
        "seed": seed,
        "k": k,
        "aggregation": AGGREGATION_NOTE,
        "roster": roster,
        "estuaries": estuaries,
        "summary": summary,
    }


def report_json_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=True) + "\n").encode()


def write_report(report: dict, json_path, csv_path, chart_dir=None) -> None:
    """report.json, report.csv (estuary x model x metric rows) and optional
    per-metric chart tables (rows = estuary, columns = models)."""
    with open(json_path, "wb") as fh:
        fh.write(report_json_bytes(report))
    estuary_names = sorted(report["estuaries"])
    kinds = sorted(report["summary"])
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["estuary", "model", "metric", "mean", "std"])
        for estuary in estuary_names:
            for kind in sorted(report["estuaries"][estuary]):
                metrics = report["estuaries"][estuary][kind]["summary"]
                for name in METRIC_NAMES:
                    writer.writerow([estuary, kind, name,
                                     metrics[name]["mean"], metrics[name]["std"]])
        for kind in kinds:
            metrics = report["summary"][kind]["metrics"]
            for name in METRIC_NAMES:
                writer.writerow(["ALL", kind, name, metrics[name]["mean"], metrics[name]["std"]])
    if chart_dir is not None:
        for name in METRIC_NAMES:
            with open(chart_dir / f"chart_{name}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["estuary"] + kinds)
                for estuary in estuary_names:
                    row = [estuary]
                    for kind in kinds:
                        cell = report["estuaries"][estuary].get(kind)
                        row.append("" if cell is None else cell["summary"][name]["mean"])
                    writer.writerow(row)
