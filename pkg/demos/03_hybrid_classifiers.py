"""The two hybrid classifiers on one synthetic estuary.

The ensemble trains 50 sigmoid networks on bootstrap resamples and blends
their probabilities with weights from the 0.632 rule
(0.632 * out-of-bag accuracy + 0.368 * full-train accuracy, normalized).
The kNN+SVM hybrid classifies each query with a disposable linear SVM
fitted on the query's 5 Manhattan-nearest training rows, skipping the
solver whenever the neighbourhood is unanimous.

This demo shrinks the ensemble and epochs; the acceptance suite runs the
full-size configuration.
"""

import dataclasses
import tempfile
from pathlib import Path

import numpy as np

from shellcast.bagnet import fit as bagnet_fit
from shellcast.ingest import build_dataset, parse_raw
from shellcast.metrics import confusion, evaluate
from shellcast.neural import MlpArchitecture, TrainConfig
from shellcast.svmknn import SvmKnnConfig
from shellcast.svmknn import fit as svmknn_fit
from shellcast.synth import SyntheticEstuarySpec, generate

preset = Path(__file__).resolve().parents[1] / "src" / "shellcast" / "presets" / "vigo.json"
# 5% label noise makes some neighbourhoods mixed, so the local solver
# actually gets exercised instead of short-circuiting on unanimity
spec = dataclasses.replace(SyntheticEstuarySpec.from_json(preset), label_noise=0.05)
raw = Path(tempfile.mkdtemp(prefix="shellcast_demo_"))
generate(spec, raw)
dataset, _, _ = build_dataset(spec.config, *parse_raw(
    raw / "profiles.csv", raw / "surface.csv",
    raw / "zone_status.csv", raw / "upwelling.csv", spec.config))
print(f"dataset: {dataset.n} samples, {dataset.y.mean():.1%} closures")

rng = np.random.default_rng(0)
order = rng.permutation(dataset.n)
split = int(0.8 * dataset.n)
tr, te = order[:split], order[split:]


def report(name, preds):
    m = evaluate(confusion(preds.tolist(), dataset.y[te].tolist()))
    print(f"  {name:8s} recall={m.recall:.3f} precision={m.precision:.3f} "
          f"f1={m.f1:.3f} kappa={m.kappa:.3f} ({m.kappa_band.value})")


print("\ntraining a 12-member ensemble (demo size)...")
ensemble = bagnet_fit(
    dataset.X[tr], dataset.y[tr],
    architecture=MlpArchitecture(n_inputs=dataset.X.shape[1], hidden=(8,)),
    train_config=TrainConfig(epochs=30, batch_size=128),
    master_seed=7, members=12,
)
print(f"  0.632-blended accuracy estimate: {ensemble.acc_boot:.3f}")
top = max(ensemble.members, key=lambda m: m.weight)
print(f"  heaviest member weight {top.weight:.4f} "
      f"(oob acc {top.acc_oob:.3f}, train acc {top.acc_train:.3f})")
report("ensemble", ensemble.predict(dataset.X[te]))

print("\nfitting the local-SVM hybrid (k=5, C=1)...")
hybrid = svmknn_fit(dataset.X[tr], dataset.y[tr], SvmKnnConfig(k=5, C=1.0))
preds = hybrid.predict(dataset.X[te])
report("svm-knn", preds)
print(f"  local solver invoked for {hybrid.solver_invocations} of {len(te)} queries "
      "(unanimous neighbourhoods skip it)")
