"""Uniform construction and persistence for every classifier kind.

The experiment harness and the command line never touch concrete model
classes; they go through make_classifier / Classifier so that all kinds
share one fit/predict/save contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import bagnet as bagnet_mod
from . import baselines, svmknn
from .neural import Mlp, MlpArchitecture, TrainConfig, init, train

MODEL_KINDS = ("bagnet", "svmknn", "ann", "knn", "nb", "svm")

_ALLOWED_PARAMS = {
    "bagnet": {"hidden", "members", "epochs", "batch_size", "learning_rate"},
    "ann": {"hidden", "epochs", "batch_size", "learning_rate"},
    "svmknn": {"k", "C"},
    "knn": {"k"},
    "nb": set(),
    "svm": {"C"},
}

DEFAULT_PARAMS = {
    "bagnet": {"hidden": [192, 128], "members": 50, "epochs": 200,
               "batch_size": 32, "learning_rate": 0.05},
    "ann": {"hidden": [192, 128], "epochs": 200, "batch_size": 32, "learning_rate": 0.05},
    "svmknn": {"k": 5, "C": 1.0},
    "knn": {"k": 5},
    "nb": {},
    "svm": {"C": 1.0},
}

_INNER_CLASSES = {
    "bagnet": bagnet_mod.BagnetModel,
    "svmknn": svmknn.SvmKnnModel,
    "ann": Mlp,
    "knn": baselines.KnnClassifier,
    "nb": baselines.GaussianNbModel,
    "svm": baselines.GlobalLinearSvm,
}


def resolve_params(kind: str, params: dict | None) -> dict:
    """Fill in defaults and reject unknown keys for one model kind."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}, expected one of {MODEL_KINDS}")
    params = dict(params or {})
    unknown = set(params) - _ALLOWED_PARAMS[kind]
    if unknown:
        raise ValueError(f"unknown parameter(s) for {kind}: {sorted(unknown)}")
    resolved = dict(DEFAULT_PARAMS[kind])
    resolved.update(params)
    return resolved


def _train_config(params: dict, shuffle_seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=params["epochs"],
        batch_size=params["batch_size"],
        shuffle_seed=shuffle_seed,
        learning_rate=params["learning_rate"],
    )


@dataclass
class Classifier:
    """kind + params + seed, with the fitted model attached after fit()."""

    kind: str
    params: dict
    seed: int = 0
    inner: object = field(default=None, repr=False)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "Classifier":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.int64)
        p = self.params
        if self.kind == "bagnet":
            arch = MlpArchitecture(n_inputs=X.shape[1], hidden=tuple(p["hidden"]))
            self.inner = bagnet_mod.fit(X, y, arch, _train_config(p, 0),
                                        master_seed=self.seed, members=p["members"])
        elif self.kind == "ann":
            arch = MlpArchitecture(n_inputs=X.shape[1], hidden=tuple(p["hidden"]))
            net = init(arch, seed=self.seed)
            train(net, X, y, _train_config(p, shuffle_seed=self.seed + 1))
            self.inner = net
        elif self.kind == "svmknn":
            self.inner = svmknn.fit(X, y, svmknn.SvmKnnConfig(k=p["k"], C=p["C"]))
        elif self.kind == "knn":
            self.inner = baselines.knn_fit(X, y, k=p["k"])
        elif self.kind == "nb":
            self.inner = baselines.gaussian_nb_fit(X, y)
        elif self.kind == "svm":
            self.inner = baselines.global_linear_svm_fit(X, y, C=p["C"])
        else:  # pragma: no cover - resolve_params already rejected it
            raise ValueError(f"unknown model kind {self.kind!r}")
        return self

    def _require_fitted(self):
        if self.inner is None:
            raise ValueError("classifier is not fitted")
        return self.inner

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self._require_fitted().predict(X)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self._require_fitted().predict_proba(X)

    def to_json_dict(self) -> dict:
        return {
            "format": "shellcast-model-v1",
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "model": self._require_fitted().to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Classifier":
        if obj.get("format") != "shellcast-model-v1":
            raise ValueError(f"unsupported model container {obj.get('format')!r}")
        kind = obj["kind"]
        if kind not in _INNER_CLASSES:
            raise ValueError(f"unknown model kind {kind!r}")
        inner = _INNER_CLASSES[kind].from_json_dict(obj["model"])
        return cls(kind=kind, params=obj["params"], seed=obj["seed"], inner=inner)


def make_classifier(kind: str, params: dict | None = None, seed: int = 0) -> Classifier:
    return Classifier(kind=kind, params=resolve_params(kind, params), seed=seed)


def save_model(classifier: Classifier, path) -> None:
    with open(path, "w") as fh:
        json.dump(classifier.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> Classifier:
    with open(path) as fh:
        return Classifier.from_json_dict(json.load(fh))
