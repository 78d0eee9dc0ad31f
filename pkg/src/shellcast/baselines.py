"""Plain comparison classifiers: Manhattan kNN, Gaussian naive Bayes, and a
global linear SVM reusing the audited hinge solver.

All of them follow the same contract as the hybrid models: fit on a
training matrix with binary labels, predict 0/1 per row.  Ties resolve
toward closed (1), the conservative choice when a missed closure is the
costly mistake.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .neural import sigmoid, standardize_apply, standardize_fit
from .svmknn import LinearSvm, linear_svm_fit, manhattan_distances

VARIANCE_FLOOR = 1e-9


@dataclass
class KnnClassifier:
    X: np.ndarray
    y: np.ndarray
    input_mean: np.ndarray
    input_std: np.ndarray
    k: int

    def _neighbour_votes(self, X: np.ndarray) -> np.ndarray:
        Xs = standardize_apply(np.atleast_2d(X), self.input_mean, self.input_std)
        dists = manhattan_distances(Xs, self.X)
        votes = np.empty(Xs.shape[0])
        for row, d in enumerate(dists):
            idx = np.argsort(d, kind="stable")[: self.k]
            votes[row] = self.y[idx].sum()
        return votes

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority label among the k nearest; an exact tie means closed."""
        votes = self._neighbour_votes(X)
        return (2 * votes >= self.k).astype(np.int64)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self._neighbour_votes(X) / self.k

    def to_json_dict(self) -> dict:
        return {
            "format": "shellcast-knn-v1",
            "k": self.k,
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "X": self.X.tolist(),
            "y": self.y.tolist(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "KnnClassifier":
        if obj.get("format") != "shellcast-knn-v1":
            raise ValueError(f"unsupported model format {obj.get('format')!r}")
        return cls(
            X=np.array(obj["X"]), y=np.array(obj["y"], dtype=np.int64),
            input_mean=np.array(obj["input_mean"]), input_std=np.array(obj["input_std"]),
            k=obj["k"],
        )


def knn_fit(X: np.ndarray, y: np.ndarray, k: int = 5) -> KnnClassifier:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if k < 1 or k > X.shape[0]:
        raise DataError(f"k={k} out of range for {X.shape[0]} training rows")
    mean, std = standardize_fit(X)
    return KnnClassifier(X=standardize_apply(X, mean, std), y=y,
                         input_mean=mean, input_std=std, k=k)


@dataclass
class GaussianNbModel:
    """Per-class feature Gaussians with a variance floor."""

    priors: np.ndarray        # (2,)
    means: np.ndarray         # (2, d)
    variances: np.ndarray     # (2, d), floored

    def _log_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        scores = np.empty((X.shape[0], 2))
        for c in (0, 1):
            var = self.variances[c]
            log_density = -0.5 * (np.log(2.0 * np.pi * var) + (X - self.means[c]) ** 2 / var)
            scores[:, c] = np.log(self.priors[c]) + log_density.sum(axis=1)
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        scores = self._log_scores(X)
        return (scores[:, 1] >= scores[:, 0]).astype(np.int64)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        scores = self._log_scores(X)
        shifted = scores - scores.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        return expd[:, 1] / expd.sum(axis=1)

    def to_json_dict(self) -> dict:
        return {
            "format": "shellcast-gnb-v1",
            "priors": self.priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GaussianNbModel":
        if obj.get("format") != "shellcast-gnb-v1":
            raise ValueError(f"unsupported model format {obj.get('format')!r}")
        return cls(priors=np.array(obj["priors"]), means=np.array(obj["means"]),
                   variances=np.array(obj["variances"]))


def gaussian_nb_fit(X: np.ndarray, y: np.ndarray) -> GaussianNbModel:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise DataError("naive Bayes needs both classes present")
    means = np.empty((2, X.shape[1]))
    variances = np.empty((2, X.shape[1]))
    priors = np.empty(2)
    for c in (0, 1):
        rows = X[y == c]
        priors[c] = rows.shape[0] / X.shape[0]
        means[c] = rows.mean(axis=0)
        variances[c] = np.maximum(rows.var(axis=0), VARIANCE_FLOOR)
    return GaussianNbModel(priors=priors, means=means, variances=variances)


@dataclass
class GlobalLinearSvm:
    """The hinge solver applied to the whole standardized training set."""

    svm: LinearSvm
    input_mean: np.ndarray
    input_std: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        Xs = standardize_apply(np.atleast_2d(X), self.input_mean, self.input_std)
        return self.svm.predict(Xs)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Squashed decision value; a monotone score, not calibrated."""
        Xs = standardize_apply(np.atleast_2d(X), self.input_mean, self.input_std)
        return sigmoid(self.svm.decision(Xs))

    def to_json_dict(self) -> dict:
        return {
            "format": "shellcast-svm-v1",
            "C": self.svm.C,
            "w": self.svm.w.tolist(),
            "b": self.svm.b,
            "converged": self.svm.converged,
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GlobalLinearSvm":
        if obj.get("format") != "shellcast-svm-v1":
            raise ValueError(f"unsupported model format {obj.get('format')!r}")
        svm = LinearSvm(w=np.array(obj["w"]), b=obj["b"], C=obj["C"], tol=0.0,
                        max_iter=0, converged=obj["converged"], epochs_run=0)
        return cls(svm=svm, input_mean=np.array(obj["input_mean"]),
                   input_std=np.array(obj["input_std"]))


def global_linear_svm_fit(X: np.ndarray, y: np.ndarray, C: float = 1.0) -> GlobalLinearSvm:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    mean, std = standardize_fit(X)
    svm = linear_svm_fit(standardize_apply(X, mean, std), np.where(y == 1, 1.0, -1.0), C)
    return GlobalLinearSvm(svm=svm, input_mean=mean, input_std=std)
