"""Per-query hybrid: Manhattan k-nearest neighbours feeding a disposable
local linear SVM.

To classify a query, the k closest training rows (Manhattan distance on
standardized features, ties broken toward lower row index) are selected.
If their labels are unanimous that label is returned outright; otherwise a
linear SVM is fitted on just those k rows and the query is classified by
the sign of its decision value.  The local SVM is thrown away afterwards.

The solver is dual coordinate descent on the box-constrained dual of the
L1-hinge problem, with the bias folded in as a constant feature, so the
primal objective is 0.5 * (||w||^2 + b^2) + C * sum hinge.  Problems here
have at most a few dozen points, where this is fast and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError, TrainingError
from .neural import sigmoid, standardize_apply, standardize_fit

K_GRID = [3, 5, 7, 9, 10, 15, 20, 25, 30, 35, 40, 45, 50]
C_GRID = [0.1, 0.5, 1.0, 10.0]

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class SvmKnnConfig:
    k: int = 5
    C: float = 1.0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.C <= 0:
            raise ValueError("C must be > 0")


@dataclass
class LinearSvm:
    """Linear decision function w . x + b with its solver diagnostics."""

    w: np.ndarray
    b: float
    C: float
    tol: float
    max_iter: int
    converged: bool
    epochs_run: int

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return X @ self.w + self.b

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Decision value > 0 maps to closed (1); ties go to open (0)."""
        return (self.decision(X) > 0.0).astype(np.int64)


def hinge_objective(w: np.ndarray, b: float, X: np.ndarray, y_pm: np.ndarray, C: float) -> float:
    """Primal objective of the bias-augmented problem."""
    margins = y_pm * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins).sum()
    return 0.5 * (float(w @ w) + b * b) + C * float(hinge)


def hinge_loss(w: np.ndarray, b: float, X: np.ndarray, y_pm: np.ndarray) -> float:
    margins = y_pm * (X @ w + b)
    return float(np.maximum(0.0, 1.0 - margins).sum())


def linear_svm_fit(points: np.ndarray, labels: np.ndarray, C: float,
                   tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> LinearSvm:
    """Fit the L1-hinge linear SVM by dual coordinate descent.

    labels must be in {-1, +1} with both classes present.  Coordinates are
    swept in row order every epoch, so the result is deterministic in the
    input order.  Stops when the largest projected-gradient violation in a
    sweep drops below tol; hitting max_iter leaves converged=False on the
    result, which is still usable.
    """
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise DataError("points and labels disagree in length")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise TrainingError("linear SVM needs both classes present")
    n, d = X.shape
    aug = np.hstack([X, np.ones((n, 1))])
    q_diag = np.einsum("ij,ij->i", aug, aug)
    alpha = np.zeros(n)
    w_aug = np.zeros(d + 1)
    converged = False
    epoch = 0
    for epoch in range(1, max_iter + 1):
        max_violation = 0.0
        for i in range(n):
            g = y[i] * float(w_aug @ aug[i]) - 1.0
            if alpha[i] == 0.0:
                pg = min(g, 0.0)
            elif alpha[i] == C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                max_violation = max(max_violation, abs(pg))
                new_alpha = min(max(alpha[i] - g / q_diag[i], 0.0), C)
                delta = new_alpha - alpha[i]
                if delta != 0.0:
                    w_aug += delta * y[i] * aug[i]
                    alpha[i] = new_alpha
        if max_violation < tol:
            converged = True
            break
    return LinearSvm(
        w=w_aug[:-1].copy(), b=float(w_aug[-1]), C=C, tol=tol, max_iter=max_iter,
        converged=converged, epochs_run=epoch,
    )


def manhattan_distances(queries: np.ndarray, rows: np.ndarray) -> np.ndarray:
    return cdist(np.atleast_2d(queries), np.atleast_2d(rows), metric="cityblock")


def knn_query(rows: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k Manhattan-nearest rows; ties keep the lower index."""
    rows = np.atleast_2d(rows)
    if k > rows.shape[0]:
        raise DataError(f"k={k} exceeds the {rows.shape[0]} stored rows")
    dists = manhattan_distances(x, rows)[0]
    return np.argsort(dists, kind="stable")[:k]


@dataclass
class SvmKnnModel:
    """Stored standardized training set plus the per-query local classifier."""

    X: np.ndarray
    y: np.ndarray
    input_mean: np.ndarray
    input_std: np.ndarray
    config: SvmKnnConfig
    solver_invocations: int = 0
    solver_tol: float = DEFAULT_TOL
    solver_max_iter: int = DEFAULT_MAX_ITER

    def _predict_one(self, x_std: np.ndarray) -> tuple[int, float]:
        idx = knn_query(self.X, x_std, self.config.k)
        neighbour_labels = self.y[idx]
        if np.all(neighbour_labels == neighbour_labels[0]):
            label = int(neighbour_labels[0])
            return label, float(label)
        y_pm = np.where(neighbour_labels == 1, 1.0, -1.0)
        svm = linear_svm_fit(self.X[idx], y_pm, self.config.C,
                             tol=self.solver_tol, max_iter=self.solver_max_iter)
        self.solver_invocations += 1
        decision = float(svm.decision(x_std)[0])
        return (1 if decision > 0.0 else 0), float(sigmoid(np.array([decision]))[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        Xs = standardize_apply(np.atleast_2d(X), self.input_mean, self.input_std)
        return np.array([self._predict_one(row)[0] for row in Xs], dtype=np.int64)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Monotone score in [0, 1]: the squashed local decision value, or
        the exact label on unanimity.  Not a calibrated probability."""
        Xs = standardize_apply(np.atleast_2d(X), self.input_mean, self.input_std)
        return np.array([self._predict_one(row)[1] for row in Xs], dtype=np.float64)

    def to_json_dict(self) -> dict:
        return {
            "format": "shellcast-svmknn-v1",
            "k": self.config.k,
            "C": self.config.C,
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "X": self.X.tolist(),
            "y": self.y.tolist(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SvmKnnModel":
        if obj.get("format") != "shellcast-svmknn-v1":
            raise ValueError(f"unsupported model format {obj.get('format')!r}")
        return cls(
            X=np.array(obj["X"], dtype=np.float64),
            y=np.array(obj["y"], dtype=np.int64),
            input_mean=np.array(obj["input_mean"], dtype=np.float64),
            input_std=np.array(obj["input_std"], dtype=np.float64),
            config=SvmKnnConfig(k=obj["k"], C=obj["C"]),
        )


def fit(X: np.ndarray, y: np.ndarray, config: SvmKnnConfig = SvmKnnConfig()) -> SvmKnnModel:
    """Store the standardized training set; all real work happens per query."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise DataError("matrix and labels disagree in length")
    if not np.all(np.isin(y, (0, 1))) or len(np.unique(y)) < 2:
        raise DataError("labels must contain both 0 and 1")
    if config.k > X.shape[0]:
        raise DataError(f"k={config.k} exceeds training size {X.shape[0]}")
    mean, std = standardize_fit(X)
    return SvmKnnModel(
        X=standardize_apply(X, mean, std), y=y,
        input_mean=mean, input_std=std, config=config,
    )
