"""Bootstrap-aggregated ensemble of sigmoid networks.

Each member trains on a with-replacement resample of the training set.
A member's aggregation weight comes from its 0.632-bootstrap accuracy
estimate, 0.632 * acc_oob + 0.368 * acc_train, normalized over members;
the ensemble output is the weighted mean of member probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .neural import Mlp, MlpArchitecture, TrainConfig, init, train

DEFAULT_MEMBERS = 50
OOB_COEFF = 0.632
TRAIN_COEFF = 0.368
MAX_REDRAWS = 5
REDRAW_SEED_OFFSET = 10_000


@dataclass(frozen=True)
class BootstrapSample:
    """One with-replacement resample: n in-bag draws plus the left-out rows."""

    in_bag: np.ndarray
    out_of_bag: np.ndarray
    n: int
    seed: int


def bootstrap_sample(n: int, seed: int) -> BootstrapSample:
    """Draw n indices with replacement from range(n); OOB is the complement."""
    if n < 2:
        raise ValueError(f"bootstrap needs n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    in_bag = rng.integers(0, n, size=n)
    mask = np.zeros(n, dtype=bool)
    mask[in_bag] = True
    return BootstrapSample(in_bag=in_bag, out_of_bag=np.flatnonzero(~mask), n=n, seed=seed)


def member_weights(acc_oob, acc_train):
    """Raw 0.632-estimate per member, normalized weights, and their mean.

    Returns (raw, normalized, acc_boot).  A zero raw sum falls back to
    uniform weights.
    """
    acc_oob = np.asarray(acc_oob, dtype=np.float64)
    acc_train = np.asarray(acc_train, dtype=np.float64)
    raw = OOB_COEFF * acc_oob + TRAIN_COEFF * acc_train
    total = float(raw.sum())
    if total == 0.0:
        normalized = np.full(raw.shape, 1.0 / raw.size)
    else:
        normalized = raw / total
    return raw, normalized, float(raw.mean())


@dataclass
class BagnetMember:
    model: Mlp
    acc_oob: float
    acc_train: float
    raw_weight: float
    weight: float


@dataclass
class BagnetModel:
    members: list[BagnetMember]
    master_seed: int
    acc_boot: float
    threshold: float = 0.5

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Weighted mean of member probabilities, in [0, 1]."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.zeros(X.shape[0], dtype=np.float64)
        for member in self.members:
            out += member.weight * member.model.predict_proba(X)
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        """1 iff the weighted probability exceeds the threshold; ties open."""
        return (self.predict_proba(X) > self.threshold).astype(np.int64)

    def to_json_dict(self) -> dict:
        return {
            "format": "shellcast-bagnet-v1",
            "master_seed": self.master_seed,
            "acc_boot": self.acc_boot,
            "threshold": self.threshold,
            "members": [
                {
                    "model": m.model.to_json_dict(),
                    "acc_oob": m.acc_oob,
                    "acc_train": m.acc_train,
                    "raw_weight": m.raw_weight,
                    "weight": m.weight,
                }
                for m in self.members
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "BagnetModel":
        if obj.get("format") != "shellcast-bagnet-v1":
            raise ValueError(f"unsupported model format {obj.get('format')!r}")
        members = [
            BagnetMember(
                model=Mlp.from_json_dict(m["model"]),
                acc_oob=m["acc_oob"],
                acc_train=m["acc_train"],
                raw_weight=m["raw_weight"],
                weight=m["weight"],
            )
            for m in obj["members"]
        ]
        return cls(members=members, master_seed=obj["master_seed"],
                   acc_boot=obj["acc_boot"], threshold=obj["threshold"])


def draw_training_bootstrap(y: np.ndarray, base_seed: int) -> BootstrapSample:
    """Bootstrap resample whose in-bag labels contain both classes.

    Single-class draws are redrawn with the seed shifted by 10000, at most
    5 times, before giving up.
    """
    n = y.shape[0]
    for attempt in range(MAX_REDRAWS + 1):
        sample = bootstrap_sample(n, base_seed + attempt * REDRAW_SEED_OFFSET)
        in_bag_labels = y[sample.in_bag]
        if 0 < in_bag_labels.sum() < n:
            return sample
    raise TrainingError(
        f"could not draw a two-class bootstrap sample after {MAX_REDRAWS + 1} attempts "
        f"(base seed {base_seed})"
    )


def _accuracy(pred: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(pred == y))


def fit(X: np.ndarray, y: np.ndarray, architecture: MlpArchitecture,
        train_config: TrainConfig, master_seed: int,
        members: int = DEFAULT_MEMBERS) -> BagnetModel:
    """Train the ensemble: member i resamples with seed master_seed + i.

    acc_train is measured on the full training set, acc_oob on the rows the
    resample left out (falling back to acc_train when none were left out).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if members < 1:
        raise ValueError("members must be >= 1")
    if X.shape[0] < 2:
        raise TrainingError("bagnet needs at least 2 training rows")
    fitted: list[tuple[Mlp, float, float]] = []
    for i in range(members):
        sample = draw_training_bootstrap(y, master_seed + i)
        net = init(architecture, seed=(master_seed + 1) * 100_003 + 2 * i)
        config = TrainConfig(
            epochs=train_config.epochs,
            batch_size=train_config.batch_size,
            shuffle_seed=(master_seed + 1) * 100_003 + 2 * i + 1,
            learning_rate=train_config.learning_rate,
        )
        train(net, X[sample.in_bag], y[sample.in_bag], config)
        acc_train = _accuracy(net.predict(X), y)
        if sample.out_of_bag.size > 0:
            acc_oob = _accuracy(net.predict(X[sample.out_of_bag]), y[sample.out_of_bag])
        else:
            acc_oob = acc_train
        fitted.append((net, acc_oob, acc_train))
    raw, weights, acc_boot = member_weights(
        [f[1] for f in fitted], [f[2] for f in fitted])
    return BagnetModel(
        members=[
            BagnetMember(model=net, acc_oob=a_oob, acc_train=a_tr,
                         raw_weight=float(r), weight=float(w))
            for (net, a_oob, a_tr), r, w in zip(fitted, raw, weights)
        ],
        master_seed=master_seed,
        acc_boot=acc_boot,
    )
