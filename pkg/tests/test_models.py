import numpy as np
import pytest

from shellcast.models import (
    DEFAULT_PARAMS,
    MODEL_KINDS,
    load_model,
    make_classifier,
    resolve_params,
    save_model,
)


def _toy(seed=0, n=60):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
    y[:2] = [0, 1]
    return X, y


def test_resolve_params_defaults():
    assert resolve_params("svmknn", None) == {"k": 5, "C": 1.0}
    assert resolve_params("bagnet", {"members": 10})["members"] == 10
    assert resolve_params("bagnet", {})["hidden"] == [192, 128]


def test_resolve_params_rejects_unknown():
    with pytest.raises(ValueError):
        resolve_params("knn", {"C": 1.0})
    with pytest.raises(ValueError):
        resolve_params("quantum", {})


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_fit_predict_all_kinds(kind):
    X, y = _toy()
    params = dict(DEFAULT_PARAMS[kind])
    if kind in ("bagnet", "ann"):
        params.update({"hidden": [4], "epochs": 8})
    if kind == "bagnet":
        params["members"] = 3
    model = make_classifier(kind, params, seed=1).fit(X, y)
    preds = model.predict(X)
    assert set(np.unique(preds)) <= {0, 1}
    probs = model.predict_proba(X)
    assert np.all((probs >= 0.0) & (probs <= 1.0))


@pytest.mark.parametrize("kind", ["knn", "nb", "svm", "svmknn", "ann", "bagnet"])
def test_save_load_roundtrip(kind, tmp_path):
    X, y = _toy(seed=3)
    params = dict(DEFAULT_PARAMS[kind])
    if kind in ("bagnet", "ann"):
        params.update({"hidden": [3], "epochs": 5})
    if kind == "bagnet":
        params["members"] = 2
    model = make_classifier(kind, params, seed=2).fit(X, y)
    path = tmp_path / "model.json"
    save_model(model, path)
    restored = load_model(path)
    assert restored.kind == kind
    np.testing.assert_array_equal(restored.predict(X), model.predict(X))


def test_unfitted_predict_rejected():
    with pytest.raises(ValueError):
        make_classifier("knn").predict(np.zeros((2, 2)))
