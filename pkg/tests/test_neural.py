import math

import numpy as np
import pytest

from shellcast.errors import TrainingError
from shellcast.neural import (
    AdagradState,
    Mlp,
    MlpArchitecture,
    TrainConfig,
    adagrad_step,
    class_weights,
    forward,
    gradient,
    init,
    loss,
    standardize_apply,
    standardize_fit,
    train,
)


def sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def make_net(weights, biases, n_inputs, hidden):
    return Mlp(
        architecture=MlpArchitecture(n_inputs=n_inputs, hidden=hidden),
        weights=[np.array(w, dtype=float) for w in weights],
        biases=[np.array(b, dtype=float) for b in biases],
        seed=0,
    )


# ------------------------------------------------------------------- init

def test_init_deterministic():
    arch = MlpArchitecture(n_inputs=5, hidden=(4, 3))
    a, b = init(arch, seed=7), init(arch, seed=7)
    for wa, wb in zip(a.weights, b.weights):
        np.testing.assert_array_equal(wa, wb)


def test_init_shapes_best_architecture():
    arch = MlpArchitecture(n_inputs=69, hidden=(192, 128))
    mlp = init(arch, seed=0)
    assert [w.shape for w in mlp.weights] == [(69, 192), (192, 128), (128, 1)]
    assert all(np.all(b == 0.0) for b in mlp.biases)


def test_init_glorot_bounds():
    arch = MlpArchitecture(n_inputs=10, hidden=(8,))
    mlp = init(arch, seed=3)
    for w in mlp.weights:
        limit = math.sqrt(6.0 / sum(w.shape))
        assert np.all(np.abs(w) <= limit)


def test_architecture_validation():
    with pytest.raises(ValueError):
        MlpArchitecture(n_inputs=0)
    with pytest.raises(ValueError):
        MlpArchitecture(n_inputs=3, hidden=(4, 4, 4))
    with pytest.raises(ValueError):
        MlpArchitecture(n_inputs=3, hidden=(0,))


# ---------------------------------------------------------------- forward

def test_forward_zero_params_is_half():
    mlp = make_net([np.zeros((3, 2)), np.zeros((2, 1))], [np.zeros(2), np.zeros(1)], 3, (2,))
    assert forward(mlp, np.array([5.0, -2.0, 0.3])) == 0.5


def test_forward_hand_computed_1_2_1():
    mlp = make_net(
        weights=[[[0.5, -1.0]], [[0.8], [-0.3]]],
        biases=[[0.1, 0.2], [0.05]],
        n_inputs=1, hidden=(2,),
    )
    x = 2.0
    h1, h2 = sig(0.5 * x + 0.1), sig(-1.0 * x + 0.2)
    expected = sig(0.8 * h1 - 0.3 * h2 + 0.05)
    assert forward(mlp, np.array([x])) == pytest.approx(expected, abs=1e-12)


def test_forward_strictly_inside_unit_interval():
    rng = np.random.default_rng(0)
    mlp = init(MlpArchitecture(n_inputs=4, hidden=(6,)), seed=1)
    out = forward(mlp, rng.normal(size=(50, 4)) * 100)
    assert np.all(out > 0.0) and np.all(out < 1.0)


# ----------------------------------------------------------- class weight

def test_class_weights_imbalanced_16pct():
    y = np.array([1] * 16 + [0] * 84)
    w_pos, w_neg = class_weights(y)
    assert w_pos == pytest.approx(3.125)
    assert w_neg == pytest.approx(100 / 168)


def test_class_weights_balanced():
    assert class_weights(np.array([0, 1, 0, 1])) == (1.0, 1.0)


def test_class_weights_50_150():
    w_pos, w_neg = class_weights(np.array([1] * 50 + [0] * 150))
    assert w_pos == pytest.approx(2.0)
    assert w_neg == pytest.approx(2 / 3)


def test_class_weights_single_class_rejected():
    with pytest.raises(TrainingError):
        class_weights(np.ones(10))


# ------------------------------------------------------------------- loss

def test_loss_half_probability_is_ln2():
    mlp = make_net([np.zeros((2, 1))], [np.zeros(1)], 2, ())
    X, y = np.zeros((4, 2)), np.array([0, 1, 0, 1])
    assert loss(mlp, X, y, (1.0, 1.0)) == pytest.approx(math.log(2.0), abs=1e-12)


def test_loss_near_zero_on_confident_correct():
    mlp = make_net([np.array([[50.0]])], [np.zeros(1)], 1, ())
    X, y = np.array([[1.0], [-1.0]]), np.array([1, 0])
    assert loss(mlp, X, y, (1.0, 1.0)) < 1e-9


def test_loss_positive_weight_linearity():
    mlp = make_net([np.array([[0.7]])], [np.array([0.1])], 1, ())
    X, y = np.array([[0.5], [1.5]]), np.array([1, 1])
    assert loss(mlp, X, y, (2.0, 1.0)) == pytest.approx(2 * loss(mlp, X, y, (1.0, 1.0)), rel=1e-12)


# --------------------------------------------------------------- gradient

def _max_rel_error(mlp, X, y, weights, h=1e-5):
    gw, gb = gradient(mlp, X, y, weights)
    worst = 0.0
    for params, grads in ((mlp.weights, gw), (mlp.biases, gb)):
        for arr, g in zip(params, grads):
            flat, gflat = arr.ravel(), g.ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + h
                up = loss(mlp, X, y, weights)
                flat[j] = orig - h
                down = loss(mlp, X, y, weights)
                flat[j] = orig
                fd = (up - down) / (2 * h)
                denom = max(abs(gflat[j]), abs(fd), 1e-6)
                worst = max(worst, abs(gflat[j] - fd) / denom)
    return worst


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    archs = [
        (3, ()), (4, (5,)), (2, (16,)), (6, (8, 4)), (3, (2, 2)),
        (5, (10,)), (4, (7, 3)), (8, (6,)), (2, (3, 5)), (7, (12, 6)),
    ]
    for n_inputs, hidden in archs:
        mlp = init(MlpArchitecture(n_inputs=n_inputs, hidden=hidden), seed=int(rng.integers(1e6)))
        X = rng.normal(size=(6, n_inputs))
        y = rng.integers(0, 2, size=6)
        if y.sum() == 0:
            y[0] = 1
        if y.sum() == len(y):
            y[0] = 0
        err = _max_rel_error(mlp, X, y, class_weights(y))
        assert err < 1e-4, (n_inputs, hidden, err)


def test_gradient_output_bias_identity():
    # single sample: output bias gradient equals w_y * (p - y)
    rng = np.random.default_rng(5)
    mlp = init(MlpArchitecture(n_inputs=3, hidden=(4,)), seed=9)
    x = rng.normal(size=(1, 3))
    p = forward(mlp, x)[0]
    _, gb = gradient(mlp, x, np.array([1]), (2.5, 1.0))
    assert gb[-1][0] == pytest.approx(2.5 * (p - 1.0), abs=1e-12)


def test_gradient_zero_at_stationary_point():
    # identical inputs with conflicting labels: optimum is p = 0.5 = zero params
    mlp = make_net([np.zeros((2, 1))], [np.zeros(1)], 2, ())
    X, y = np.array([[1.0, -0.5], [1.0, -0.5]]), np.array([1, 0])
    gw, gb = gradient(mlp, X, y, (1.0, 1.0))
    assert np.allclose(gw[0], 0.0, atol=1e-15) and np.allclose(gb[0], 0.0, atol=1e-15)


# ---------------------------------------------------------------- adagrad

def test_adagrad_closed_form_two_steps():
    value = np.array([1.0])
    accum = np.zeros(1)
    adagrad_step(value, np.array([0.5]), accum, lr=0.05, eps=1e-8)
    first_delta = value[0] - 1.0
    assert first_delta == pytest.approx(-0.05, abs=1e-6)
    before = value[0]
    adagrad_step(value, np.array([0.5]), accum, lr=0.05, eps=1e-8)
    second_delta = value[0] - before
    assert second_delta == pytest.approx(-0.05 * 0.5 / math.sqrt(0.5), abs=1e-6)
    assert second_delta == pytest.approx(-0.035355, abs=1e-6)


def test_adagrad_accumulator_monotone_and_steps_shrink():
    value, accum = np.array([0.0]), np.zeros(1)
    prev_accum, prev_step = -1.0, np.inf
    for _ in range(20):
        before = value[0]
        adagrad_step(value, np.array([0.3]), accum, lr=0.05, eps=1e-8)
        step = abs(value[0] - before)
        assert accum[0] > prev_accum
        assert step <= prev_step + 1e-15
        prev_accum, prev_step = accum[0], step


# ------------------------------------------------------------------ train

def _toy_separable(n=60, seed=2):
    rng = np.random.default_rng(seed)
    neg = rng.normal(loc=(-2.0, -2.0), scale=0.3, size=(n // 2, 2))
    pos = rng.normal(loc=(2.0, 2.0), scale=0.3, size=(n // 2, 2))
    X = np.vstack([neg, pos])
    y = np.array([0] * (n // 2) + [1] * (n // 2))
    return X, y


def test_train_reaches_perfect_accuracy_on_separable_toy():
    X, y = _toy_separable()
    mlp = init(MlpArchitecture(n_inputs=2, hidden=(4,)), seed=0)
    train(mlp, X, y, TrainConfig(epochs=200, batch_size=16, shuffle_seed=0))
    assert np.array_equal(mlp.predict(X), y)


def test_train_deterministic():
    X, y = _toy_separable()
    models = []
    for _ in range(2):
        mlp = init(MlpArchitecture(n_inputs=2, hidden=(3,)), seed=4)
        train(mlp, X, y, TrainConfig(epochs=20, batch_size=8, shuffle_seed=1))
        models.append(mlp)
    for wa, wb in zip(models[0].weights, models[1].weights):
        np.testing.assert_array_equal(wa, wb)


def test_train_single_class_rejected():
    X = np.zeros((5, 2))
    with pytest.raises(TrainingError):
        train(init(MlpArchitecture(2, (2,)), 0), X, np.ones(5), TrainConfig(epochs=1))


def test_full_batch_loss_nonincreasing_on_convex_problem():
    # logistic regression special case: zero hidden layers, full batch
    rng = np.random.default_rng(8)
    X = rng.normal(size=(30, 3))
    truth = np.array([1.0, -2.0, 0.5])
    y = (X @ truth > 0).astype(int)
    mlp = make_net([np.zeros((3, 1))], [np.zeros(1)], 3, ())
    weights = class_weights(y)
    state = AdagradState.for_model(mlp, learning_rate=0.01)
    losses = [loss(mlp, X, y, weights)]
    for _ in range(60):
        gw, gb = gradient(mlp, X, y, weights)
        for layer in range(len(mlp.weights)):
            adagrad_step(mlp.weights[layer], gw[layer], state.g_weights[layer], 0.01, 1e-8)
            adagrad_step(mlp.biases[layer], gb[layer], state.g_biases[layer], 0.01, 1e-8)
        losses.append(loss(mlp, X, y, weights))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_standardization_stored_and_applied():
    X, y = _toy_separable()
    X[:, 1] = 7.0  # constant column must standardize to zero, not explode
    mlp = init(MlpArchitecture(n_inputs=2, hidden=(2,)), seed=0)
    train(mlp, X, y, TrainConfig(epochs=5, batch_size=16))
    assert mlp.input_std[1] == 1.0
    manual = forward(mlp, standardize_apply(X, mlp.input_mean, mlp.input_std))
    np.testing.assert_allclose(mlp.predict_proba(X), manual, atol=0)


def test_persistence_roundtrip():
    X, y = _toy_separable()
    mlp = init(MlpArchitecture(n_inputs=2, hidden=(3,)), seed=6)
    train(mlp, X, y, TrainConfig(epochs=10, batch_size=8))
    restored = Mlp.from_json_dict(mlp.to_json_dict())
    np.testing.assert_array_equal(restored.predict_proba(X), mlp.predict_proba(X))
