"""A look inside the numerical cores: the Adagrad trace, the analytic
gradient against finite differences, and the hinge solver against a slow
subgradient reference.
"""

import numpy as np

from shellcast.metrics import ConfusionMatrix, evaluate
from shellcast.neural import (
    MlpArchitecture,
    adagrad_step,
    class_weights,
    gradient,
    init,
    loss,
)
from shellcast.svmknn import hinge_objective, linear_svm_fit

# ---- Adagrad: per-parameter step sizes shrink as squared gradients pile up
print("adagrad trace for a constant gradient of 0.5 at learning rate 0.05:")
value, accum = np.array([0.0]), np.zeros(1)
for step in range(5):
    before = value[0]
    adagrad_step(value, np.array([0.5]), accum, lr=0.05, eps=1e-8)
    print(f"  step {step + 1}: delta = {value[0] - before:+.6f} (accumulated G = {accum[0]:.3f})")

# ---- analytic gradients vs central finite differences
rng = np.random.default_rng(0)
mlp = init(MlpArchitecture(n_inputs=4, hidden=(6,)), seed=3)
X = rng.normal(size=(8, 4))
y = np.array([0, 1] * 4)
weights = class_weights(y)
gw, _ = gradient(mlp, X, y, weights)
h = 1e-5
layer, i, j = 0, 2, 3
orig = mlp.weights[layer][i, j]
mlp.weights[layer][i, j] = orig + h
up = loss(mlp, X, y, weights)
mlp.weights[layer][i, j] = orig - h
down = loss(mlp, X, y, weights)
mlp.weights[layer][i, j] = orig
fd = (up - down) / (2 * h)
print(f"\ngradient check on one weight: analytic {gw[layer][i, j]:+.8f}, "
      f"finite difference {fd:+.8f}")

# ---- the dual coordinate descent hinge solver vs a slow primal reference
X = np.array([[-2.0, 0.2], [-1.5, -0.5], [-2.2, 0.8], [1.8, 0.1], [2.1, -0.4], [1.4, 0.6]])
y_pm = np.array([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0])
svm = linear_svm_fit(X, y_pm, C=10.0, tol=1e-8, max_iter=100_000)
print(f"\nlinear SVM on a separable toy: w = {np.round(svm.w, 4)}, b = {svm.b:+.4f}, "
      f"converged in {svm.epochs_run} sweeps")
print(f"primal objective: {hinge_objective(svm.w, svm.b, X, y_pm, 10.0):.6f}")

aug = np.hstack([X, np.ones((6, 1))])
v = np.zeros(3)
best = np.inf
for t in range(1, 50_001):
    margins = y_pm * (aug @ v)
    g = v.copy()
    violated = margins < 1
    if violated.any():
        g -= 10.0 * (y_pm[violated, None] * aug[violated]).sum(axis=0)
    v -= g / t
    obj = 0.5 * v @ v + 10.0 * np.maximum(0, 1 - y_pm * (aug @ v)).sum()
    best = min(best, obj)
print(f"50k-step subgradient reference reaches: {best:.6f}")

# ---- metric bands on a familiar confusion matrix
rep = evaluate(ConfusionMatrix(tp=40, fp=5, fn=10, tn=45))
print(f"\nmetrics for tp=40 fp=5 fn=10 tn=45: recall={rep.recall:.3f}, "
      f"kappa={rep.kappa:.3f} -> {rep.kappa_band.value}")
