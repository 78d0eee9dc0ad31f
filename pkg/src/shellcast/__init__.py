"""Weekly open/closed forecasting for shellfish production areas.

The package builds per-estuary sample matrices from raw oceanographic
observations, generates statistics-calibrated synthetic estuaries with a
planted closure rule, and trains/evaluates the closure classifiers:
a bootstrap-aggregated ensemble of sigmoid networks, a local kNN + linear
SVM hybrid, and the plain baselines they are compared against.
"""

__version__ = "0.1.0"
