"""Recession probability forecasting from monthly macroeconomic panels.

The pipeline: ingest 14 monthly indexes and recession labels, engineer
derivative and sliding-window features, train a bidirectional LSTM with an
autoencoder bottleneck and attention pooling against a composite objective,
and compare it with classical and neural baselines on imbalanced-class
metrics.
"""

__version__ = "0.1.0"

from . import autodiff, baselines, bilstm_aa, evaluation, experiments, features, ingest, layers  # noqa: F401
