#!/usr/bin/env python3
"""Compare the classical and neural baselines on identical windowed features.

Run from the repository root:  python3 demos/04_baselines_and_significance.py
"""

import numpy as np

from cyclecast import baselines, bilstm_aa, evaluation, features, ingest
from cyclecast.months import parse_ym

panel = ingest.load_panel_dir("data/fred")
fp = features.build_feature_panel(panel)
train_end, val_end = parse_ym("1991-12"), parse_ym("2003-12")
std = features.fit_standardizer(fp, train_end)
windows = features.build_windows(fp, std, w=6, k=0, splits=(train_end, val_end))
test = [w for w in windows if w.split == "test"]
labels = np.array([w.label for w in test])

config = bilstm_aa.TrainConfig(epochs=60, seed=0)

print(f"{'model':<12} {'accuracy':>9} {'rec_recall':>10} {'rec_prec':>9} {'rec_f1':>7}")
rows = {}
for kind in ("svm", "logistic", "probit", "dnn", "autoencoder"):
    model = baselines.train_baseline(kind, windows, config)
    preds = baselines.predict_baseline(model, test)
    m = evaluation.run_metrics(preds, labels)
    rows[kind] = m
    print(f"{kind:<12} {m['accuracy']:>9.1%} {m['recession_recall']:>10.1%} "
          f"{m['recession_precision']:>9.1%} {m['recession_f1']:>7.1%}")

print("\nThe AE baseline classifies through a logistic head on its bottleneck code;")
ae = baselines.train_baseline("autoencoder", windows, config)
print(f"its mean squared reconstruction error on the test windows is "
      f"{baselines.ae_reconstruction_loss(ae, test):.3f}")

print("\n=== Welch t-test over per-seed metric samples ===")
a = [0.93, 0.95, 0.94, 0.96, 0.95]
b = [0.89, 0.90, 0.88, 0.91, 0.90]
p = evaluation.welch_t_test(a, b)
print(f"samples {a} vs {b}: p = {p:.2e}")
print("deterministic models repeat exactly, so their samples have zero variance;")
print(f"constant-vs-constant p-value (equal means): {evaluation.welch_t_test([0.5] * 3, [0.5] * 3)}")
