#!/usr/bin/env python3
"""Train the full model on the canonical data and inspect its predictions.

Uses a reduced epoch budget so the demo finishes in ~10 seconds; pass an
integer argument for full-length training (e.g. 300).

Run from the repository root:  python3 demos/03_train_main_model.py [epochs]
"""

import sys

import numpy as np

from cyclecast import bilstm_aa, evaluation, features, ingest
from cyclecast.months import format_ym, parse_ym

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 80

panel = ingest.load_panel_dir("data/fred")
fp = features.build_feature_panel(panel)
train_end, val_end = parse_ym("1991-12"), parse_ym("2003-12")
std = features.fit_standardizer(fp, train_end)
windows = features.build_windows(fp, std, w=6, k=0, splits=(train_end, val_end))
by_split = features.split_windows(windows)

config = bilstm_aa.TrainConfig(epochs=epochs, seed=0)
print(f"training {epochs} epochs on {len(by_split['train'])} windows "
      f"(validating on {len(by_split['validate'])})...")
params, history = bilstm_aa.train(by_split["train"], config, by_split["validate"])
print(f"parameters: {history['parameter_count']}")
print(f"best validation recession F1 {history['best_val_recession_f1']:.3f} "
      f"at epoch {history['chosen_epoch']}")

print("\nloss components along the way:")
for e in history["epochs"][:: max(1, epochs // 5)]:
    print(f"  epoch {e['epoch']:>3}: loss={e['loss']:>9.2f} "
          f"(pred={e['prediction']:.2f}, recon={e['reconstruction']:.2f}, reg={e['regularization']:.2f})")

preds = bilstm_aa.predict(params, by_split["test"], config)
labels = np.array([w.label for w in by_split["test"]])
metrics = evaluation.run_metrics(preds, labels)
print("\ntest metrics (2004-01 .. 2020-06):")
for key, value in metrics.items():
    print(f"  {key:<22} {value:.2%}")

print("\npredicted recession months:")
flagged = [p for p in preds if p.label == 1]
print("  " + ", ".join(format_ym(p.month) for p in flagged[:24]) + (" ..." if len(flagged) > 24 else ""))
