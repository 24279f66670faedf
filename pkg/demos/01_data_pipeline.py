#!/usr/bin/env python3
"""Walk through the data pipeline: series loading, labels, features, windows.

Run from the repository root:  python3 demos/01_data_pipeline.py
"""

import numpy as np

from cyclecast import features, ingest
from cyclecast.months import format_ym, parse_ym

DATA_DIR = "data/fred"

print("=== 1. Load the 14 monthly series ===")
panel = ingest.load_panel_dir(DATA_DIR)
print(f"panel: {len(panel)} months, {format_ym(panel.months[0])} .. {format_ym(panel.months[-1])}")
for name in ingest.SERIES_NAMES[:4]:
    col = panel.columns[name]
    print(f"  {name:<8} first={col[0]:>10.3f} last={col[-1]:>10.3f} ({ingest.SERIES_UNITS[name]})")
print("  ...")

print("\n=== 2. Recession labels (start-inclusive, end-exclusive spans) ===")
calendar = ingest.default_us_recessions()
for start, end in calendar.spans:
    n = int(((panel.months >= start) & (panel.months < end)).sum())
    print(f"  {format_ym(start)} .. {format_ym(end)} (exclusive): {n} months")
print(f"total recession months: {panel.labels.sum()} of {len(panel)}")
print(f"recession months in the 198-month test period: {panel.labels[-198:].sum()}")
naive = (panel.labels[-198:] == 0).mean()
print(f"all-expansion 'naive' test accuracy: {naive:.2%}")

print("\n=== 3. Derivative features (half-differences) ===")
x = np.array([1.0, 3.0, 7.0])
print(f"series {x} -> first derivative {features.first_derivative(x)}")
print(f"series {x} -> second derivative {features.second_derivative(x)}")

fp = features.build_feature_panel(panel)
print(f"\nfeature panel: {fp.matrix.shape[0]} months x {fp.matrix.shape[1]} features")
print(f"column order: {fp.feature_names[0]}, ..., {fp.feature_names[14]}, ..., {fp.feature_names[28]}, ...")

print("\n=== 4. Standardize on training months only, then window ===")
train_end, val_end = parse_ym("1991-12"), parse_ym("2003-12")
std = features.fit_standardizer(fp, train_end)
windows = features.build_windows(fp, std, w=6, k=0, splits=(train_end, val_end))
by_split = features.split_windows(windows)
print(f"windows: {len(windows)} total -> " + ", ".join(f"{k}: {len(v)}" for k, v in by_split.items()))
w0 = windows[0]
print(f"first window ends {format_ym(w0.end_month)}, block shape {w0.block.shape}, label {w0.label}")

print("\n=== 5. Export for inspection ===")
features.export_feature_panel_csv(fp, "/tmp/feature_panel.csv")
print("wrote /tmp/feature_panel.csv (month, 42 features, label)")
