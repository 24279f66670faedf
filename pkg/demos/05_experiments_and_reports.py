#!/usr/bin/env python3
"""Drive a reduced end-to-end experiment and inspect its report files.

The same run is available from the command line as
    cyclecast run main --config <file> --out demos_out
with full-scale defaults (300 epochs, seeds 0..9, all seven baselines).

Run from the repository root:  python3 demos/05_experiments_and_reports.py
"""

import json

from cyclecast import experiments

config = experiments.ExperimentConfig(
    kind="main",
    epochs=40,
    seeds=(0, 1),
    baseline_kinds=("svm", "logistic", "probit"),
    out_dir="demos_out",
    save_checkpoints=True,
)
print("running a reduced main experiment (2 seeds, 40 epochs, 3 baselines)...")
report = experiments.run_main(config)
paths = experiments.emit_report(report, config.out_dir)

print("\nreport files:")
for p in paths:
    print(f"  {p}")

print("\ncomparison table (mean ± population std over seeds):")
with open(f"{config.out_dir}/main.csv") as fh:
    for line in fh:
        print("  " + line.rstrip())

print("\nsignificance vs the best rival (Welch t over per-seed values):")
sig = report["significance"].get("recession_f1")
if sig:
    print(f"  recession F1 vs {sig['second_best_model']}: p = {sig['p_value']:.3f}")

print("\nprobability series (first rows of main_probabilities.csv):")
with open(f"{config.out_dir}/main_probabilities.csv") as fh:
    for i, line in enumerate(fh):
        if i > 5:
            break
        print("  " + line.rstrip())

manifest = json.load(open(f"{config.out_dir}/bilstm_aa_seed0.manifest.json"))
print(f"\nrun manifest for seed 0: chosen epoch {manifest['chosen_epoch']}, "
      f"accuracy {manifest['metrics']['accuracy']:.1%}")
print("\nother CLI entry points:")
for kind in experiments.EXPERIMENT_KINDS:
    print(f"  cyclecast run {kind} --config config.json --out out/")
