#!/usr/bin/env python3
"""Development probe: alpha/beta validation grid and ablation directions.

Not part of the library; used while calibrating defaults.
"""

import numpy as np

from cyclecast import bilstm_aa, evaluation, features, ingest
from cyclecast.months import parse_ym

SEEDS = (0, 1)


def main():
    panel = ingest.load_panel_dir("data/fred")
    fp_all = features.build_feature_panel(panel)
    splits = (parse_ym("1991-12"), parse_ym("2003-12"))

    def run(fp, cfg):
        std = features.fit_standardizer(fp, splits[0])
        wins = features.build_windows(fp, std, 6, 0, splits)
        by = features.split_windows(wins)
        labels = np.array([w.label for w in by["test"]])
        params, hist = bilstm_aa.train(by["train"], cfg, by["validate"])
        preds = bilstm_aa.predict(params, by["test"], cfg)
        rm = evaluation.run_metrics(preds, labels)
        return hist["best_val_recession_f1"], rm["recession_f1"], rm["accuracy"]

    print("== alpha/beta grid (val F1 mean over seeds, test F1 shown for context)")
    for alpha in (0.1, 1.0, 10.0):
        for beta in (1e-5, 1e-4, 1e-3):
            vals, tests = [], []
            for seed in SEEDS:
                cfg = bilstm_aa.TrainConfig(seed=seed, loss_weights=bilstm_aa.LossWeights(alpha, beta))
                v, tf1, _ = run(fp_all, cfg)
                vals.append(v)
                tests.append(tf1)
            print(f"alpha={alpha} beta={beta}: val={np.mean(vals):.4f} test_f1={np.mean(tests):.3f}", flush=True)

    print("== feature masks (seeds mean)")
    for mask in (("raw",), ("d1", "d2"), ("raw", "d1", "d2")):
        fp = features.select_features(fp_all, mask)
        tests, accs = [], []
        for seed in SEEDS:
            cfg = bilstm_aa.TrainConfig(seed=seed)
            _, tf1, acc = run(fp, cfg)
            tests.append(tf1)
            accs.append(acc)
        print(f"mask={mask}: test_f1={np.mean(tests):.3f} acc={np.mean(accs):.3f}", flush=True)

    print("== unidirectional variant (seeds mean)")
    tests = []
    for seed in SEEDS:
        cfg = bilstm_aa.TrainConfig(seed=seed, use_bilstm_backward=False)
        _, tf1, _ = run(fp_all, cfg)
        tests.append(tf1)
    print(f"unidirectional: test_f1={np.mean(tests):.3f}", flush=True)


if __name__ == "__main__":
    main()
