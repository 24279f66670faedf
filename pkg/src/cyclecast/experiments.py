"""Config-driven reproduction of the comparison and ablation experiments.

Every experiment is a pure function of the committed data fixtures, the
declarative config, and the seed list: rerunning one writes byte-identical
report files. Reports are emitted as JSON (full precision) plus a CSV shaped
like the published comparison tables; figure-style outputs (probability
series, sensitivity grids) are emitted as plot-ready data, never rendered.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import multiprocessing
import numpy as np

from . import baselines as bl
from . import bilstm_aa as model
from . import evaluation
from .autodiff import save_checkpoint
from .features import (
    build_feature_panel,
    build_windows,
    fit_standardizer,
    select_features,
    split_windows,
    windows_tensor,
    Standardizer,
    UnknownSeriesError,
    perturb_series,
)
from .ingest import SERIES_NAMES, default_us_recessions, load_panel_dir
from .months import format_ym, parse_ym

EXPERIMENT_KINDS = (
    "main",
    "ablate-features",
    "ablate-components",
    "sweep-w",
    "early",
    "sensitivity",
)

BASELINE_ORDER = ("svm", "logistic", "probit", "lstm", "bilstm", "autoencoder", "dnn")

FEATURE_MASKS = (
    ("raw",),
    ("d1",),
    ("d2",),
    ("d1", "d2"),
    ("raw", "d1", "d2"),
)

COMPONENT_VARIANTS = (
    ("no_attention", {"use_attention": False}),
    ("unidirectional_lstm", {"use_bilstm_backward": False}),
    ("no_autoencoder", {"use_autoencoder": False}),
    ("full", {}),
)

LOSS_WEIGHT_GRID = {"alpha": (0.1, 1.0, 10.0), "beta": (1e-5, 1e-4, 1e-3)}


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run."""

    kind: str = "main"
    data_dir: str = "data/fred"
    out_dir: str = "out"
    start: str = "1959-01"
    end: str = "2020-06"
    train_end: str = "1991-12"
    val_end: str = "2003-12"
    w: int = 6
    k: int = 0
    feature_mask: tuple = ("raw", "d1", "d2")
    use_attention: bool = True
    use_bilstm_backward: bool = True
    use_autoencoder: bool = True
    alpha: float = 1.0
    beta: float = 1e-4
    epochs: int = 300
    learning_rate: float = 0.001
    seeds: tuple = (0, 1, 2, 3, 4, 5, 6, 7, 8, 9)
    standardize: bool = True
    sigmoid_head: bool = False
    bottleneck: int = 4
    lstm_relu_gates: bool = False
    jobs: int = 1
    baseline_kinds: tuple = BASELINE_ORDER
    early_offsets: tuple = (1, 2, 3, 4, 5, 6)
    sweep_windows: tuple = (2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12)
    sensitivity_series: tuple = ("BAA", "INDPRO")
    sensitivity_factors: tuple = (0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3)
    checkpoint: str = ""
    save_checkpoints: bool = True

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if not self.feature_mask:
            raise ValueError("feature mask must be non-empty")
        if not parse_ym(self.train_end) < parse_ym(self.val_end):
            raise ValueError("split boundaries must be ordered")

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        coerced = {}
        for f in dataclasses.fields(cls):
            if f.name not in raw:
                continue
            value = raw[f.name]
            if isinstance(value, list):
                value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
            coerced[f.name] = value
        return cls(**coerced)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    # execution knobs that do not affect experiment content
    _NON_SEMANTIC = ("jobs", "out_dir", "save_checkpoints")

    def config_hash(self) -> str:
        semantic = {k: v for k, v in self.to_dict().items() if k not in self._NON_SEMANTIC}
        payload = json.dumps(semantic, sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]

    def train_config(self, seed: int, **overrides) -> model.TrainConfig:
        kwargs = dict(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            seed=seed,
            use_attention=self.use_attention,
            use_bilstm_backward=self.use_bilstm_backward,
            use_autoencoder=self.use_autoencoder,
            loss_weights=model.LossWeights(self.alpha, self.beta),
            bottleneck=self.bottleneck,
            relu_cell=self.lstm_relu_gates,
            sigmoid_head=self.sigmoid_head,
        )
        kwargs.update(overrides)
        return model.TrainConfig(**kwargs)


@dataclass
class PreparedData:
    """Windows for one (mask, w, k) pipeline configuration."""

    by_split: dict
    standardizer: Standardizer
    window_sha256: str
    panel: object
    feature_panel: object

    @property
    def test_labels(self) -> np.ndarray:
        return np.array([w.label for w in self.by_split["test"]], dtype=np.int64)

    @property
    def test_months(self) -> list:
        return [format_ym(w.end_month) for w in self.by_split["test"]]


def prepare_data(config: ExperimentConfig, w=None, k=None, mask=None, panel=None) -> PreparedData:
    """Load the panel and build split windows for the requested pipeline."""
    if panel is None:
        panel = load_panel_dir(
            config.data_dir,
            default_us_recessions(),
            parse_ym(config.start),
            parse_ym(config.end),
        )
    fp = build_feature_panel(panel)
    fp = select_features(fp, mask or config.feature_mask)
    train_end = parse_ym(config.train_end)
    if config.standardize:
        std = fit_standardizer(fp, train_end)
    else:
        std = Standardizer.identity(fp.matrix.shape[1])
    wins = build_windows(
        fp,
        std,
        w if w is not None else config.w,
        k if k is not None else config.k,
        (train_end, parse_ym(config.val_end)),
    )
    by_split = split_windows(wins)
    blocks, labels = windows_tensor(wins)
    digest = hashlib.sha256()
    digest.update(blocks.tobytes())
    digest.update(labels.tobytes())
    return PreparedData(
        by_split=by_split,
        standardizer=std,
        window_sha256=digest.hexdigest()[:16],
        panel=panel,
        feature_panel=fp,
    )


def _main_model_run(args) -> dict:
    """Train + evaluate the main model for one seed (process-pool friendly)."""
    by_split, train_config = args
    params, history = model.train(by_split["train"], train_config, by_split["validate"])
    preds = model.predict(params, by_split["test"], train_config)
    labels = np.array([w.label for w in by_split["test"]], dtype=np.int64)
    return {
        "metrics": evaluation.run_metrics(preds, labels),
        "probabilities": [p.probability for p in preds],
        "chosen_epoch": history["chosen_epoch"],
        "parameter_count": history["parameter_count"],
        "checkpoint_entries": model.checkpoint_entries(params),
        "seed": train_config.seed,
    }


def _baseline_run(args) -> dict:
    by_split, kind, train_config = args
    all_windows = by_split["train"] + by_split["validate"] + by_split["test"]
    trained = bl.train_baseline(kind, all_windows, train_config)
    preds = bl.predict_baseline(trained, by_split["test"])
    labels = np.array([w.label for w in by_split["test"]], dtype=np.int64)
    return {
        "metrics": evaluation.run_metrics(preds, labels),
        "probabilities": [p.probability for p in preds],
        "seed": train_config.seed,
        "info": trained.info,
    }


def _map_over_seeds(fn, arg_list, jobs: int) -> list:
    """Deterministic map: results come back in the order of ``arg_list``."""
    if jobs > 1 and len(arg_list) > 1:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            return list(pool.map(fn, arg_list))
    return [fn(args) for args in arg_list]


def run_model_over_seeds(data: PreparedData, config: ExperimentConfig, label: str, **overrides) -> dict:
    """All-seed evaluation of the main model under optional config overrides."""
    args = [(data.by_split, config.train_config(seed, **overrides)) for seed in config.seeds]
    results = _map_over_seeds(_main_model_run, args, config.jobs)
    per_run = [r["metrics"] for r in results]
    probs = np.array([r["probabilities"] for r in results], dtype=np.float64)
    report = evaluation.metrics_report(label, config.config_hash(), per_run)
    report["chosen_epochs"] = [r["chosen_epoch"] for r in results]
    report["parameter_count"] = results[0]["parameter_count"]
    report["probability_mean"] = [float(x) for x in probs.mean(axis=0)]
    report["probability_per_seed"] = {
        str(seed): [float(x) for x in row] for seed, row in zip(config.seeds, probs)
    }
    report["_checkpoints"] = {r["seed"]: r["checkpoint_entries"] for r in results}
    return report


def run_baseline_over_seeds(data: PreparedData, config: ExperimentConfig, kind: str) -> dict:
    args = [(data.by_split, kind, config.train_config(seed)) for seed in config.seeds]
    results = _map_over_seeds(_baseline_run, args, config.jobs)
    per_run = [r["metrics"] for r in results]
    report = evaluation.metrics_report(kind, config.config_hash(), per_run)
    report["probability_mean"] = [
        float(x) for x in np.array([r["probabilities"] for r in results]).mean(axis=0)
    ]
    if results[0]["info"]:
        report["info"] = results[0]["info"]
    return report


def _significance_against_second_best(model_reports: list, target: str = "bilstm_aa") -> dict:
    """Welch t-test of the target model against the best other model, per metric."""
    ours = next((r for r in model_reports if r["model"] == target), None)
    if ours is None or len(ours["per_run"]) < 2:
        return {}
    out = {}
    for key in evaluation.METRIC_KEYS:
        ours_runs = [run[key] for run in ours["per_run"]]
        rivals = [r for r in model_reports if r["model"] != target]
        if not rivals:
            continue
        best = max(rivals, key=lambda r: r["aggregate"][key]["mean"])
        rival_runs = [run[key] for run in best["per_run"]]
        if len(rival_runs) < 2:
            continue
        p = evaluation.welch_t_test(ours_runs, rival_runs)
        out[key] = {
            "second_best_model": best["model"],
            "second_best_mean": best["aggregate"][key]["mean"],
            "p_value": p,
            "significant_at_0.05": bool(
                p < 0.05 and ours["aggregate"][key]["mean"] > best["aggregate"][key]["mean"]
            ),
        }
    return out


def _base_report(config: ExperimentConfig, data: PreparedData | None = None) -> dict:
    report = {
        "experiment": config.kind,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "notes": {
            "std_convention": "population (divide by n)",
            "significance_test": "Welch two-sided t over per-seed metric values (stand-in; the source comparison does not name its test)",
            "loss_weights_provenance": "validation recession-F1 grid alpha in {0.1,1,10}, beta in {1e-5,1e-4,1e-3}",
        },
    }
    if data is not None:
        report["window_tensor_sha256"] = data.window_sha256
        report["test_months"] = data.test_months
    return report


def run_main(config: ExperimentConfig) -> dict:
    """The headline comparison: the main model plus all seven baselines."""
    started = time.time()
    data = prepare_data(config)
    report = _base_report(config, data)
    ours = run_model_over_seeds(data, config, "bilstm_aa")
    checkpoints = ours.pop("_checkpoints")
    models = [ours]
    for kind in config.baseline_kinds:
        models.append(run_baseline_over_seeds(data, config, kind))
    report["models"] = models
    report["significance"] = _significance_against_second_best(models)
    report["probability_series"] = {
        "months": data.test_months,
        "labels": [int(x) for x in data.test_labels],
        "bilstm_aa_mean": ours["probability_mean"],
    }
    assert len(ours["probability_mean"]) == len(data.by_split["test"])
    if config.save_checkpoints:
        _write_checkpoints(config, checkpoints, models[0])
    print(f"run_main finished in {time.time() - started:.1f}s")
    return report


def _write_checkpoints(config: ExperimentConfig, checkpoints: dict, model_report: dict) -> None:
    os.makedirs(config.out_dir, exist_ok=True)
    for seed, entries in checkpoints.items():
        path = os.path.join(config.out_dir, f"bilstm_aa_seed{seed}.checkpoint.json")
        save_checkpoint(entries, path, meta={"seed": seed, "config_hash": config.config_hash()})
        manifest = {
            "config": config.to_dict(),
            "config_hash": config.config_hash(),
            "seed": seed,
            "chosen_epoch": model_report["chosen_epochs"][list(config.seeds).index(seed)],
            "metrics": model_report["per_run"][list(config.seeds).index(seed)],
        }
        mpath = os.path.join(config.out_dir, f"bilstm_aa_seed{seed}.manifest.json")
        with open(mpath, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1)


def run_feature_ablation(config: ExperimentConfig) -> dict:
    """Main-model metrics for each feature-group mask."""
    started = time.time()
    panel = None
    report = _base_report(config)
    rows = []
    for mask in FEATURE_MASKS:
        data = prepare_data(config, mask=mask, panel=panel)
        panel = data.panel
        row = run_model_over_seeds(data, config, "bilstm_aa")
        row.pop("_checkpoints")
        row.pop("probability_per_seed")
        row["feature_mask"] = list(mask)
        row["feature_dim"] = data.feature_panel.matrix.shape[1]
        row["window_tensor_sha256"] = data.window_sha256
        rows.append(row)
    report["models"] = rows
    print(f"run_feature_ablation finished in {time.time() - started:.1f}s")
    return report


def run_component_ablation(config: ExperimentConfig) -> dict:
    """Main-model metrics with each architectural component disabled in turn."""
    started = time.time()
    data = prepare_data(config)
    report = _base_report(config, data)
    rows = []
    for name, overrides in COMPONENT_VARIANTS:
        row = run_model_over_seeds(data, config, name, **overrides)
        row.pop("_checkpoints")
        row.pop("probability_per_seed")
        row["component_overrides"] = overrides
        rows.append(row)
    report["models"] = rows
    print(f"run_component_ablation finished in {time.time() - started:.1f}s")
    return report


def run_timestep_sweep(config: ExperimentConfig) -> dict:
    """Main-model metrics across window lengths."""
    started = time.time()
    panel = None
    report = _base_report(config)
    rows = []
    for w in config.sweep_windows:
        data = prepare_data(config, w=w, panel=panel)
        panel = data.panel
        row = run_model_over_seeds(data, config, f"w{w}")
        row.pop("_checkpoints")
        row.pop("probability_per_seed")
        row["w"] = w
        row["n_windows"] = sum(len(v) for v in data.by_split.values())
        row["window_tensor_sha256"] = data.window_sha256
        rows.append(row)
    report["models"] = rows
    best = max(rows, key=lambda r: r["aggregate"]["accuracy"]["mean"])
    report["best_accuracy_w"] = best["w"]
    print(f"run_timestep_sweep finished in {time.time() - started:.1f}s")
    return report


def run_early_prediction(config: ExperimentConfig) -> dict:
    """Label-shifted retraining for each offset; full comparison at k=3."""
    started = time.time()
    panel = None
    report = _base_report(config)
    curve = []
    for k in config.early_offsets:
        data = prepare_data(config, k=k, panel=panel)
        panel = data.panel
        row = run_model_over_seeds(data, config, "bilstm_aa")
        row.pop("_checkpoints")
        row.pop("probability_per_seed")
        row["k"] = k
        row["n_test_windows"] = len(data.by_split["test"])
        if k == 3:
            rivals = [run_baseline_over_seeds(data, config, kind) for kind in config.baseline_kinds]
            for rival in rivals:
                rival["k"] = k
            row["baselines_at_k3"] = rivals
        curve.append(row)
    report["models"] = curve
    print(f"run_early_prediction finished in {time.time() - started:.1f}s")
    return report


TEST_RECESSION_SPANS = (("2007-12", "2009-06"), ("2020-02", "2020-07"))
ONSET_SEARCH_BACK = 18


def detect_onset(predictions: list, span_start: int, span_end: int) -> int | None:
    """First month of two consecutive positive predictions near a recession.

    Searches from ``span_start - 18`` months through the end of the span;
    single-month flickers do not count. Returns a month index or None.
    """
    by_month = {p.month: p.label for p in predictions}
    for m in range(span_start - ONSET_SEARCH_BACK, span_end):
        if by_month.get(m) == 1 and by_month.get(m + 1) == 1:
            return m
    return None


def run_sensitivity(config: ExperimentConfig) -> dict:
    """Prediction response to scaling one raw series by -30%..+30%.

    The model is trained once on unperturbed data (or loaded from
    ``config.checkpoint``); perturbed features are standardized with the
    ORIGINAL training standardizer so the probe sees the raw shift.
    """
    started = time.time()
    for name in config.sensitivity_series:
        if name not in SERIES_NAMES:
            raise UnknownSeriesError(name)
    data = prepare_data(config)
    seed = config.seeds[0]
    train_config = config.train_config(seed)
    if config.checkpoint:
        from .autodiff import load_checkpoint

        blocks, _ = windows_tensor(data.by_split["train"])
        params = model.ParameterSet.init(model.make_rng(seed), blocks.shape[2], train_config)
        model.load_into(params, load_checkpoint(config.checkpoint))
    else:
        params, _ = model.train(data.by_split["train"], train_config, data.by_split["validate"])

    spans = [(parse_ym(s), parse_ym(e)) for s, e in TEST_RECESSION_SPANS]
    report = _base_report(config, data)
    grid = []
    for name in config.sensitivity_series:
        for factor in config.sensitivity_factors:
            perturbed = perturb_series(data.panel, name, factor)
            fp = select_features(build_feature_panel(perturbed), config.feature_mask)
            wins = build_windows(
                fp,
                data.standardizer,
                config.w,
                config.k,
                (parse_ym(config.train_end), parse_ym(config.val_end)),
            )
            test = [w for w in wins if w.split == "test"]
            preds = model.predict(params, test, train_config)
            entry = {"series": name, "factor": factor, "onsets": {}}
            for span_start, span_end in spans:
                onset = detect_onset(preds, span_start, min(span_end, test[-1].end_month + 1))
                entry["onsets"][format_ym(span_start)] = format_ym(onset) if onset is not None else None
            entry["positive_months"] = sum(p.label for p in preds)
            grid.append(entry)
    report["grid"] = grid
    report["seed"] = seed
    report["onset_rule"] = "first month of >= 2 consecutive positive predictions, searched from 18 months before the dated start"
    print(f"run_sensitivity finished in {time.time() - started:.1f}s")
    return report


RUNNERS = {
    "main": run_main,
    "ablate-features": run_feature_ablation,
    "ablate-components": run_component_ablation,
    "sweep-w": run_timestep_sweep,
    "early": run_early_prediction,
    "sensitivity": run_sensitivity,
}


def run_experiment(config: ExperimentConfig) -> dict:
    return RUNNERS[config.kind](config)


def _csv_cell(aggregate: dict, key: str) -> str:
    return evaluation.format_mean_std(aggregate[key]["mean"], aggregate[key]["std"])


def report_csv_rows(report: dict) -> list:
    """Comparison-table rows: one line per model/variant with mean±std cells."""
    header = [
        "model",
        "accuracy",
        "recession_recall",
        "recession_precision",
        "recession_f1",
        "expansion_recall",
        "expansion_precision",
        "expansion_f1",
    ]
    rows = [header]

    def add(entry: dict, label: str | None = None):
        agg = entry["aggregate"]
        rows.append([label or entry["model"]] + [_csv_cell(agg, key) for key in header[1:]])

    for entry in report.get("models", []):
        label = entry["model"]
        if "feature_mask" in entry:
            label = "+".join(entry["feature_mask"])
        elif "k" in entry:
            label = f'{entry["model"]}_k{entry["k"]}'
        elif "w" in entry:
            label = entry["model"]
        add(entry, label)
        for rival in entry.get("baselines_at_k3", []):
            add(rival, f'{rival["model"]}_k{rival["k"]}')
    return rows


def emit_report(report: dict, out_dir: str, formats=("json", "csv")) -> list:
    """Write the report files with stable ordering; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    kind = report["experiment"]
    paths = []
    if "json" in formats:
        path = os.path.join(out_dir, f"{kind}.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report, fh, sort_keys=True, indent=1)
            fh.write("\n")
        paths.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, f"{kind}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if kind == "sensitivity":
                fh.write("series,factor,onset_2007-12,onset_2020-02,positive_months\n")
                for entry in report["grid"]:
                    fh.write(
                        f'{entry["series"]},{entry["factor"]},'
                        f'{entry["onsets"]["2007-12"] or ""},{entry["onsets"]["2020-02"] or ""},'
                        f'{entry["positive_months"]}\n'
                    )
            else:
                for row in report_csv_rows(report):
                    fh.write(",".join(row) + "\n")
        paths.append(path)
    if "probability_series" in report and "csv" in formats:
        path = os.path.join(out_dir, f"{kind}_probabilities.csv")
        series = report["probability_series"]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("month,label,probability_mean\n")
            for month, label, prob in zip(series["months"], series["labels"], series["bilstm_aa_mean"]):
                fh.write(f"{month},{label},{prob!r}\n")
        paths.append(path)
    return paths


def tune_loss_weights(config: ExperimentConfig, seeds=(0, 1)) -> dict:
    """Grid-search alpha/beta by mean validation recession F1.

    Development utility; the shipped defaults were chosen with it. Returns
    the grid results and the winning pair.
    """
    data = prepare_data(config)
    rows = []
    for alpha in LOSS_WEIGHT_GRID["alpha"]:
        for beta in LOSS_WEIGHT_GRID["beta"]:
            f1s = []
            for seed in seeds:
                tc = config.train_config(seed, loss_weights=model.LossWeights(alpha, beta))
                _, history = model.train(data.by_split["train"], tc, data.by_split["validate"])
                f1s.append(history["best_val_recession_f1"])
            rows.append({"alpha": alpha, "beta": beta, "mean_val_recession_f1": float(np.mean(f1s))})
    best = max(rows, key=lambda r: r["mean_val_recession_f1"])
    return {"grid": rows, "best": {"alpha": best["alpha"], "beta": best["beta"]}}
