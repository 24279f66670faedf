"""Feature engineering: derivative features, standardization, and windowing.

The 14-column monthly panel becomes a 42-column feature panel (raw values,
half-difference first derivatives, and half-difference second derivatives),
which is then cut into standardized sliding windows of ``w`` consecutive
months. Each window carries the recession label of its final month, shifted
``k`` months into the future for early-prediction training, plus a
train/validate/test split tag taken from the final month.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .ingest import MonthlyPanel
from .months import format_ym

STD_FLOOR = 1e-8

FEATURE_GROUPS = ("raw", "d1", "d2")


class FeatureError(Exception):
    """Base class for feature-pipeline failures."""


class TooShortError(FeatureError):
    pass


class InvalidSplitError(FeatureError):
    pass


class WindowTooLongError(FeatureError):
    pass


class UnknownSeriesError(FeatureError):
    pass


class DegenerateFeatureWarning(UserWarning):
    pass


def first_derivative(x: np.ndarray) -> np.ndarray:
    """Half-difference of consecutive values: out[t] = (x[t+1] - x[t]) / 2.

    Output is one element shorter than the input.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 2:
        raise TooShortError(f"need at least 2 values, got {len(x)}")
    return (x[1:] - x[:-1]) / 2.0


def second_derivative(x: np.ndarray) -> np.ndarray:
    """Half-difference applied twice; output is two elements shorter."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 3:
        raise TooShortError(f"need at least 3 values, got {len(x)}")
    return first_derivative(first_derivative(x))


@dataclass(frozen=True)
class FeaturePanel:
    """Per-month 42-feature matrix aligned with labels.

    Column order is fixed: the 14 raw series in canonical order, then their
    first derivatives (``d1_<name>``), then second derivatives (``d2_<name>``).
    The first two panel months are dropped because derivatives are undefined
    there.
    """

    months: np.ndarray
    matrix: np.ndarray
    feature_names: tuple
    labels: np.ndarray

    def __post_init__(self):
        if self.matrix.shape != (len(self.months), len(self.feature_names)):
            raise ValueError("matrix shape does not match months x feature_names")
        if len(self.labels) != len(self.months):
            raise ValueError("labels length mismatch")

    def __len__(self) -> int:
        return len(self.months)


def build_feature_panel(panel: MonthlyPanel) -> FeaturePanel:
    """Assemble the 42-column feature panel from a monthly panel."""
    names = panel.series_names
    n = len(panel)
    raw_cols = []
    d1_cols = []
    d2_cols = []
    for name in names:
        col = panel.columns[name]
        raw_cols.append(col[2:])
        d1_cols.append(first_derivative(col)[1:])
        d2_cols.append(second_derivative(col))
    matrix = np.column_stack(raw_cols + d1_cols + d2_cols)
    feature_names = tuple(
        [str(n_) for n_ in names]
        + [f"d1_{n_}" for n_ in names]
        + [f"d2_{n_}" for n_ in names]
    )
    return FeaturePanel(
        months=panel.months[2:].copy(),
        matrix=matrix,
        feature_names=feature_names,
        labels=panel.labels[2:].copy(),
    )


def select_features(fp: FeaturePanel, groups) -> FeaturePanel:
    """Restrict to feature groups, any non-empty subset of {raw, d1, d2}."""
    groups = tuple(groups)
    if not groups or any(g not in FEATURE_GROUPS for g in groups):
        raise ValueError(f"feature groups must be a non-empty subset of {FEATURE_GROUPS}")
    keep = []
    for i, fname in enumerate(fp.feature_names):
        group = "d1" if fname.startswith("d1_") else "d2" if fname.startswith("d2_") else "raw"
        if group in groups:
            keep.append(i)
    return FeaturePanel(
        months=fp.months,
        matrix=fp.matrix[:, keep],
        feature_names=tuple(fp.feature_names[i] for i in keep),
        labels=fp.labels,
    )


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-score transform fitted on training months only."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, block: np.ndarray) -> np.ndarray:
        return (block - self.mean) / self.std

    @classmethod
    def identity(cls, n_features: int) -> "Standardizer":
        """No-op transform, for the literal unscaled pipeline."""
        return cls(np.zeros(n_features), np.ones(n_features))


def fit_standardizer(fp: FeaturePanel, train_end: int) -> Standardizer:
    """Population mean/std per feature over months <= train_end.

    Standard deviations below the floor are clamped to 1e-8 and reported as a
    :class:`DegenerateFeatureWarning`; training proceeds with the floored value.
    """
    train_rows = fp.matrix[fp.months <= train_end]
    if len(train_rows) < 2:
        raise InvalidSplitError("need at least 2 training months to standardize")
    mean = train_rows.mean(axis=0)
    std = train_rows.std(axis=0)
    low = std < STD_FLOOR
    if np.any(low):
        bad = [fp.feature_names[i] for i in np.nonzero(low)[0]]
        warnings.warn(
            f"features with degenerate training std, floored at {STD_FLOOR}: {bad}",
            DegenerateFeatureWarning,
        )
        std = np.where(low, STD_FLOOR, std)
    return Standardizer(mean=mean, std=std)


@dataclass(frozen=True)
class LabeledWindow:
    """A ``w x F`` standardized feature block ending at ``end_month``.

    ``label`` is the panel label of ``end_month + k``; ``split`` is decided by
    ``end_month`` alone, so lookback context may reach backward across a split
    boundary.
    """

    end_month: int
    block: np.ndarray
    label: int
    split: str


def build_windows(
    fp: FeaturePanel,
    std: Standardizer,
    w: int = 6,
    k: int = 0,
    splits: tuple = None,
) -> list:
    """Cut the feature panel into standardized, labeled sliding windows.

    ``splits`` is ``(train_end, val_end)`` in month indices. A window exists
    for every month with at least ``w - 1`` predecessors in the feature panel
    and a defined label at ``end_month + k``; windows are returned sorted by
    end month.
    """
    if w < 1 or k < 0:
        raise ValueError("need w >= 1 and k >= 0")
    if splits is None:
        raise InvalidSplitError("split boundaries (train_end, val_end) are required")
    train_end, val_end = splits
    first, last = int(fp.months[0]), int(fp.months[-1])
    if not (first <= train_end < val_end <= last):
        raise InvalidSplitError(
            f"splits ({format_ym(train_end)}, {format_ym(val_end)}) outside panel "
            f"{format_ym(first)}..{format_ym(last)} or unordered"
        )
    if w > len(fp):
        raise WindowTooLongError(f"w={w} exceeds {len(fp)} feature months")
    month_pos = {int(m): i for i, m in enumerate(fp.months)}
    windows = []
    for pos in range(w - 1, len(fp)):
        end_month = int(fp.months[pos])
        label_pos = month_pos.get(end_month + k)
        if label_pos is None:
            continue
        block = std.transform(fp.matrix[pos - w + 1 : pos + 1])
        if end_month <= train_end:
            split = "train"
        elif end_month <= val_end:
            split = "validate"
        else:
            split = "test"
        windows.append(
            LabeledWindow(
                end_month=end_month,
                block=np.ascontiguousarray(block),
                label=int(fp.labels[label_pos]),
                split=split,
            )
        )
    return windows


def perturb_series(panel: MonthlyPanel, name: str, factor: float) -> MonthlyPanel:
    """Copy of the panel with one raw column scaled by ``factor``.

    Derivative features are recomputed downstream from the perturbed raw
    values, so they scale by the same factor.
    """
    if name not in panel.columns:
        raise UnknownSeriesError(name)
    if not 0.5 <= factor <= 1.5:
        raise ValueError(f"factor {factor} outside [0.5, 1.5]")
    columns = {n: (v * factor if n == name else v.copy()) for n, v in panel.columns.items()}
    return MonthlyPanel(months=panel.months.copy(), columns=columns, labels=panel.labels.copy())


def split_windows(windows) -> dict:
    """Group windows by split tag, preserving end-month order."""
    out = {"train": [], "validate": [], "test": []}
    for win in windows:
        out[win.split].append(win)
    return out


def windows_tensor(windows) -> tuple:
    """Stack windows into ``(blocks (N,w,F), labels (N,))`` float64/int arrays."""
    if not windows:
        raise ValueError("empty window list")
    blocks = np.stack([win.block for win in windows]).astype(np.float64)
    labels = np.array([win.label for win in windows], dtype=np.int64)
    return blocks, labels


def export_feature_panel_csv(fp: FeaturePanel, path: str) -> None:
    """Write ``month,<feature columns>,label`` rows for external inspection."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("month," + ",".join(fp.feature_names) + ",label\n")
        for i, month in enumerate(fp.months):
            cells = [format_ym(int(month))]
            cells += [repr(float(v)) for v in fp.matrix[i]]
            cells.append(str(int(fp.labels[i])))
            fh.write(",".join(cells) + "\n")
