import os

import numpy as np
import pytest

from cyclecast import features, ingest
from cyclecast.months import parse_ym

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "fred")

TRAIN_END = parse_ym("1991-12")
VAL_END = parse_ym("2003-12")


@pytest.fixture(scope="session")
def canonical_panel():
    return ingest.load_panel_dir(DATA_DIR)


@pytest.fixture(scope="session")
def feature_panel(canonical_panel):
    return features.build_feature_panel(canonical_panel)


@pytest.fixture(scope="session")
def standardizer(feature_panel):
    return features.fit_standardizer(feature_panel, TRAIN_END)


@pytest.fixture(scope="session")
def canonical_windows(feature_panel, standardizer):
    return features.build_windows(feature_panel, standardizer, w=6, k=0, splits=(TRAIN_END, VAL_END))


@pytest.fixture(scope="session")
def windows_by_split(canonical_windows):
    return features.split_windows(canonical_windows)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def write_csv(path, rows, header="DATE,VALUE"):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")
    return str(path)
