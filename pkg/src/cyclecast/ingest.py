"""Loading and alignment of monthly economic series and recession labels.

The canonical dataset is a panel of 14 monthly indexes spanning 1959-01
through 2020-06 (738 months), labeled with U.S. recession months. Series
arrive either as two-column FRED-style CSV files (``DATE,VALUE``) or from
the FRED observations endpoint; both paths produce the same validated,
gap-free :class:`MonthlySeries`.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .months import format_ym, parse_date_month, parse_ym

# Canonical series identifiers, in fixed column order.
SERIES_NAMES = (
    "BAA",
    "CUMFNS",
    "INDPRO",
    "IPMAT",
    "MANEMP",
    "USGOOD",
    "UNRATE",
    "TB3MS",
    "GS10",
    "T10Y3M",
    "WTISPLC",
    "PPIACO",
    "CPIAUCSL",
    "ISM",
)

SERIES_UNITS = {
    "BAA": "Percent",
    "CUMFNS": "Percent of Capacity",
    "INDPRO": "Index 2012=100",
    "IPMAT": "Index 2012=100",
    "MANEMP": "Thousands of Persons",
    "USGOOD": "Thousands of Persons",
    "UNRATE": "Percent",
    "TB3MS": "Percent",
    "GS10": "Percent",
    "T10Y3M": "Percent",
    "WTISPLC": "Dollars per Barrel",
    "PPIACO": "Index 1982=100",
    "CPIAUCSL": "Index 1982-1984=100",
    "ISM": "Index",
}

CANONICAL_START = parse_ym("1959-01")
CANONICAL_END = parse_ym("2020-06")

FRED_OBSERVATIONS_URL = "https://api.stlouisfed.org/fred/series/observations"


class IngestError(Exception):
    """Base class for data-loading failures."""


class MissingFileError(IngestError):
    pass


class MalformedRowError(IngestError):
    def __init__(self, path: str, line_no: int, detail: str):
        super().__init__(f"{path}:{line_no}: {detail}")
        self.line_no = line_no


class GapInSeriesError(IngestError):
    def __init__(self, name: str, month: int):
        super().__init__(f"series {name}: missing month {format_ym(month)}")
        self.month = month


class NonFiniteValueError(IngestError):
    def __init__(self, name: str, month: int):
        super().__init__(f"series {name}: non-finite value at {format_ym(month)}")
        self.month = month


class MisalignedSeriesError(IngestError):
    pass


class SeriesMissingError(IngestError):
    def __init__(self, name: str):
        super().__init__(f"required series not provided: {name}")
        self.name = name


class CoverageGapError(IngestError):
    def __init__(self, name: str, month: int):
        super().__init__(f"series {name} does not cover {format_ym(month)}")
        self.name = name
        self.month = month


class HttpError(IngestError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"HTTP {status} {detail}".strip())
        self.status = status


class AuthError(IngestError):
    pass


class EmptyResponseError(IngestError):
    pass


@dataclass(frozen=True)
class MonthlySeries:
    """One named economic index as consecutive monthly observations.

    ``months`` are month indices (see :mod:`cyclecast.months`), strictly
    increasing with no gaps; ``values`` are finite float64 of equal length.
    """

    name: str
    unit: str
    months: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        months = np.asarray(self.months, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "months", months)
        object.__setattr__(self, "values", values)
        if months.shape != values.shape or months.ndim != 1:
            raise ValueError("months and values must be equal-length vectors")
        if len(months) > 0:
            steps = np.diff(months)
            if np.any(steps < 1):
                raise ValueError(f"series {self.name}: months not strictly increasing")
            gap = np.nonzero(steps > 1)[0]
            if gap.size:
                raise GapInSeriesError(self.name, int(months[gap[0]] + 1))
        bad = np.nonzero(~np.isfinite(values))[0]
        if bad.size:
            raise NonFiniteValueError(self.name, int(months[bad[0]]))

    def __len__(self) -> int:
        return len(self.months)

    @property
    def start(self) -> int:
        return int(self.months[0])

    @property
    def end(self) -> int:
        return int(self.months[-1])

    def slice(self, start: int, end: int) -> "MonthlySeries":
        """Restrict to months in [start, end] inclusive; raises on shortfall."""
        if start < self.start or end > self.end:
            missing = start if start < self.start else end
            raise CoverageGapError(self.name, missing)
        lo = start - self.start
        hi = end - self.start + 1
        return MonthlySeries(self.name, self.unit, self.months[lo:hi], self.values[lo:hi])


@dataclass(frozen=True)
class RecessionCalendar:
    """Dated recession spans, start-inclusive and end-exclusive."""

    spans: tuple

    def __post_init__(self):
        spans = tuple((int(s), int(e)) for s, e in self.spans)
        object.__setattr__(self, "spans", spans)
        for s, e in spans:
            if e - s < 1:
                raise ValueError(f"span shorter than one month: {format_ym(s)}")
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ValueError("recession spans overlap or are unsorted")

    def labels(self, months: np.ndarray) -> np.ndarray:
        """Binary label per month: 1 inside any span, else 0."""
        months = np.asarray(months)
        out = np.zeros(len(months), dtype=np.int64)
        for s, e in self.spans:
            out |= (months >= s) & (months < e)
        return out


def default_us_recessions() -> RecessionCalendar:
    """The nine dated U.S. recessions overlapping 1959-01..2020-06."""
    raw = [
        ("1960-04", "1961-02"),
        ("1969-12", "1970-11"),
        ("1973-11", "1975-03"),
        ("1980-01", "1980-07"),
        ("1981-07", "1982-11"),
        ("1990-07", "1991-03"),
        ("2001-03", "2001-11"),
        ("2007-12", "2009-06"),
        ("2020-02", "2020-07"),
    ]
    return RecessionCalendar(tuple((parse_ym(s), parse_ym(e)) for s, e in raw))


@dataclass(frozen=True)
class MonthlyPanel:
    """Aligned monthly values for all 14 series plus recession labels."""

    months: np.ndarray
    columns: dict = field(repr=False)
    labels: np.ndarray

    def __post_init__(self):
        months = np.asarray(self.months, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "months", months)
        object.__setattr__(self, "labels", labels)
        if labels.shape != months.shape:
            raise ValueError("labels must align with months")
        for name, col in self.columns.items():
            if len(col) != len(months):
                raise ValueError(f"column {name} length mismatch")

    def __len__(self) -> int:
        return len(self.months)

    @property
    def series_names(self) -> tuple:
        return tuple(self.columns.keys())

    def matrix(self) -> np.ndarray:
        """(n_months, 14) value matrix in canonical column order."""
        return np.column_stack([self.columns[n] for n in self.series_names])


def load_series_csv(path: str, name: str, unit: str = "") -> MonthlySeries:
    """Parse a two-column ``DATE,VALUE`` CSV into a validated series.

    DATE must be ``YYYY-MM-01``; VALUE must parse as a finite decimal.
    FRED's missing-value marker ``.`` is rejected as a malformed row rather
    than imputed.
    """
    if not os.path.isfile(path):
        raise MissingFileError(f"no such file: {path}")
    months = []
    values = []
    with open(path, "r", encoding="utf-8-sig", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MalformedRowError(path, 1, "empty file")
    header = [c.strip().upper() for c in lines[0].split(",")]
    if header[:2] != ["DATE", "VALUE"]:
        raise MalformedRowError(path, 1, f"expected header DATE,VALUE, got {lines[0]!r}")
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 2:
            raise MalformedRowError(path, line_no, f"expected 2 cells, got {len(cells)}")
        try:
            month = parse_date_month(cells[0])
        except ValueError as exc:
            raise MalformedRowError(path, line_no, str(exc)) from exc
        try:
            value = float(cells[1])
        except ValueError as exc:
            raise MalformedRowError(path, line_no, f"bad value {cells[1]!r}") from exc
        months.append(month)
        values.append(value)
    if not months:
        raise MalformedRowError(path, 2, "no observations")
    series = MonthlySeries(name, unit or SERIES_UNITS.get(name, ""), np.array(months), np.array(values))
    return series


def fetch_series_fred(
    series_id: str,
    api_key: str,
    start: int,
    end: int,
    cache_dir: str = "cache",
    http_get=None,
) -> MonthlySeries:
    """Fetch one monthly series from the FRED observations endpoint.

    The raw JSON response is cached at ``<cache_dir>/<series_id>.json`` so a
    later offline run can rebuild the same series. ``http_get`` may inject a
    transport for testing; it must accept ``(url, params)`` and return
    ``(status_code, parsed_json)``.
    """
    if not api_key:
        raise AuthError("empty FRED api key")
    if end < start:
        raise EmptyResponseError(f"end {format_ym(end)} before start {format_ym(start)}")
    if http_get is None:
        http_get = _requests_get
    params = {
        "series_id": series_id,
        "api_key": api_key,
        "file_type": "json",
        "frequency": "m",
        "observation_start": f"{format_ym(start)}-01",
        "observation_end": f"{format_ym(end)}-01",
    }
    status, payload = http_get(FRED_OBSERVATIONS_URL, params)
    if status in (400, 401, 403):
        raise AuthError(f"FRED rejected the request (HTTP {status}): {payload}")
    if status != 200:
        raise HttpError(status)
    observations = payload.get("observations", [])
    if not observations:
        raise EmptyResponseError(f"no observations for {series_id}")
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        with open(os.path.join(cache_dir, f"{series_id}.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
    months = []
    values = []
    for obs in observations:
        month = parse_date_month(obs["date"])
        raw = obs["value"]
        if raw == ".":
            raise NonFiniteValueError(series_id, month)
        months.append(month)
        values.append(float(raw))
    return MonthlySeries(series_id, SERIES_UNITS.get(series_id, ""), np.array(months), np.array(values))


def _requests_get(url, params):
    import requests

    resp = requests.get(url, params=params, timeout=60)
    try:
        payload = resp.json()
    except ValueError:
        payload = {}
    return resp.status_code, payload


def compute_term_spread(gs10: MonthlySeries, tb3ms: MonthlySeries) -> MonthlySeries:
    """10-year yield minus 3-month rate, month by month, as series T10Y3M."""
    if len(gs10) != len(tb3ms) or gs10.start != tb3ms.start:
        raise MisalignedSeriesError(
            f"GS10 spans {format_ym(gs10.start)}..{format_ym(gs10.end)}, "
            f"TB3MS spans {format_ym(tb3ms.start)}..{format_ym(tb3ms.end)}"
        )
    return MonthlySeries("T10Y3M", SERIES_UNITS["T10Y3M"], gs10.months.copy(), gs10.values - tb3ms.values)


def build_panel(
    series: list,
    calendar: RecessionCalendar,
    start: int = CANONICAL_START,
    end: int = CANONICAL_END,
) -> MonthlyPanel:
    """Align the 14 series on [start, end] and attach recession labels.

    All of ``SERIES_NAMES`` must be present and cover the range; labels follow
    the start-inclusive/end-exclusive span convention with 1 = recession.
    """
    by_name = {s.name: s for s in series}
    for name in SERIES_NAMES:
        if name not in by_name:
            raise SeriesMissingError(name)
    extra = set(by_name) - set(SERIES_NAMES)
    if extra:
        raise SeriesMissingError(f"unexpected series {sorted(extra)}; expected exactly {len(SERIES_NAMES)}")
    months = np.arange(start, end + 1, dtype=np.int64)
    columns = {}
    for name in SERIES_NAMES:
        columns[name] = by_name[name].slice(start, end).values
    labels = calendar.labels(months)
    return MonthlyPanel(months=months, columns=columns, labels=labels)


def load_panel_dir(
    data_dir: str,
    calendar: RecessionCalendar | None = None,
    start: int = CANONICAL_START,
    end: int = CANONICAL_END,
) -> MonthlyPanel:
    """Load ``<data_dir>/<NAME>.csv`` for all 14 series and build the panel."""
    calendar = calendar or default_us_recessions()
    series = [load_series_csv(os.path.join(data_dir, f"{name}.csv"), name) for name in SERIES_NAMES]
    return build_panel(series, calendar, start, end)
