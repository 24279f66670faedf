"""Year-month arithmetic.

Months are represented internally as integer indices ``year * 12 + (month - 1)``
so that consecutive calendar months differ by exactly 1 and ranges can be
handled with plain integer arithmetic. The string form is ``YYYY-MM``.
"""

from __future__ import annotations

import re

_YM_RE = re.compile(r"^(\d{4})-(\d{2})$")
_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")


def ym(year: int, month: int) -> int:
    """Month index for a (year, month) pair; month is 1-based."""
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range: {month}")
    return year * 12 + (month - 1)


def parse_ym(text: str) -> int:
    """Parse 'YYYY-MM' into a month index."""
    m = _YM_RE.match(text.strip())
    if m is None:
        raise ValueError(f"not a YYYY-MM month: {text!r}")
    return ym(int(m.group(1)), int(m.group(2)))


def parse_date_month(text: str) -> int:
    """Parse a 'YYYY-MM-DD' date (day must be 01) into a month index."""
    m = _DATE_RE.match(text.strip())
    if m is None:
        raise ValueError(f"not a YYYY-MM-DD date: {text!r}")
    if m.group(3) != "01":
        raise ValueError(f"monthly observation must fall on day 01: {text!r}")
    return ym(int(m.group(1)), int(m.group(2)))


def format_ym(index: int) -> str:
    """Render a month index as 'YYYY-MM'."""
    year, month0 = divmod(index, 12)
    return f"{year:04d}-{month0 + 1:02d}"


def month_range(start: int, end: int) -> range:
    """Inclusive range of month indices from start through end."""
    return range(start, end + 1)
