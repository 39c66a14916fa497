"""Reading and writing count CSVs, smoothing, and phase partitioning."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from pathlib import Path

import numpy as np

from .exceptions import InvalidDataError
from .model import CountSeries

__all__ = ["load_counts", "save_counts", "format_counts", "rolling_smooth", "split_phases", "phase_bounds"]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_count(text: str, line: int, column: int, allow_real: bool):
    try:
        value = float(text)
    except ValueError:
        raise InvalidDataError(f"line {line}, column {column}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise InvalidDataError(f"line {line}, column {column}: non-finite count {text!r}")
    if value < 0:
        raise InvalidDataError(f"line {line}, column {column}: negative count {text}")
    if not allow_real and value != int(value):
        raise InvalidDataError(f"line {line}, column {column}: non-integer count {text}")
    return value


def load_counts(path, allow_real: bool = False, columns=None) -> CountSeries:
    """Read a count CSV.

    Two layouts are accepted: a header ``date,dim_1,...,dim_K`` with ISO
    dates on consecutive days, or a headerless grid with one column per
    dimension. A header without a ``date`` column supplies labels only.
    Rows are in time order; gaps, duplicates and out-of-order dates are
    errors, as are negative, non-integer (unless ``allow_real``) and ragged
    rows.

    Parameters
    ----------
    columns : sequence of str or int, optional
        Subset of dimensions to keep, by label or 0-based position.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if row and any(c.strip() for c in row)]
    if not rows:
        raise InvalidDataError(f"{path}: file is empty")
    first_line, first = rows[0]
    has_header = not all(_is_number(c) for c in first)
    labels = None
    has_dates = False
    if has_header:
        header = [c.strip() for c in first]
        has_dates = header[0].lower() == "date"
        labels = header[1:] if has_dates else header
        rows = rows[1:]
        if not rows:
            raise InvalidDataError(f"{path}: header but no data rows")
    width = len(first)
    dates = []
    values = []
    for line, row in rows:
        if len(row) != width:
            raise InvalidDataError(f"{path}: line {line} has {len(row)} fields, expected {width}")
        cells = [c.strip() for c in row]
        if has_dates:
            try:
                dates.append((line, dt.date.fromisoformat(cells[0])))
            except ValueError:
                raise InvalidDataError(f"{path}: line {line}: bad ISO date {cells[0]!r}") from None
            cells = cells[1:]
        values.append([_parse_count(c, line, j + 1, allow_real) for j, c in enumerate(cells)])
    start = None
    if has_dates:
        for (line, day), (_, prev) in zip(dates[1:], dates[:-1]):
            if day == prev:
                raise InvalidDataError(f"{path}: line {line}: duplicate date {day}")
            if day < prev:
                raise InvalidDataError(f"{path}: line {line}: date {day} is out of order")
            if (day - prev).days != 1:
                raise InvalidDataError(f"{path}: line {line}: missing dates between {prev} and {day}")
        start = dates[0][1]
    counts = np.asarray(values, dtype=float).T
    if columns is not None:
        idx = []
        for c in columns:
            if isinstance(c, int):
                idx.append(c)
            elif labels is not None and c in labels:
                idx.append(labels.index(c))
            else:
                raise InvalidDataError(f"{path}: unknown column {c!r}")
        counts = counts[idx]
        labels = [labels[i] for i in idx] if labels is not None else None
    return CountSeries(counts, labels, start, allow_real)


def _fmt(value, real: bool) -> str:
    if real:
        return repr(float(value))
    return str(int(value))


def format_counts(series: CountSeries) -> str:
    """Canonical CSV text for ``series`` (see :func:`save_counts`)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    real = series.allow_real and series.counts.dtype.kind == "f"
    dates = series.dates()
    if dates is not None:
        writer.writerow(["date", *series.dimension_labels()])
    elif series.labels is not None:
        writer.writerow(list(series.labels))
    for t in range(series.T):
        row = [_fmt(v, real) for v in series.counts[:, t]]
        if dates is not None:
            row.insert(0, dates[t].isoformat())
        writer.writerow(row)
    return buf.getvalue()


def save_counts(series: CountSeries, path) -> None:
    """Write ``series`` in canonical form.

    Dated series get a ``date,<labels>`` header; undated series with labels
    get a label header; otherwise the file is a bare grid. Loading a
    canonical file and saving it again reproduces it byte for byte.
    """
    from .io import atomic_write_text

    atomic_write_text(path, format_counts(series))


def rolling_smooth(series: CountSeries, window: int = 7, round_counts: bool = True) -> CountSeries:
    """Centred moving average with shortened windows at the edges.

    Day ``t`` averages days ``t - (window-1)//2`` to ``t + window//2`` that
    exist. With ``round_counts`` the averages are rounded half-up to
    integers; otherwise a real-valued series is returned.
    """
    window = int(window)
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    if window > series.T:
        raise ValueError(f"window {window} is longer than the series ({series.T} days)")
    if window == 1:
        return series
    left = (window - 1) // 2
    right = window // 2
    T = series.T
    lo = np.maximum(np.arange(T) - left, 0)
    hi = np.minimum(np.arange(T) + right, T - 1) + 1
    n = hi - lo
    y = series.counts
    if round_counts and y.dtype.kind in "iu":
        csum = np.concatenate([np.zeros((y.shape[0], 1), dtype=np.int64), np.cumsum(y, axis=1, dtype=np.int64)], axis=1)
        sums = csum[:, hi] - csum[:, lo]
        # floor(sum/n + 1/2) in exact integer arithmetic
        out = (2 * sums + n) // (2 * n)
        return CountSeries(out, series.labels, series.start_date)
    yf = np.asarray(y, dtype=float)
    csum = np.concatenate([np.zeros((y.shape[0], 1)), np.cumsum(yf, axis=1)], axis=1)
    means = (csum[:, hi] - csum[:, lo]) / n
    if round_counts:
        return CountSeries(np.floor(means + 0.5), series.labels, series.start_date)
    return CountSeries(means, series.labels, series.start_date, allow_real=True)


def phase_bounds(T: int, boundaries) -> list:
    """``(start, stop)`` column ranges for 1-based phase-start day numbers."""
    b = [int(x) for x in (boundaries or ())]
    if any(not (1 < x <= T) for x in b):
        raise ValueError(f"phase boundaries must be day numbers in 2..{T}, got {b}")
    if any(y <= x for x, y in zip(b, b[1:])):
        raise ValueError(f"phase boundaries must be strictly increasing, got {b}")
    starts = [0] + [x - 1 for x in b]
    stops = starts[1:] + [T]
    return list(zip(starts, stops))


def split_phases(series: CountSeries, boundaries=()) -> list:
    """Split into contiguous phases.

    ``boundaries`` are 1-based day numbers; each one is the first day of a
    new phase, so ``(10,)`` on 20 days gives phases of 9 and 11 days.
    Concatenating the phases reproduces the input.
    """
    return [series.slice(a, b) for a, b in phase_bounds(series.T, boundaries)]
