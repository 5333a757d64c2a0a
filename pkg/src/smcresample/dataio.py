"""Price ingestion, log-returns and CSV output.

Input prices are ``date,close`` CSV files. Every CSV written here uses LF
line endings and prints floats with 9 significant digits (``%.9g``), so
two runs with the same seeds produce byte-identical files.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .engine import FilterOutput
from .errors import InsufficientData, ParseError, WriteError
from .models import SvParams, sv_simulate
from .rng import Rng

FILTER_COLUMNS = ("t", "ess", "weight_variance", "unique_ancestors", "resampled", "mean_estimate")
TIMING_COLUMNS = ("scheme", "n_particles", "mean_seconds_per_call", "stddev")
SAMPLE_PRICES = "synthetic_prices_2015.csv"


@dataclass
class PriceSeries:
    dates: list
    closes: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)


def load_prices_csv(path) -> PriceSeries:
    """Read and validate a ``date,close`` file.

    Dates must be ISO-8601 and strictly increasing; closes finite and
    positive. Errors carry the 1-based line number of the offending row.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot open {path}: {exc.strerror or exc}") from None
    dates, closes = [], []
    prev = None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "close"]:
            raise ParseError("expected header 'date,close'", row=1)
        for row in reader:
            line = reader.line_num
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", row=line)
            raw_date, raw_close = row[0].strip(), row[1].strip()
            try:
                day = dt.date.fromisoformat(raw_date)
            except ValueError:
                raise ParseError(f"bad date {raw_date!r}", row=line) from None
            try:
                close = float(raw_close)
            except ValueError:
                raise ParseError(f"bad close {raw_close!r}", row=line) from None
            if not math.isfinite(close) or close <= 0.0:
                raise ParseError(f"close must be positive, got {raw_close}", row=line)
            if prev is not None and day <= prev:
                raise ParseError(f"date {raw_date} does not follow {prev.isoformat()}", row=line)
            prev = day
            dates.append(day.isoformat())
            closes.append(close)
    return PriceSeries(dates, np.array(closes, dtype=np.float64))


def log_returns(prices) -> np.ndarray:
    """``y_t = ln(p_t / p_{t-1})``; one element shorter than the input."""
    closes = prices.closes if isinstance(prices, PriceSeries) else np.asarray(prices, dtype=np.float64)
    if closes.shape[0] < 2:
        raise InsufficientData("need at least two prices for a return")
    return np.log(closes[1:] / closes[:-1])


def sample_prices_path():
    """Path of the bundled synthetic price file (simulated, not market data)."""
    return resources.files("smcresample") / "data" / SAMPLE_PRICES


def synthetic_prices(
    params: SvParams,
    n_days: int,
    rng: Rng,
    start: str = "2015-01-02",
    first_close: float = 1500.0,
) -> PriceSeries:
    """Closing prices whose log-returns follow the SV model, on weekdays from ``start``."""
    _, ys = sv_simulate(params, n_days - 1, rng)
    closes = first_close * np.exp(np.concatenate([[0.0], np.cumsum(ys)]))
    day = dt.date.fromisoformat(start)
    dates = []
    while len(dates) < n_days:
        if day.weekday() < 5:
            dates.append(day.isoformat())
        day += dt.timedelta(days=1)
    return PriceSeries(dates, closes)


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def write_table(path, columns, rows) -> None:
    """Write ``rows`` (iterables matching ``columns``) as CSV."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc.strerror or exc}") from None


def read_table(path):
    """Inverse of :func:`write_table`: ``(columns, rows)`` with numeric cells parsed."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        columns = tuple(next(reader))
        rows = [tuple(_parse_cell(c) for c in row) for row in reader]
    return columns, rows


def _parse_cell(cell: str):
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell


def filter_rows(output: FilterOutput):
    for d in output.diagnostics:
        yield (d.t, d.ess, d.weight_variance, d.unique_ancestors, d.resampled, d.mean_estimate)


def write_diagnostics_csv(output, path) -> None:
    """Write a filter run or a bench report.

    A :class:`FilterOutput` becomes one row per step with columns
    :data:`FILTER_COLUMNS`. Anything else must expose ``columns`` and
    ``rows()`` (the bench reports do); timing reports use
    :data:`TIMING_COLUMNS`.
    """
    if isinstance(output, FilterOutput):
        write_table(path, FILTER_COLUMNS, filter_rows(output))
    else:
        write_table(path, output.columns, output.rows())


def write_prices_csv(prices: PriceSeries, path) -> None:
    write_table(path, ("date", "close"), zip(prices.dates, prices.closes))


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
