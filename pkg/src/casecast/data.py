"""Loading, validation, normalization and supervised windowing of the
cumulative case/death series.

All types are immutable value objects; every operation is a pure function.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from importlib import resources

import numpy as np

DAY = dt.timedelta(days=1)


class DataError(Exception):
    """Base class for everything the data layer can reject."""


class MissingFileError(DataError):
    pass


class MalformedRowError(DataError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DateOrderError(DataError):
    """Dates out of order or a gap in the daily cadence."""


class NonMonotoneError(DataError):
    """A cumulative channel decreased."""


class WindowError(DataError):
    """Requested date window not covered by the series."""


class ConstantChannelError(DataError):
    """A channel is constant over the fit window; min == max."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Daily cumulative counts: one mandatory channel (cases), one optional
    (deaths). Dates are strictly consecutive calendar days."""

    dates: tuple[dt.date, ...]
    cases: np.ndarray
    deaths: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "cases", _freeze(np.asarray(self.cases, dtype=np.int64)))
        if len(self.dates) != len(self.cases):
            raise DataError("dates and cases length mismatch")
        for a, b in zip(self.dates, self.dates[1:]):
            if b - a != DAY:
                raise DateOrderError(f"dates not consecutive: {a} -> {b}")
        if np.any(np.diff(self.cases) < 0):
            raise NonMonotoneError("cases channel decreases")
        if self.deaths is not None:
            object.__setattr__(self, "deaths", _freeze(np.asarray(self.deaths, dtype=np.int64)))
            if len(self.deaths) != len(self.cases):
                raise DataError("deaths and cases length mismatch")
            if np.any(np.diff(self.deaths) < 0):
                raise NonMonotoneError("deaths channel decreases")

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def start(self) -> dt.date:
        return self.dates[0]

    @property
    def end(self) -> dt.date:
        return self.dates[-1]

    def channels(self, bivariate: bool) -> np.ndarray:
        """Values as an (n, D) float array, D=2 when bivariate."""
        if bivariate:
            if self.deaths is None:
                raise DataError("bivariate view requested but no deaths channel")
            return np.column_stack([self.cases, self.deaths]).astype(float)
        return self.cases.astype(float)[:, None]


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-channel affine map sending the fit window's min to 0 and max to 1.

    Values outside the fitted window may map outside [0, 1]; that is fine and
    expected for later actuals and recursive model outputs.
    """

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mins", _freeze(np.asarray(self.mins, dtype=float)))
        object.__setattr__(self, "maxs", _freeze(np.asarray(self.maxs, dtype=float)))
        if np.any(self.maxs <= self.mins):
            raise ConstantChannelError("max must exceed min for every channel")

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mins) / (self.maxs - self.mins)

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * (self.maxs - self.mins) + self.mins


@dataclass(frozen=True)
class WindowedDataset:
    """Supervised one-step-ahead samples from a normalized series.

    inputs has shape (n_samples, lookback, channels); targets (n_samples, channels).
    Sample k's target equals the first row of sample k+1's input block.
    """

    lookback: int
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "inputs", _freeze(np.asarray(self.inputs, dtype=float)))
        object.__setattr__(self, "targets", _freeze(np.asarray(self.targets, dtype=float)))

    def __len__(self) -> int:
        return len(self.targets)


def bundled_dataset_path() -> str:
    """Path to the snapshot of the Turkey Ministry of Health series shipped
    with the package (2020-03-11 .. 2020-05-08)."""
    return str(resources.files("casecast").joinpath("turkey_covid19.csv"))


def load_csv(path: str) -> TimeSeries:
    """Parse a `date,total_cases,total_deaths` CSV into a TimeSeries.

    Every violation maps to a distinct error: missing file, malformed row
    (with line number), date gap/order, decreasing cumulative value.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError as exc:
        raise MissingFileError(f"no such file: {path}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRowError(1, "empty file")
        if [h.strip() for h in header] != ["date", "total_cases", "total_deaths"]:
            raise MalformedRowError(1, f"unexpected header {header!r}")
        dates: list[dt.date] = []
        cases: list[int] = []
        deaths: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedRowError(lineno, f"expected 3 fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[0].strip())
                c = int(row[1])
                d = int(row[2])
            except ValueError as exc:
                raise MalformedRowError(lineno, str(exc)) from exc
            if c < 0 or d < 0:
                raise MalformedRowError(lineno, "negative count")
            if dates:
                if date <= dates[-1]:
                    raise DateOrderError(f"line {lineno}: date {date} not after {dates[-1]}")
                if date - dates[-1] != DAY:
                    raise DateOrderError(f"line {lineno}: gap between {dates[-1]} and {date}")
                if c < cases[-1] or d < deaths[-1]:
                    raise NonMonotoneError(f"line {lineno}: cumulative value decreases")
            dates.append(date)
            cases.append(c)
            deaths.append(d)
    if not dates:
        raise MalformedRowError(2, "no data rows")
    return TimeSeries(tuple(dates), np.array(cases), np.array(deaths))


def slice_window(ts: TimeSeries, start: dt.date, end: dt.date) -> TimeSeries:
    """Inclusive sub-series by date range. Slices by dates, never by a
    hardcoded count."""
    if start > end:
        raise WindowError(f"start {start} after end {end}")
    if start < ts.start or end > ts.end:
        raise WindowError(
            f"window {start}..{end} outside series range {ts.start}..{ts.end}"
        )
    i = (start - ts.start).days
    j = (end - ts.start).days + 1
    deaths = ts.deaths[i:j] if ts.deaths is not None else None
    return TimeSeries(ts.dates[i:j], ts.cases[i:j], deaths)


def fit_normalizer(ts: TimeSeries, bivariate: bool = False) -> NormalizationSpec:
    """Per-channel min/max over the given (training) window only."""
    if len(ts) < 2:
        raise DataError("need at least 2 observations to fit a normalizer")
    values = ts.channels(bivariate)
    return NormalizationSpec(values.min(axis=0), values.max(axis=0))


def make_windows(values: np.ndarray, lookback: int) -> WindowedDataset:
    """Slide a length-`lookback` window over a normalized (n, D) array,
    pairing each block with the next day's vector."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    n = len(values)
    if lookback < 1:
        raise DataError("lookback must be >= 1")
    if n <= lookback:
        raise DataError(f"series of length {n} too short for lookback {lookback}")
    inputs = np.stack([values[k : k + lookback] for k in range(n - lookback)])
    targets = values[lookback:]
    return WindowedDataset(lookback, inputs, targets)
