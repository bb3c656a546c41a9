"""Time-series container, linear detrending, MPC simulation and CSV I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class CsvFormatError(ValueError):
    """Raised when a ``t,value`` CSV file cannot be parsed."""

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Regularly sampled real-valued series starting at integer time ``t0``."""

    values: np.ndarray
    t0: int = 1
    name: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size == 0:
            raise ValueError("time series must be non-empty")
        if not np.all(np.isfinite(values)):
            raise ValueError("time series values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t0", int(self.t0))

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.t0 == other.t0
            and self.name == other.name
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def t(self) -> np.ndarray:
        """Integer time index of every observation."""
        return np.arange(self.t0, self.t0 + len(self), dtype=float)

    @property
    def t_end(self) -> int:
        return self.t0 + len(self) - 1

    def with_values(self, values, name: str | None = None) -> TimeSeries:
        return TimeSeries(values, self.t0, self.name if name is None else name)


@dataclass(frozen=True)
class SinusoidModel:
    """``amplitude * sin(2*pi*t/period + phase)``."""

    amplitude: float
    period: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if not self.amplitude >= 0:
            raise ValueError(f"amplitude must be nonnegative, got {self.amplitude}")
        object.__setattr__(self, "phase", float(self.phase) % TWO_PI)

    @property
    def frequency(self) -> float:
        return 1.0 / self.period

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.sin(TWO_PI * t / self.period + self.phase)


@dataclass(frozen=True)
class TrendLine:
    intercept: float
    slope: float

    def __post_init__(self):
        if not (math.isfinite(self.intercept) and math.isfinite(self.slope)):
            raise ValueError("trend coefficients must be finite")

    def __call__(self, t) -> np.ndarray:
        return self.intercept + self.slope * np.asarray(t, dtype=float)


def simulate_mpc(
    components: Sequence[SinusoidModel],
    noise_sd: float,
    n: int,
    seed: int,
    t0: int = 1,
    name: str = "simulated",
) -> TimeSeries:
    """Sum of sinusoids plus i.i.d. Gaussian noise, sampled at t0..t0+n-1.

    Parameters
    ----------
    components : sequence of SinusoidModel
        Deterministic periodic components (may be empty).
    noise_sd : float
        Standard deviation of the additive noise. 0 gives a noiseless series.
    n : int
        Number of observations.
    seed : int
        Seed for ``numpy.random.default_rng``; output is bit-reproducible.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not noise_sd >= 0:
        raise ValueError(f"noise_sd must be nonnegative, got {noise_sd}")
    t = np.arange(t0, t0 + n, dtype=float)
    x = np.zeros(n)
    for comp in components:
        if not comp.period > 0:
            raise ValueError(f"period must be positive, got {comp.period}")
        x += comp(t)
    if noise_sd > 0:
        rng = np.random.default_rng(seed)
        x += rng.normal(0.0, noise_sd, size=n)
    return TimeSeries(x, t0, name)


def fit_trend(series: TimeSeries) -> TrendLine:
    """Ordinary least-squares line through ``(t, value)``."""
    if len(series) < 2:
        raise ValueError("need at least 2 observations to fit a trend")
    t = series.t
    tc = t - t.mean()
    slope = float(np.dot(tc, series.values - series.values.mean()) / np.dot(tc, tc))
    intercept = float(series.values.mean() - slope * t.mean())
    return TrendLine(intercept, slope)


def detrend_linear(series: TimeSeries) -> tuple[TimeSeries, TrendLine]:
    """Remove the OLS line; returns the residual series and the removed line."""
    trend = fit_trend(series)
    resid = series.values - trend(series.t)
    return series.with_values(resid), trend


def read_csv(path, name: str | None = None) -> TimeSeries:
    """Read a ``t,value`` CSV file with contiguous integer ``t``."""
    path = Path(path)
    ts: list[int] = []
    values: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CsvFormatError(path, 1, "empty file")
        if [h.strip() for h in header] != ["t", "value"]:
            raise CsvFormatError(path, 1, f"expected header 't,value', got {','.join(header)!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise CsvFormatError(path, line, f"expected 2 fields, got {len(row)}")
            try:
                t = int(row[0])
            except ValueError:
                raise CsvFormatError(path, line, f"non-integer t {row[0]!r}") from None
            try:
                v = float(row[1])
            except ValueError:
                raise CsvFormatError(path, line, f"non-numeric value {row[1]!r}") from None
            if not math.isfinite(v):
                raise CsvFormatError(path, line, f"non-finite value {row[1]!r}")
            if ts and t != ts[-1] + 1:
                raise CsvFormatError(path, line, f"t must increase by 1 (got {t} after {ts[-1]})")
            ts.append(t)
            values.append(v)
    if not values:
        raise CsvFormatError(path, 2, "no observations")
    return TimeSeries(values, ts[0], path.stem if name is None else name)


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(series: TimeSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("t,value\n")
        for t, v in zip(range(series.t0, series.t_end + 1), series.values):
            fh.write(f"{t},{format_float(v)}\n")


def milk_path() -> Path:
    """Location of the bundled US monthly milk production series (1962-1975)."""
    return Path(str(resources.files("pcdecomp") / "data" / "milk.csv"))


def load_milk() -> TimeSeries:
    return read_csv(milk_path(), name="milk")
