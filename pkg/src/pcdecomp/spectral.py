"""Raw periodogram and peak picking.

Ordinates use the ``(1/n) |sum_t x_t exp(-2 pi i f t)|^2`` normalization at the
Fourier frequencies ``j/n``, ``j = 1..n//2``; a unit sine at a Fourier
frequency therefore peaks at ``n/4``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import TimeSeries, format_float

# ordinates below this fraction of the largest one are rounding noise
_POWER_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Periodogram:
    freqs: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        power = np.asarray(self.power, dtype=float)
        if freqs.shape != power.shape or freqs.ndim != 1:
            raise ValueError("freqs and power must be 1-D and of equal length")
        if np.any(np.diff(freqs) <= 0) or freqs[0] <= 0 or freqs[-1] > 0.5:
            raise ValueError("freqs must be strictly increasing within (0, 0.5]")
        if np.any(power < 0) or not np.all(np.isfinite(power)):
            raise ValueError("power must be nonnegative and finite")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "power", power)

    def __len__(self):
        return self.freqs.size


def periodogram(series: TimeSeries) -> Periodogram:
    x = series.values
    n = x.size
    if n < 4:
        raise ValueError(f"periodogram needs at least 4 observations, got {n}")
    # shifting the time origin only rotates the phase, so |fft|^2 is unaffected
    dft = np.fft.rfft(x)
    j = np.arange(1, n // 2 + 1)
    power = np.abs(dft[j]) ** 2 / n
    return Periodogram(j / n, power)


def find_peaks(
    pg: Periodogram, max_peaks: int = 5, min_prominence_ratio: float = 10.0
) -> list[tuple[float, float]]:
    """Local maxima of ``pg`` at least ``min_prominence_ratio`` times the median.

    Returns ``(frequency, power)`` pairs sorted by descending power, ties broken
    by lower frequency, truncated to ``max_peaks``.
    """
    p = pg.power
    if p.size == 0 or p.max() <= 0:
        return []
    left = np.concatenate(([-np.inf], p[:-1]))
    right = np.concatenate((p[1:], [-np.inf]))
    is_max = (p >= left) & (p >= right) & ((p > left) | (p > right))
    threshold = max(min_prominence_ratio * float(np.median(p)), _POWER_FLOOR * float(p.max()))
    idx = np.flatnonzero(is_max & (p >= threshold) & (p > 0))
    order = sorted(idx, key=lambda i: (-p[i], pg.freqs[i]))
    return [(float(pg.freqs[i]), float(p[i])) for i in order[:max_peaks]]


def write_periodogram_csv(pg: Periodogram, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("freq,power\n")
        for f, p in zip(pg.freqs, pg.power):
            fh.write(f"{format_float(f)},{format_float(p)}\n")


def read_periodogram_csv(path) -> Periodogram:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Periodogram(data[:, 0], data[:, 1])
