"""Kolmogorov-Zurbenko Fourier transform (KZFT) band-pass filter.

The filter is ``k`` passes of a length-``m`` moving average applied to the
series demodulated at the center frequency ``nu``.  Its impulse response is the
k-fold self-convolution of the uniform kernel, and the amplitude response at
offset ``g`` from the center is ``|sin(pi m g) / (m sin(pi g))|**k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .series import TimeSeries

BOUNDARY_MODES = ("renormalize", "trim")


class UnseparableFrequenciesError(ValueError):
    """No admissible window separates two frequencies (or a frequency from its image)."""

    def __init__(self, freq: float, other: float, message: str):
        self.pair = (freq, other)
        super().__init__(message)


@dataclass(frozen=True)
class KzftParams:
    window: int
    iterations: int
    center: float

    def __post_init__(self):
        _check_window(self.window, self.iterations)
        if not 0 < self.center <= 0.5:
            raise ValueError(f"center frequency must lie in (0, 0.5], got {self.center}")

    @property
    def support(self) -> int:
        return self.iterations * (self.window - 1) + 1


@dataclass(frozen=True, eq=False)
class FilteredComponent:
    series: TimeSeries
    params: KzftParams
    source_name: str = ""
    boundary: str = "renormalize"

    def manifest(self) -> dict:
        return {
            "window": self.params.window,
            "iterations": self.params.iterations,
            "center": self.params.center,
            "boundary": self.boundary,
            "source": self.source_name,
            "t0": self.series.t0,
            "length": len(self.series),
        }

    def write_manifest(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _check_window(m: int, k: int) -> None:
    if int(m) != m or m < 3 or m % 2 == 0:
        raise ValueError(f"window must be an odd integer >= 3, got {m}")
    if int(k) != k or k < 1:
        raise ValueError(f"iterations must be a positive integer, got {k}")


def window_from_periods(periods_per_window: float, period: float) -> int:
    """Nearest odd window length covering ``periods_per_window`` periods (ties round up)."""
    if periods_per_window <= 0 or period <= 0:
        raise ValueError("periods_per_window and period must be positive")
    x = periods_per_window * period
    return max(3, 2 * math.floor(x / 2) + 1)


def kzft_coefficients(m: int, k: int) -> np.ndarray:
    """Coefficients of ``((z^-(m-1)/2 + ... + z^(m-1)/2) / m) ** k``.

    Computed as an integer k-fold convolution of ``ones(m)`` followed by one
    division by ``m**k``, so each entry is the correctly rounded rational.
    """
    _check_window(m, k)
    counts = np.ones(1, dtype=object)
    box = np.ones(m, dtype=object)
    for _ in range(k):
        counts = np.convolve(counts, box)
    denom = m**k
    return np.array([int(c) / denom for c in counts], dtype=float)


def kz_response(m: int, k: int, g) -> np.ndarray:
    """Signed frequency response of the k-pass moving average at offset ``g``."""
    g = np.asarray(g, dtype=float)
    s = np.sin(np.pi * g)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sin(np.pi * m * g) / (m * s)
    # removable singularity at integer g; odd m makes the limit +1
    r = np.where(np.abs(s) < 1e-12, 1.0, r)
    return r**k


def transfer_gain(params: KzftParams, f) -> np.ndarray | float:
    """Amplitude gain ``T(f - nu)`` of the filter at frequency ``f``."""
    out = np.abs(kz_response(params.window, params.iterations, np.asarray(f, dtype=float) - params.center))
    return float(out) if out.ndim == 0 else out


def half_power_offset(m: int, k: int) -> float:
    """Offset from the center at which the amplitude gain falls to 1/sqrt(2)."""
    target = 2.0 ** (-0.5)
    return brentq(lambda g: float(kz_response(m, k, g)) - target, 1e-12, 1.0 / m)


def kzft_apply(series: TimeSeries, params: KzftParams, boundary: str = "renormalize") -> FilteredComponent:
    """Band-pass ``series`` around ``params.center``.

    Returns the real reconstruction ``2 Re Z(t)`` where
    ``Z(t) = sum_s a_s x(t+s) exp(-2 pi i nu s)``.  With ``boundary="renormalize"``
    the output keeps the input length and truncated kernels near the ends are
    rescaled to unit sum; ``boundary="trim"`` drops the edge points that lack
    full support.
    """
    if boundary not in BOUNDARY_MODES:
        raise ValueError(f"boundary must be one of {BOUNDARY_MODES}, got {boundary!r}")
    n = len(series)
    L = params.support
    if n < L:
        raise ValueError(f"series of length {n} is shorter than the filter support {L}")
    half = (L - 1) // 2
    a = kzft_coefficients(params.window, params.iterations)
    s = np.arange(-half, half + 1)
    w = a * np.exp(-2j * np.pi * params.center * s)
    x = series.values
    num = np.convolve(x, w[::-1], mode="same")
    if boundary == "renormalize":
        den = np.convolve(np.ones(n), a[::-1], mode="same")
        y = 2.0 * (num / den).real
        out = series.with_values(y, name=f"{series.name}@{params.center:.6g}")
    else:
        y = 2.0 * num[half : n - half].real
        out = TimeSeries(y, series.t0 + half, f"{series.name}@{params.center:.6g}")
    return FilteredComponent(out, params, series.name, boundary)


def _circular_distance(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def choose_bandwidth(
    frequencies: Sequence[float],
    k: int = 3,
    max_sidelobe: float = 0.05,
    max_len: int | None = None,
) -> list[KzftParams]:
    """Smallest odd window per center frequency that isolates it.

    For each center the window must (a) attenuate every other center and the
    center's own conjugate image ``2 nu`` to at most ``max_sidelobe`` and
    (b) keep the full half-power bandwidth within half the smallest gap among
    the centers and their conjugate images.  ``max_len`` bounds the filter
    support ``k(m-1)+1``.

    Raises
    ------
    UnseparableFrequenciesError
        When no admissible window exists for some center.
    """
    freqs = [float(f) for f in frequencies]
    if not freqs:
        raise ValueError("need at least one frequency")
    if len(set(freqs)) != len(freqs):
        raise ValueError(f"frequencies must be distinct, got {freqs}")
    for f in freqs:
        if not 0 < f <= 0.5:
            raise ValueError(f"frequencies must lie in (0, 0.5], got {f}")

    # (distance, frequency, competitor) for every pair and every conjugate image
    gaps = [(_circular_distance(f, -f), f, -f) for f in freqs]
    gaps += [
        (abs(f - g), f, g) for i, f in enumerate(freqs) for g in freqs[i + 1 :]
    ]
    min_gap, gap_f, gap_g = min(gaps)
    if min_gap <= 0:
        raise UnseparableFrequenciesError(
            gap_f, abs(gap_g), f"frequency {gap_f:g} coincides with its conjugate image {abs(gap_g):g}"
        )

    m_max = (max_len - 1) // k + 1 if max_len is not None else 20001
    out = []
    for f in freqs:
        stops = [g for g in freqs if g != f] + [-f]
        m = 3
        chosen = None
        while m <= m_max:
            if (
                all(float(abs(kz_response(m, k, g - f))) <= max_sidelobe for g in stops)
                and 2.0 * half_power_offset(m, k) <= 0.5 * min_gap
            ):
                chosen = m
                break
            m += 2
        if chosen is None:
            d, other = min((_circular_distance(f, g), g) for g in stops)
            what = f"its conjugate image {-other:g}" if other < 0 else f"{other:g}"
            bound = f" within support limit {max_len}" if max_len is not None else ""
            raise UnseparableFrequenciesError(
                f,
                abs(other),
                f"cannot separate frequency {f:g} from {what}{bound} (gap {d:g})",
            )
        out.append(KzftParams(chosen, k, f))
    return out


def params_dict(params: KzftParams) -> dict:
    return asdict(params)
