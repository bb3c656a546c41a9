import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import direct_periodogram

from pcdecomp import Periodogram, SinusoidModel, TimeSeries, find_peaks, periodogram, simulate_mpc
from pcdecomp.spectral import read_periodogram_csv, write_periodogram_csv


def test_fourier_sine_peak_matches_direct_dft():
    n, j, A = 300, 20, 5.0
    t = np.arange(1, n + 1)
    x = A * np.sin(2 * np.pi * j * t / n)
    pg = periodogram(TimeSeries(x, 1))
    oracle = direct_periodogram(list(x))
    assert np.allclose(pg.power, oracle, rtol=1e-9, atol=1e-9)
    assert pg.freqs[j - 1] == pytest.approx(j / n)
    assert pg.power[j - 1] == pytest.approx(A * A * n / 4, rel=1e-6)  # 1875
    others = np.delete(pg.power, j - 1)
    assert np.all(others < 1e-9)


def test_constant_series_has_no_power():
    pg = periodogram(TimeSeries(np.full(64, 3.7), 1))
    assert np.all(pg.power < 1e-9)


def test_two_sines_two_peaks():
    x = simulate_mpc([SinusoidModel(5, 15), SinusoidModel(10, 50)], 0.0, 300, seed=0)
    pg = periodogram(x)
    oracle = direct_periodogram(list(x.values))
    assert np.allclose(pg.power, oracle, rtol=1e-9, atol=1e-9)
    assert pg.power[20 - 1] == pytest.approx(25 * 300 / 4, rel=1e-6)
    assert pg.power[6 - 1] == pytest.approx(100 * 300 / 4, rel=1e-6)


def test_periodogram_freq_grid_and_t0_invariance():
    x = simulate_mpc([SinusoidModel(2, 7)], 1.0, 51, seed=1)
    pg = periodogram(x)
    assert len(pg) == 25
    assert np.allclose(pg.freqs, np.arange(1, 26) / 51)
    shifted = periodogram(TimeSeries(x.values, t0=-40))
    assert np.allclose(shifted.power, pg.power, rtol=1e-12)


def test_periodogram_rejects_short():
    with pytest.raises(ValueError):
        periodogram(TimeSeries([1.0, 2.0, 3.0], 1))


def _parseval_total(x):
    """DC ordinate + twice interior ordinates + Nyquist (even n)."""
    n = x.size
    pg = periodogram(TimeSeries(x, 1))
    total = n * x.mean() ** 2
    p = pg.power
    if n % 2 == 0:
        total += 2 * p[:-1].sum() + p[-1]
    else:
        total += 2 * p.sum()
    return total


@pytest.mark.parametrize("n", [4, 5, 64, 299, 300])
def test_parseval(rng, n):
    x = rng.normal(size=n) + 0.5
    assert _parseval_total(x) == pytest.approx(float(x @ x), rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-100, 100, allow_nan=False), min_size=4, max_size=60),
    st.floats(0.01, 100),
)
def test_periodogram_scaling(values, c):
    x = np.array(values)
    a = periodogram(TimeSeries(x, 1)).power
    b = periodogram(TimeSeries(c * x, 1)).power
    assert np.allclose(b, c * c * a, rtol=1e-9, atol=1e-9 * max(1.0, c * c * a.max()))


def test_find_peaks_double_pc():
    x = simulate_mpc([SinusoidModel(5, 15), SinusoidModel(10, 50)], 1.0, 300, seed=5)
    peaks = find_peaks(periodogram(x), max_peaks=2, min_prominence_ratio=10)
    assert [round(f, 12) for f, _ in peaks] == [round(1 / 50, 12), round(1 / 15, 12)]


def test_find_peaks_single_sine_one_peak():
    t = np.arange(1, 301)
    x = TimeSeries(4 * np.sin(2 * np.pi * 20 * t / 300), 1)
    peaks = find_peaks(periodogram(x), max_peaks=5, min_prominence_ratio=10)
    assert len(peaks) == 1
    assert peaks[0][0] == pytest.approx(20 / 300)


def test_find_peaks_white_noise_is_usually_empty():
    empty = 0
    for seed in range(20):
        x = simulate_mpc([], 1.0, 300, seed=seed)
        empty += not find_peaks(periodogram(x), 5, 10)
    assert empty >= 15


def test_find_peaks_tie_break_and_truncation():
    pg = Periodogram([0.1, 0.2, 0.3, 0.4, 0.5], [0.0, 5.0, 0.0, 5.0, 0.0])
    assert find_peaks(pg, 1, 0.5) == [(0.2, 5.0)]
    assert find_peaks(pg, 5, 0.5) == [(0.2, 5.0), (0.4, 5.0)]


def test_find_peaks_constant_is_empty():
    assert find_peaks(periodogram(TimeSeries(np.ones(20), 1)), 5, 10) == []


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_find_peaks_scale_invariant(seed, c):
    x = simulate_mpc([SinusoidModel(3, 12)], 2.0, 120, seed=seed)
    a = find_peaks(periodogram(x), 3, 10)
    b = find_peaks(periodogram(TimeSeries(c * x.values, 1)), 3, 10)
    assert [f for f, _ in a] == [f for f, _ in b]


def test_periodogram_csv_roundtrip(tmp_path):
    pg = periodogram(simulate_mpc([SinusoidModel(1, 10)], 1.0, 100, seed=2))
    write_periodogram_csv(pg, tmp_path / "pg.csv")
    assert (tmp_path / "pg.csv").read_text().startswith("freq,power\n")
    back = read_periodogram_csv(tmp_path / "pg.csv")
    assert np.array_equal(back.freqs, pg.freqs) and np.array_equal(back.power, pg.power)


def test_periodogram_type_invariants():
    with pytest.raises(ValueError):
        Periodogram([0.2, 0.1], [1.0, 1.0])
    with pytest.raises(ValueError):
        Periodogram([0.1, 0.6], [1.0, 1.0])
    with pytest.raises(ValueError):
        Periodogram([0.1, 0.2], [1.0, -1.0])
    assert math.isfinite(Periodogram([0.5], [0.0]).power[0])
