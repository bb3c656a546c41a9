import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import direct_kzft, rational_kz_coefficients

from pcdecomp import (
    KzftParams,
    SinusoidModel,
    TimeSeries,
    UnseparableFrequenciesError,
    choose_bandwidth,
    detrend_linear,
    kzft_apply,
    kzft_coefficients,
    simulate_mpc,
    transfer_gain,
)
from pcdecomp.kzft import half_power_offset, kz_response, window_from_periods


def gain_formula(m, k, g):
    s = math.sin(math.pi * g)
    if abs(s) < 1e-15:
        return 1.0
    return abs(math.sin(math.pi * m * g) / (m * s)) ** k


def interior(n, params):
    half = (params.support - 1) // 2
    return slice(half, n - half)


def test_coefficients_single_pass():
    assert list(kzft_coefficients(3, 1)) == [1 / 3, 1 / 3, 1 / 3]


def test_coefficients_two_passes_exact():
    expected = [Fraction(1, 9), Fraction(2, 9), Fraction(3, 9), Fraction(2, 9), Fraction(1, 9)]
    got = kzft_coefficients(3, 2)
    assert [Fraction(c) for c in got] == [Fraction(float(e)) for e in expected]
    assert rational_kz_coefficients(3, 2) == expected


@pytest.mark.parametrize("m,k", [(3, 1), (3, 3), (5, 2), (7, 4), (9, 3)])
def test_coefficients_equal_rational_self_convolution(m, k):
    exact = rational_kz_coefficients(m, k)
    got = kzft_coefficients(m, k)
    assert len(got) == k * (m - 1) + 1
    assert [float(e) for e in exact] == list(got)


def test_coefficients_sum_and_symmetry():
    for m in range(3, 52, 2):
        for k in range(1, 6):
            a = kzft_coefficients(m, k)
            assert abs(a.sum() - 1.0) <= 1e-12
            assert np.array_equal(a, a[::-1])


@pytest.mark.parametrize("m,k", [(4, 1), (1, 1), (3, 0), (2, 3)])
def test_coefficients_reject_bad(m, k):
    with pytest.raises(ValueError):
        kzft_coefficients(m, k)


def test_params_invariants():
    assert KzftParams(5, 3, 0.1).support == 13
    for bad in [(4, 3, 0.1), (5, 0, 0.1), (5, 3, 0.0), (5, 3, 0.6)]:
        with pytest.raises(ValueError):
            KzftParams(*bad)


def test_window_from_periods():
    assert window_from_periods(3, 12) == 37
    assert window_from_periods(2, 15) == 31
    assert window_from_periods(1, 2) == 3


def test_transfer_gain_center_is_one():
    p = KzftParams(27, 3, 1 / 15)
    assert transfer_gain(p, 1 / 15) == 1.0


def test_transfer_gain_zero_of_kernel():
    p = KzftParams(3, 1, 0.1)
    assert transfer_gain(p, 0.1 + 1 / 3) == pytest.approx(0.0, abs=1e-15)


def test_transfer_gain_mainlobe_decreases():
    for m in (3, 9, 27):
        p = KzftParams(m, 3, 0.2)
        assert transfer_gain(p, 0.2 + 1 / (2 * m)) > transfer_gain(p, 0.2 + 1 / m)


def test_transfer_gain_matches_formula(rng):
    for _ in range(50):
        m = int(rng.choice([3, 5, 9, 13, 27]))
        k = int(rng.integers(1, 5))
        nu = float(rng.uniform(0.01, 0.5))
        f = float(rng.uniform(0, 0.5))
        assert transfer_gain(KzftParams(m, k, nu), f) == pytest.approx(gain_formula(m, k, f - nu), rel=1e-9, abs=1e-15)


def test_half_power_offset():
    for m, k in [(5, 1), (13, 3), (27, 3)]:
        g = half_power_offset(m, k)
        assert gain_formula(m, k, g) == pytest.approx(2 ** -0.5, rel=1e-9)
        assert 0 < g < 1 / m


def test_apply_matches_direct_summation(rng):
    x = rng.normal(size=90)
    for m, k, nu in [(5, 3, 0.1), (9, 2, 1 / 15), (3, 1, 0.5)]:
        got = kzft_apply(TimeSeries(x, 1), KzftParams(m, k, nu)).series.values
        assert np.allclose(got, direct_kzft(list(x), m, k, nu), atol=1e-9, rtol=0)


def test_apply_preserves_length_and_origin():
    x = simulate_mpc([SinusoidModel(1, 10)], 0.5, 80, seed=1, t0=7)
    comp = kzft_apply(x, KzftParams(5, 3, 0.1))
    assert len(comp.series) == 80 and comp.series.t0 == 7
    assert np.all(np.isfinite(comp.series.values))


def test_apply_trim_mode():
    x = simulate_mpc([SinusoidModel(1, 10)], 0.5, 80, seed=1)
    p = KzftParams(5, 3, 0.1)
    full = kzft_apply(x, p)
    trim = kzft_apply(x, p, boundary="trim")
    half = (p.support - 1) // 2
    assert len(trim.series) == 80 - 2 * half
    assert trim.series.t0 == 1 + half
    assert np.allclose(trim.series.values, full.series.values[half:-half], atol=1e-12)


def test_apply_rejects_short_series():
    with pytest.raises(ValueError):
        kzft_apply(TimeSeries(np.ones(10), 1), KzftParams(5, 3, 0.1))
    with pytest.raises(ValueError):
        kzft_apply(TimeSeries(np.ones(30), 1), KzftParams(5, 3, 0.1), boundary="wrap")


def test_constant_is_rejected_when_gain_small():
    p = KzftParams(27, 3, 1 / 15)
    assert gain_formula(27, 3, 1 / 15) < 0.01
    y = kzft_apply(TimeSeries(np.full(300, 4.0), 1), p).series.values
    assert np.max(np.abs(y[interior(300, p)])) < 0.02 * 4.0


def test_cosine_at_center_passes():
    nu = 0.1
    p = KzftParams(21, 3, nu)
    assert gain_formula(21, 3, 2 * nu) <= 0.01
    t = np.arange(1, 301)
    x = np.cos(2 * np.pi * nu * t)
    y = kzft_apply(TimeSeries(x, 1), p).series.values
    sl = interior(300, p)
    assert np.max(np.abs(y[sl] - x[sl])) <= 0.02


def test_double_pc_component_isolated(double_pc):
    comps, x = double_pc
    d, _ = detrend_linear(x)
    params = choose_bandwidth([1 / 15, 1 / 50], k=3, max_sidelobe=0.05, max_len=300)
    y = kzft_apply(d, params[0]).series.values
    truth = comps[0](x.t)
    sl = interior(300, params[0])
    assert np.corrcoef(y[sl], truth[sl])[0, 1] >= 0.95


def test_interior_gain_is_exact_response_sum(rng):
    # for a symmetric kernel the interior output of a sinusoid at f is
    # (H(f - nu) + H(f + nu)) times the input
    for _ in range(20):
        m = int(rng.choice([5, 9, 15]))
        nu = float(rng.uniform(0.02, 0.48))
        f = float(rng.uniform(0.02, 0.48))
        p = KzftParams(m, 3, nu)
        t = np.arange(1, 201)
        x = np.sin(2 * np.pi * f * t + 0.4)
        y = kzft_apply(TimeSeries(x, 1), p).series.values
        g = float(kz_response(m, 3, f - nu) + kz_response(m, 3, f + nu))
        sl = interior(200, p)
        assert np.max(np.abs(y[sl] - g * x[sl])) < 1e-9


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-50, 50, allow_nan=False), min_size=30, max_size=30),
    st.lists(st.floats(-50, 50, allow_nan=False), min_size=30, max_size=30),
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(0.01, 0.5),
)
def test_linearity(x, y, a, b, nu):
    p = KzftParams(5, 3, nu)
    fx = kzft_apply(TimeSeries(x, 1), p).series.values
    fy = kzft_apply(TimeSeries(y, 1), p).series.values
    fxy = kzft_apply(TimeSeries(a * np.array(x) + b * np.array(y), 1), p).series.values
    assert np.allclose(fxy, a * fx + b * fy, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 20), st.floats(0.02, 0.48))
def test_time_shift_equivariance(seed, shift, nu):
    x = np.random.default_rng(seed).normal(size=120)
    p = KzftParams(7, 3, nu)
    a = kzft_apply(TimeSeries(x, 1), p).series.values
    b = kzft_apply(TimeSeries(x[shift:], 1), p).series.values
    half = (p.support - 1) // 2
    # interior of the shifted series, compared against the same absolute times
    idx = np.arange(half, 120 - shift - half)
    assert np.allclose(b[idx], a[idx + shift], atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.03, 0.47), st.floats(0.01, 0.49), st.sampled_from([7, 11, 21]))
def test_amplitude_ratio_matches_transfer_gain(nu, f, m):
    p = KzftParams(m, 3, nu)
    t = np.arange(1, 401)
    x = 2.0 * np.sin(2 * np.pi * f * t)
    y = kzft_apply(TimeSeries(x, 1), p).series.values
    sl = interior(400, p)
    basis = np.c_[np.sin(2 * np.pi * f * t[sl]), np.cos(2 * np.pi * f * t[sl])]
    coef = np.linalg.lstsq(basis, y[sl], rcond=None)[0]
    ratio = float(np.hypot(*coef)) / 2.0
    T = gain_formula(m, 3, f - nu)
    leak = gain_formula(m, 3, f + nu)
    assert abs(ratio - T) <= 0.02 * T + leak + 1e-9


def brute_force_window(freqs, i, k, max_sidelobe, max_len):
    """Scan odd m using only the closed-form gain and a dense half-power search."""
    nu = freqs[i]
    stops = [g - nu for j, g in enumerate(freqs) if j != i] + [2 * nu]
    dists = [min(2 * f, 1 - 2 * f) for f in freqs]
    dists += [abs(a - b) for j, a in enumerate(freqs) for b in freqs[j + 1 :]]
    gap = min(dists)
    m = 3
    while k * (m - 1) + 1 <= max_len:
        grid = np.linspace(0, 1 / m, 20001)
        gains = np.array([gain_formula(m, k, g) for g in grid])
        g_half = grid[np.argmax(gains < 2 ** -0.5)]
        if all(gain_formula(m, k, g) <= max_sidelobe for g in stops) and 2 * g_half <= gap / 2 + 1e-4:
            return m
        m += 2
    return None


def test_choose_bandwidth_double_pc():
    freqs = [1 / 15, 1 / 50]
    params = choose_bandwidth(freqs, k=3, max_sidelobe=0.05, max_len=300)
    assert [p.window for p in params] == [brute_force_window(freqs, i, 3, 0.05, 300) for i in range(2)]
    assert [p.window for p in params] == [27, 27]
    assert transfer_gain(params[0], 1 / 50) <= 0.05
    assert transfer_gain(params[1], 1 / 15) <= 0.05
    assert all(p.iterations == 3 for p in params)


def test_choose_bandwidth_single_frequency():
    (p,) = choose_bandwidth([1 / 12], k=3, max_sidelobe=0.05)
    assert p.window == brute_force_window([1 / 12], 0, 3, 0.05, 10**6)
    assert transfer_gain(p, 2 / 12 + 1 / 12) <= 0.05  # conjugate image at 2 nu offset


def test_choose_bandwidth_is_deterministic():
    a = choose_bandwidth([0.1, 0.27, 0.33], k=3, max_sidelobe=0.05)
    b = choose_bandwidth([0.1, 0.27, 0.33], k=3, max_sidelobe=0.05)
    assert a == b


def test_choose_bandwidth_unseparable():
    with pytest.raises(UnseparableFrequenciesError) as exc:
        choose_bandwidth([0.10, 0.1001], k=3, max_sidelobe=0.05, max_len=300)
    assert exc.value.pair == (0.10, 0.1001)
    assert "0.1001" in str(exc.value)


def test_choose_bandwidth_nyquist_is_its_own_image():
    with pytest.raises(UnseparableFrequenciesError):
        choose_bandwidth([0.5])


@pytest.mark.parametrize("freqs", [[], [0.1, 0.1], [0.0], [0.7]])
def test_choose_bandwidth_rejects_bad_input(freqs):
    with pytest.raises(ValueError):
        choose_bandwidth(freqs)


def test_filtered_manifest(tmp_path):
    comp = kzft_apply(TimeSeries(np.arange(40.0), 1, "lin"), KzftParams(5, 2, 0.25))
    comp.write_manifest(tmp_path / "m.json")
    import json

    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc == {"window": 5, "iterations": 2, "center": 0.25, "boundary": "renormalize",
                   "source": "lin", "t0": 1, "length": 40}
