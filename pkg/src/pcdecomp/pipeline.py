"""Two-stage decomposition: band-pass + block bootstrap per component, then
amplitude sampling per component, summed back into a fit and forecast."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bootstrap as bs
from .kzft import (
    BOUNDARY_MODES,
    FilteredComponent,
    KzftParams,
    UnseparableFrequenciesError,
    choose_bandwidth,
    kzft_apply,
    window_from_periods,
)
from .mcmc import (
    AmplitudeEstimate,
    AmplitudeModel,
    GammaPrior,
    McmcConfig,
    PosteriorChain,
    align_phase,
    run_chain,
    summarize,
    with_seed,
    write_chain_csv,
    write_summary_json,
)
from .series import (
    SinusoidModel,
    TimeSeries,
    TrendLine,
    detrend_linear,
    fit_trend,
    format_float,
    read_csv,
    simulate_mpc,
    write_csv,
)
from .spectral import Periodogram, find_peaks, periodogram

log = logging.getLogger(__name__)

PHASE_MODES = ("zero", "aligned")


def parse_frequency(value) -> float:
    """Accept numbers or fraction strings such as ``"1/12"``."""
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    return float(value)


@dataclass
class SimulationSpec:
    components: list[SinusoidModel]
    noise_sd: float = 1.0
    n: int = 300
    seed: int = 0
    t0: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> SimulationSpec:
        comps = [
            SinusoidModel(float(c["amplitude"]), float(c["period"]), float(c.get("phase", 0.0)))
            for c in d.get("components", [])
        ]
        return cls(comps, float(d.get("noise_sd", 1.0)), int(d.get("n", 300)), int(d.get("seed", 0)), int(d.get("t0", 1)))

    def to_dict(self) -> dict:
        return {
            "components": [asdict(c) for c in self.components],
            "noise_sd": self.noise_sd,
            "n": self.n,
            "seed": self.seed,
            "t0": self.t0,
        }

    def generate(self) -> TimeSeries:
        return simulate_mpc(self.components, self.noise_sd, self.n, self.seed, self.t0)


@dataclass
class FilterPolicy:
    """How KZFT parameters are picked for each component.

    Precedence: explicit ``windows`` > ``periods_per_window`` > automatic
    bandwidth selection.  ``centers`` overrides the filter center frequencies
    (the sinusoid model still uses the component frequency).
    """

    iterations: int = 3
    max_sidelobe: float = 0.05
    windows: list[int] | None = None
    periods_per_window: float | None = None
    centers: list[float] | None = None
    boundary: str = "renormalize"


@dataclass
class RunConfig:
    input: str | None = None
    simulation: SimulationSpec | None = None
    frequencies: list[float] | str = "auto"
    max_peaks: int = 5
    min_prominence_ratio: float = 10.0
    filter: FilterPolicy = field(default_factory=FilterPolicy)
    B: int = 200
    ci_level: float = 0.95
    significance_fraction: float = 0.25
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    prior_A: GammaPrior = field(default_factory=lambda: GammaPrior(1.0, 0.1))
    prior_var: GammaPrior = field(default_factory=lambda: GammaPrior(1.0, 0.0001))
    corrected: bool = False
    phase_mode: str = "zero"
    forecast_horizon: int = 0
    extrapolate_trend: bool = True
    refit_trend: bool = True
    mcmc_per_resample: bool = False
    write_resamples: bool = False
    seed: int = 0
    output_dir: str | None = None
    threads: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if (self.input is None) == (self.simulation is None):
            raise ValueError("exactly one of 'input' and 'simulation' must be given")
        if self.frequencies != "auto":
            freqs = list(self.frequencies)
            if not freqs:
                raise ValueError("frequencies must be 'auto' or a non-empty list")
            if len(set(freqs)) != len(freqs):
                raise ValueError(f"duplicate frequencies: {freqs}")
            for f in freqs:
                if not 0 < f <= 0.5:
                    raise ValueError(f"frequency {f} outside (0, 0.5]")
            for name in ("windows", "centers"):
                v = getattr(self.filter, name)
                if v is not None and len(v) != len(freqs):
                    raise ValueError(f"filter.{name} must have one entry per frequency")
        elif self.filter.windows is not None or self.filter.centers is not None:
            raise ValueError("filter.windows and filter.centers need an explicit frequency list")
        if self.phase_mode not in PHASE_MODES:
            raise ValueError(f"phase_mode must be one of {PHASE_MODES}")
        if self.filter.boundary not in BOUNDARY_MODES:
            raise ValueError(f"filter.boundary must be one of {BOUNDARY_MODES}")
        if self.B < 1 or self.forecast_horizon < 0 or self.seed < 0:
            raise ValueError("B must be positive, forecast_horizon and seed nonnegative")
        if not 0 <= self.significance_fraction <= 1:
            raise ValueError("significance_fraction must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        """Build from a JSON document; a run manifest (with a ``config`` key) is accepted too."""
        if "config" in d and isinstance(d["config"], dict):
            d = d["config"]
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        if kw.get("simulation") is not None:
            kw["simulation"] = SimulationSpec.from_dict(kw["simulation"])
        freqs = kw.get("frequencies", "auto")
        if freqs != "auto":
            if isinstance(freqs, (str, int, float)):
                raise ValueError("frequencies must be 'auto' or a list")
            kw["frequencies"] = [parse_frequency(f) for f in freqs]
        filt = dict(kw.get("filter") or {})
        if filt.get("centers") is not None:
            filt["centers"] = [parse_frequency(f) for f in filt["centers"]]
        kw["filter"] = FilterPolicy(**filt)
        kw["mcmc"] = McmcConfig(**(kw.get("mcmc") or {}))
        for key in ("prior_A", "prior_var"):
            if kw.get(key) is not None:
                kw[key] = GammaPrior(**kw[key])
            else:
                kw.pop(key, None)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> RunConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self, include_output: bool = True) -> dict:
        d = {
            "input": self.input,
            "simulation": self.simulation.to_dict() if self.simulation else None,
            "frequencies": self.frequencies if self.frequencies == "auto" else list(self.frequencies),
            "max_peaks": self.max_peaks,
            "min_prominence_ratio": self.min_prominence_ratio,
            "filter": asdict(self.filter),
            "B": self.B,
            "ci_level": self.ci_level,
            "significance_fraction": self.significance_fraction,
            "mcmc": asdict(self.mcmc),
            "prior_A": asdict(self.prior_A),
            "prior_var": asdict(self.prior_var),
            "corrected": self.corrected,
            "phase_mode": self.phase_mode,
            "forecast_horizon": self.forecast_horizon,
            "extrapolate_trend": self.extrapolate_trend,
            "refit_trend": self.refit_trend,
            "mcmc_per_resample": self.mcmc_per_resample,
            "write_resamples": self.write_resamples,
            "seed": self.seed,
        }
        if include_output:
            d["output_dir"] = self.output_dir
            d["threads"] = self.threads
        return d


@dataclass(eq=False)
class ComponentFit:
    frequency: float
    period: float
    block_period: int
    params: KzftParams
    phase: float
    estimate: AmplitudeEstimate
    significant: bool
    fraction_excluding_zero: float
    filtered: FilteredComponent
    chain: PosteriorChain
    band: bs.PeriodicMeanBand
    ensemble: bs.BootstrapEnsemble
    bootstrap_seed: int
    mcmc_seed: int
    resample_estimates: list[AmplitudeEstimate] | None = None

    @property
    def sinusoid(self) -> SinusoidModel:
        return SinusoidModel(max(self.estimate.mean_A, 0.0), self.period, self.phase)

    def key(self) -> str:
        return f"{self.frequency:.6f}"


@dataclass(eq=False)
class McpFit:
    components: list[ComponentFit]
    trend: TrendLine
    source: TimeSeries
    detrended: TimeSeries
    fitted: TimeSeries
    forecast: TimeSeries | None
    extrapolate_trend: bool = True
    notes: list[str] = field(default_factory=list)
    initial_trend: TrendLine | None = None

    @property
    def accepted(self) -> list[ComponentFit]:
        return [c for c in self.components if c.significant]


def _component_seeds(master: int, freq: float) -> tuple[int, int]:
    ss = np.random.SeedSequence([int(master), int(round(freq * 1e12))])
    boot, chain = ss.generate_state(2, dtype=np.uint32)
    return int(boot), int(chain)


def _resolve_params(config: RunConfig, freqs: list[float], n: int) -> list[KzftParams]:
    policy = config.filter
    centers = policy.centers if policy.centers is not None else freqs
    k = policy.iterations
    if policy.windows is not None:
        return [KzftParams(int(m), k, c) for m, c in zip(policy.windows, centers)]
    if policy.periods_per_window is not None:
        return [KzftParams(window_from_periods(policy.periods_per_window, 1.0 / f), k, c) for f, c in zip(freqs, centers)]
    return choose_bandwidth(centers, k=k, max_sidelobe=policy.max_sidelobe, max_len=n)


def load_input(config: RunConfig) -> TimeSeries:
    if config.simulation is not None:
        return config.simulation.generate()
    return read_csv(config.input)


def select_frequencies(config: RunConfig, detrended: TimeSeries, notes: list[str] | None = None) -> list[float]:
    """Explicit frequencies, or periodogram peaks screened strongest first.

    Auto mode drops peaks with fewer than two full periods in the sample (they
    cannot be block-bootstrapped and are indistinguishable from trend) and
    peaks that cannot be separated from an already kept, stronger one.
    """
    if config.frequencies != "auto":
        return sorted(config.frequencies)
    notes = notes if notes is not None else []
    n = len(detrended)
    peaks = find_peaks(periodogram(detrended), config.max_peaks, config.min_prominence_ratio)
    kept: list[float] = []
    for f, _ in peaks:
        if f < 2.0 / n:
            notes.append(f"auto: skipped peak {f:.6g}, fewer than two periods in the sample")
            continue
        try:
            choose_bandwidth(kept + [f], k=config.filter.iterations, max_sidelobe=config.filter.max_sidelobe, max_len=n)
        except UnseparableFrequenciesError as exc:
            notes.append(f"auto: skipped peak {f:.6g}, {exc}")
            continue
        kept.append(f)
    return sorted(kept)


def _fit_component(
    config: RunConfig, detrended: TimeSeries, freq: float, params: KzftParams
) -> ComponentFit:
    period = 1.0 / freq
    block_period = max(1, int(round(period)))
    boot_seed, mcmc_seed = _component_seeds(config.seed, freq)
    filtered = kzft_apply(detrended, params, boundary=config.filter.boundary)
    plan = bs.make_block_plan(len(filtered.series), block_period)
    ensemble = bs.pbb_resample(filtered, plan, config.B, boot_seed)
    band = bs.periodic_mean_ci(ensemble, config.ci_level)
    frac = float(band.excludes_zero().mean())

    phase = align_phase(filtered, period) if config.phase_mode == "aligned" else 0.0
    model = AmplitudeModel(period, phase, config.prior_A, config.prior_var, config.corrected)
    mcfg = with_seed(config.mcmc, mcmc_seed)
    chain = run_chain(filtered, model, mcfg)
    estimate = summarize(chain)

    resample_estimates = None
    if config.mcmc_per_resample:
        resample_estimates = [
            summarize(run_chain(r, model, with_seed(config.mcmc, mcmc_seed + 1 + i)))
            for i, r in enumerate(ensemble.resamples)
        ]
    return ComponentFit(
        frequency=freq,
        period=period,
        block_period=block_period,
        params=params,
        phase=phase,
        estimate=estimate,
        significant=frac >= config.significance_fraction,
        fraction_excluding_zero=frac,
        filtered=filtered,
        chain=chain,
        band=band,
        ensemble=ensemble,
        bootstrap_seed=boot_seed,
        mcmc_seed=mcmc_seed,
        resample_estimates=resample_estimates,
    )


def reconstruct(fit: McpFit, t, name: str = "reconstruction") -> TimeSeries:
    """Trend plus accepted sinusoids at integer times ``t`` (extrapolates beyond the sample)."""
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        raise ValueError("empty time range")
    if fit.extrapolate_trend:
        trend_t = t
    else:
        trend_t = np.clip(t, fit.source.t0, fit.source.t_end)
    y = fit.trend(trend_t)
    for c in fit.accepted:
        y = y + c.sinusoid(t)
    return TimeSeries(y, int(t[0]), name)


def run_pipeline(config: RunConfig) -> McpFit:
    source = load_input(config)
    detrended, trend = detrend_linear(source)
    notes: list[str] = []
    freqs = select_frequencies(config, detrended, notes)
    if config.frequencies == "auto":
        notes.append(f"auto-selected frequencies {[round(f, 9) for f in freqs]}")
    components: list[ComponentFit] = []
    if freqs:
        params = _resolve_params(config, freqs, len(detrended))
        for f, p in zip(freqs, params):
            log.info("component %.6f: window=%d iterations=%d center=%.6f", f, p.window, p.iterations, p.center)
        with ThreadPoolExecutor(max_workers=config.threads or None) as pool:
            components = list(pool.map(lambda fp: _fit_component(config, detrended, *fp), zip(freqs, params)))
    for c in components:
        if abs(c.period - c.block_period) > 1e-9:
            notes.append(f"component {c.key()}: period {c.period:.6g} rounded to block length {c.block_period}")
        if not c.significant:
            notes.append(
                f"component {c.key()}: not significant ({c.fraction_excluding_zero:.2f} of phases exclude 0); excluded"
            )

    fit = McpFit(components, trend, source, detrended, source, None, config.extrapolate_trend, notes)
    if config.refit_trend and fit.accepted:
        # the first-pass line also absorbs the sinusoids' own projection on t
        periodic = sum(c.sinusoid(source.t) for c in fit.accepted)
        fit.initial_trend = trend
        fit.trend = fit_trend(source.with_values(source.values - periodic))
    fit.fitted = reconstruct(fit, source.t, name="fitted")
    if config.forecast_horizon > 0:
        tf = np.arange(source.t_end + 1, source.t_end + 1 + config.forecast_horizon)
        fit.forecast = reconstruct(fit, tf, name="forecast")
    return fit


def residual_diagnostics(fit: McpFit, series: TimeSeries) -> dict:
    if len(series) != len(fit.fitted) or series.t0 != fit.fitted.t0:
        raise ValueError("series and fit cover different time ranges")
    resid = series.values - fit.fitted.values
    var_in = float(np.var(series.values))
    var_res = float(np.var(resid))
    rs = series.with_values(resid, name="residual")
    pg: Periodogram | None = periodogram(rs) if len(rs) >= 4 else None
    return {
        "residual": rs,
        "residual_variance": var_res,
        "input_variance": var_in,
        "variance_ratio": var_res / var_in if var_in > 0 else math.nan,
        "periodogram": pg,
    }


def _component_record(c: ComponentFit, config: RunConfig) -> dict:
    return {
        "frequency": c.frequency,
        "period": c.period,
        "block_period": c.block_period,
        "filter": {
            "window": c.params.window,
            "iterations": c.params.iterations,
            "center": c.params.center,
            "boundary": c.filtered.boundary,
        },
        "phase": c.phase,
        "phase_mode": config.phase_mode,
        "bootstrap_seed": c.bootstrap_seed,
        "mcmc_seed": c.mcmc_seed,
        "significant": c.significant,
        "fraction_excluding_zero": c.fraction_excluding_zero,
        "estimate": c.estimate.to_dict(),
    }


def manifest(fit: McpFit, config: RunConfig) -> dict:
    return {
        "config": config.to_dict(include_output=False),
        "input": {
            "name": fit.source.name,
            "t0": fit.source.t0,
            "length": len(fit.source),
            "source": config.input if config.input is not None else "simulation",
        },
        "trend": asdict(fit.trend),
        "initial_trend": asdict(fit.initial_trend) if fit.initial_trend is not None else None,
        "components": [_component_record(c, config) for c in fit.components],
        "accepted": [c.key() for c in fit.accepted],
        "notes": fit.notes,
    }


def _write_json(doc, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run(fit: McpFit, config: RunConfig, out_dir) -> Path:
    """Write the run directory: manifest, per-component files, fit/forecast/residuals."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(manifest(fit, config), out / "manifest.json")
    write_csv(fit.source, out / "input.csv")
    for c in sorted(fit.components, key=lambda c: c.frequency):
        d = out / "components" / c.key()
        d.mkdir(parents=True, exist_ok=True)
        write_csv(c.filtered.series, d / "filtered.csv")
        c.filtered.write_manifest(d / "filtered.json")
        write_chain_csv(c.chain, d / "chain.csv")
        bs.write_ci_csv(c.band, d / "ci.csv")
        model = AmplitudeModel(c.period, c.phase, config.prior_A, config.prior_var, config.corrected)
        write_summary_json(c.estimate, with_seed(config.mcmc, c.mcmc_seed), model, d / "summary.json")
        if config.write_resamples:
            bs.write_ensemble(c.ensemble, d / "resamples")
        if c.resample_estimates is not None:
            with open(d / "resample_fits.csv", "w", newline="", encoding="utf-8") as fh:
                fh.write("resample,mean_A,sd_A,mean_sigma\n")
                for i, e in enumerate(c.resample_estimates):
                    fh.write(f"{i},{format_float(e.mean_A)},{format_float(e.sd_A)},{format_float(e.mean_sigma)}\n")
    write_csv(fit.fitted, out / "fit.csv")
    if fit.forecast is not None:
        write_csv(fit.forecast, out / "forecast.csv")
    else:
        (out / "forecast.csv").write_text("t,value\n", encoding="utf-8")
    diag = residual_diagnostics(fit, fit.source)
    write_csv(diag["residual"], out / "residuals.csv")
    return out
