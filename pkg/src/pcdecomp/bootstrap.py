"""Periodic block bootstrap of band-passed components.

Each resample is built from whole, non-overlapping, period-aligned blocks of
the source so every value stays in its original phase class.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .kzft import FilteredComponent
from .series import TimeSeries, format_float, write_csv


@dataclass(frozen=True)
class BlockPlan:
    period: int
    n_blocks: int

    def __post_init__(self):
        if self.period < 1 or self.n_blocks < 1:
            raise ValueError("period and n_blocks must be positive")

    @property
    def trimmed_len(self) -> int:
        return self.period * self.n_blocks


@dataclass(frozen=True, eq=False)
class BootstrapEnsemble:
    resamples: list[TimeSeries]
    plan: BlockPlan
    seed: int
    # block indices drawn for each resample, shape (B, n_blocks)
    draws: np.ndarray | None = None

    @property
    def B(self) -> int:
        return len(self.resamples)

    def matrix(self) -> np.ndarray:
        return np.vstack([r.values for r in self.resamples])


def make_block_plan(series_len: int, p: int) -> BlockPlan:
    if int(p) != p or p < 1:
        raise ValueError(f"block length must be a positive integer, got {p}")
    if series_len < p:
        raise ValueError(f"series length {series_len} is shorter than one period {p}")
    return BlockPlan(int(p), series_len // int(p))


def _as_series(component) -> TimeSeries:
    return component.series if isinstance(component, FilteredComponent) else component


def resample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for resample ``index``; order of execution is irrelevant."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, index]))


def pbb_resample(component, plan: BlockPlan, B: int, seed: int) -> BootstrapEnsemble:
    """Draw ``B`` periodic block bootstrap resamples of ``component``.

    Blocks are ``[t0 + j p, t0 + (j+1) p)`` for ``j < n_blocks``; the trailing
    partial period is discarded.
    """
    if B < 1:
        raise ValueError(f"B must be positive, got {B}")
    src = _as_series(component)
    if len(src) < plan.trimmed_len:
        raise ValueError("block plan is longer than the component")
    blocks = src.values[: plan.trimmed_len].reshape(plan.n_blocks, plan.period)
    draws = np.empty((B, plan.n_blocks), dtype=np.int64)
    resamples = []
    for i in range(B):
        idx = resample_rng(seed, i).integers(0, plan.n_blocks, size=plan.n_blocks)
        draws[i] = idx
        resamples.append(TimeSeries(blocks[idx].ravel(), src.t0, f"{src.name}#{i}"))
    return BootstrapEnsemble(resamples, plan, seed, draws)


def sum_ensembles(ensembles: Sequence[BootstrapEnsemble]) -> list[TimeSeries]:
    """Pointwise sum of resample ``i`` across components, truncated to the shortest."""
    if not ensembles:
        raise ValueError("need at least one ensemble")
    sizes = {e.B for e in ensembles}
    if len(sizes) != 1:
        raise ValueError(f"ensembles have different resample counts: {sorted(sizes)}")
    t0s = {e.resamples[0].t0 for e in ensembles}
    if len(t0s) != 1:
        raise ValueError("ensembles must share a time origin")
    n = min(e.plan.trimmed_len for e in ensembles)
    total = sum(e.matrix()[:, :n] for e in ensembles)
    t0 = t0s.pop()
    return [TimeSeries(row, t0, f"sum#{i}") for i, row in enumerate(total)]


@dataclass(frozen=True, eq=False)
class PeriodicMeanBand:
    low: np.ndarray
    mean: np.ndarray
    high: np.ndarray
    level: float

    def excludes_zero(self) -> np.ndarray:
        return (self.low > 0) | (self.high < 0)

    def rows(self):
        return zip(range(self.mean.size), self.low, self.mean, self.high)


def periodic_mean_ci(ensemble: BootstrapEnsemble, level: float = 0.95) -> PeriodicMeanBand:
    """Percentile band of the per-phase resample means.

    Phase ``r`` is the offset within a block, i.e. positions ``t0 + r + j p``.
    """
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if ensemble.B < 20:
        raise ValueError(f"need at least 20 resamples for a percentile band, got {ensemble.B}")
    p = ensemble.plan
    phase_means = ensemble.matrix().reshape(ensemble.B, p.n_blocks, p.period).mean(axis=1)
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(phase_means, [alpha, 1.0 - alpha], axis=0)
    return PeriodicMeanBand(low, phase_means.mean(axis=0), high, level)


def write_ci_csv(band: PeriodicMeanBand, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("phase,low,mean,high\n")
        for r, lo, mu, hi in band.rows():
            fh.write(f"{r},{format_float(lo)},{format_float(mu)},{format_float(hi)}\n")


def write_ensemble(ensemble: BootstrapEnsemble, directory, band: PeriodicMeanBand | None = None) -> None:
    """One ``resample_XXXX.csv`` per resample plus ``ci.csv`` when a band is given."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(ensemble.B - 1)))
    for i, r in enumerate(ensemble.resamples):
        write_csv(r, directory / f"resample_{i:0{width}d}.csv")
    if band is not None:
        write_ci_csv(band, directory / "ci.csv")
