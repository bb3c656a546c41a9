"""Metropolis-Hastings sampling of a single component's amplitude and noise scale.

Model: ``y_t ~ Normal(A sin(2 pi t / p + phi), sigma^2)`` with independent
shape-rate gamma priors on ``A`` and on ``sigma^2``.  The chain walks on
``(A, sigma)``.  By default the prior density of ``sigma^2`` is used directly
as a density in ``sigma`` (no change-of-variables term); ``corrected=True``
adds the ``log(2 sigma)`` Jacobian so the chain targets the proper posterior
of ``(A, sigma)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from .kzft import FilteredComponent
from .series import TWO_PI, TimeSeries, format_float


@dataclass(frozen=True)
class GammaPrior:
    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("gamma shape and rate must be positive")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def logpdf(self, x: float) -> float:
        if x <= 0:
            return -math.inf
        a, b = self.shape, self.rate
        return a * math.log(b) - float(gammaln(a)) + (a - 1.0) * math.log(x) - b * x


@dataclass(frozen=True)
class AmplitudeModel:
    period: float
    phase: float = 0.0
    prior_A: GammaPrior = field(default_factory=lambda: GammaPrior(1.0, 0.1))
    prior_var: GammaPrior = field(default_factory=lambda: GammaPrior(1.0, 0.0001))
    corrected: bool = False

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    def basis(self, t: np.ndarray) -> np.ndarray:
        return np.sin(TWO_PI * t / self.period + self.phase)


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 3000
    burn_in: int = 300
    init_A: float = 2.0
    init_sigma: float = 6.0
    proposal_sd_A: float = 2.0
    proposal_halfwidth_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if not (self.proposal_sd_A > 0 and self.proposal_halfwidth_sigma > 0):
            raise ValueError("proposal scales must be positive")
        if not (self.init_A > 0 and self.init_sigma > 0):
            raise ValueError("initial state must lie in the prior support")


@dataclass(frozen=True, eq=False)
class PosteriorChain:
    samples: np.ndarray  # (iterations, 2): columns A, sigma
    accepted_A: np.ndarray  # bool per iteration
    accepted_sigma: np.ndarray
    burn_in: int

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def A(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def sigma(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def n_accepted(self) -> tuple[int, int]:
        return int(self.accepted_A.sum()), int(self.accepted_sigma.sum())


@dataclass(frozen=True)
class AmplitudeEstimate:
    mean_A: float
    sd_A: float
    mean_sigma: float
    sd_sigma: float
    acceptance_rate: float
    acceptance_rate_sigma: float
    ess_A: float
    ess_sigma: float
    n_kept: int

    @property
    def mcse_A(self) -> float:
        return self.sd_A / math.sqrt(max(self.ess_A, 1.0))

    @property
    def mcse_sigma(self) -> float:
        return self.sd_sigma / math.sqrt(max(self.ess_sigma, 1.0))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mcse_A"] = self.mcse_A
        d["mcse_sigma"] = self.mcse_sigma
        return d


def _as_series(data) -> TimeSeries:
    return data.series if isinstance(data, FilteredComponent) else data


def log_target(A: float, sigma: float, data, model: AmplitudeModel) -> float:
    """Unnormalized log posterior at ``(A, sigma)``; ``-inf`` outside ``A, sigma > 0``."""
    if A <= 0 or sigma <= 0:
        return -math.inf
    y = _as_series(data)
    resid = y.values - A * model.basis(y.t)
    n = resid.size
    loglik = -0.5 * n * math.log(TWO_PI * sigma * sigma) - float(resid @ resid) / (2.0 * sigma * sigma)
    lp = loglik + model.prior_A.logpdf(A) + model.prior_var.logpdf(sigma * sigma)
    if model.corrected:
        lp += math.log(2.0 * sigma)
    return lp


class _Target:
    """log_target with the data reduced to sufficient statistics."""

    def __init__(self, data, model: AmplitudeModel):
        y = _as_series(data)
        s = model.basis(y.t)
        self.n = y.values.size
        self.syy = float(y.values @ y.values)
        self.sys = float(y.values @ s)
        self.sss = float(s @ s)
        self.model = model

    def __call__(self, A: float, sigma: float) -> float:
        if A <= 0 or sigma <= 0:
            return -math.inf
        m = self.model
        ssr = max(self.syy - 2.0 * A * self.sys + A * A * self.sss, 0.0)
        var = sigma * sigma
        lp = -0.5 * self.n * math.log(TWO_PI * var) - ssr / (2.0 * var)
        lp += m.prior_A.logpdf(A) + m.prior_var.logpdf(var)
        if m.corrected:
            lp += math.log(2.0 * sigma)
        return lp


def _accept(log_new: float, log_old: float, u: float) -> bool:
    if log_new == -math.inf:
        return False
    diff = log_new - log_old
    return diff >= 0 or u <= math.exp(diff)


def _step(state, target: _Target, config: McmcConfig, rng):
    A, sigma = state
    current = target(A, sigma)

    A_new = A + rng.normal(0.0, config.proposal_sd_A)
    prop = target(A_new, sigma)
    acc_A = _accept(prop, current, rng.uniform(0.0, 1.0))
    if acc_A:
        A, current = A_new, prop

    h = config.proposal_halfwidth_sigma
    sigma_new = sigma + rng.uniform(-h, h)
    prop = target(A, sigma_new)
    acc_s = _accept(prop, current, rng.uniform(0.0, 1.0))
    if acc_s:
        sigma = sigma_new
    return (A, sigma), acc_A, acc_s


def mh_step(state, data, model: AmplitudeModel, config: McmcConfig, rng):
    """One component-wise update: a Gaussian random-walk move on ``A`` and a
    uniform random-walk move on ``sigma``, each accepted iff ``u <= ratio``.

    ``rng`` needs ``normal(loc, scale)`` and ``uniform(low, high)``; the draw
    order is normal, uniform (accept A), uniform (sigma step), uniform (accept
    sigma).  Returns ``(new_state, accepted_A, accepted_sigma)``.
    """
    return _step(state, _Target(data, model), config, rng)


def run_chain(data, model: AmplitudeModel, config: McmcConfig) -> PosteriorChain:
    target = _Target(data, model)
    rng = np.random.default_rng(config.seed)
    n = config.iterations
    samples = np.empty((n, 2))
    acc_A = np.zeros(n, dtype=bool)
    acc_s = np.zeros(n, dtype=bool)
    state = (float(config.init_A), float(config.init_sigma))
    for i in range(n):
        state, acc_A[i], acc_s[i] = _step(state, target, config, rng)
        samples[i] = state
    return PosteriorChain(samples, acc_A, acc_s, config.burn_in)


def effective_sample_size(x: np.ndarray) -> float:
    """ESS from Geyer's initial monotone positive sequence of autocorrelations."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    xc = x - x.mean()
    var = float(xc @ xc) / n
    if var <= 0:
        return float(n)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    rho = acov / acov[0]
    # pair sums Gamma_k = rho_2k + rho_2k+1, truncated at the first non-positive
    # pair and forced to be non-increasing
    pairs = rho[: 2 * (n // 2)].reshape(-1, 2).sum(axis=1)
    total = 0.0
    prev = math.inf
    for g in pairs:
        if g <= 0:
            break
        g = min(g, prev)
        total += g
        prev = g
    tau = -1.0 + 2.0 * total
    return float(n / max(tau, 1.0 / n))


def summarize(chain: PosteriorChain) -> AmplitudeEstimate:
    kept = chain.samples[chain.burn_in :]
    if kept.shape[0] < 100:
        raise ValueError(f"need at least 100 post-burn-in samples, got {kept.shape[0]}")
    n = len(chain)
    acc_A, acc_s = chain.n_accepted
    return AmplitudeEstimate(
        mean_A=float(kept[:, 0].mean()),
        sd_A=float(kept[:, 0].std(ddof=1)),
        mean_sigma=float(kept[:, 1].mean()),
        sd_sigma=float(kept[:, 1].std(ddof=1)),
        acceptance_rate=acc_A / n,
        acceptance_rate_sigma=acc_s / n,
        ess_A=effective_sample_size(kept[:, 0]),
        ess_sigma=effective_sample_size(kept[:, 1]),
        n_kept=int(kept.shape[0]),
    )


def align_phase(data, period: float, n_grid: int = 256) -> float:
    """Phase in ``[0, 2 pi)`` maximizing the inner product with ``sin(2 pi t/p + phi)``."""
    y = _as_series(data)
    phis = TWO_PI * np.arange(n_grid) / n_grid
    basis = np.sin(TWO_PI * y.t[None, :] / period + phis[:, None])
    return float(phis[int(np.argmax(basis @ y.values))])


class CoarseGridError(ValueError):
    pass


def _grid_means(y: TimeSeries, model: AmplitudeModel, grid_A, grid_sigma):
    # independent of log_target: scipy densities on the whole grid
    from scipy import stats

    A = np.asarray(grid_A, dtype=float)[:, None]
    sig = np.asarray(grid_sigma, dtype=float)[None, :]
    s = model.basis(y.t)
    # sum_t log N(y_t | A s_t, sigma^2), expanded so the grid stays 2-D
    syy, sys, sss = y.values @ y.values, y.values @ s, s @ s
    ssr = syy - 2 * A * sys + A * A * sss
    n = y.values.size
    loglik = n * stats.norm.logpdf(0.0, scale=sig) - ssr / (2 * sig**2)
    logp = (
        loglik
        + stats.gamma.logpdf(A, a=model.prior_A.shape, scale=1.0 / model.prior_A.rate)
        + stats.gamma.logpdf(sig**2, a=model.prior_var.shape, scale=1.0 / model.prior_var.rate)
    )
    if model.corrected:
        logp = logp + np.log(2 * sig)
    w = np.exp(logp - logp.max())
    gA = np.asarray(grid_A, dtype=float)
    gS = np.asarray(grid_sigma, dtype=float)
    z = np.trapezoid(np.trapezoid(w, gS, axis=1), gA)
    mA = np.trapezoid(np.trapezoid(w * gA[:, None], gS, axis=1), gA) / z
    mS = np.trapezoid(np.trapezoid(w * gS[None, :], gS, axis=1), gA) / z
    return float(mA), float(mS)


def posterior_oracle(data, model: AmplitudeModel, grid_A, grid_sigma, check: bool = True):
    """Posterior means of ``(A, sigma)`` by 2-D trapezoidal quadrature.

    The grids must cover the posterior mass.  With ``check`` the quadrature is
    repeated on grids refined 2x and :class:`CoarseGridError` is raised if
    either mean moves by more than 0.5 %.
    """
    y = _as_series(data)
    mA, mS = _grid_means(y, model, grid_A, grid_sigma)
    if check:
        fine_A = np.linspace(grid_A[0], grid_A[-1], 2 * len(grid_A) - 1)
        fine_S = np.linspace(grid_sigma[0], grid_sigma[-1], 2 * len(grid_sigma) - 1)
        fA, fS = _grid_means(y, model, fine_A, fine_S)
        if abs(fA - mA) > 0.005 * abs(fA) or abs(fS - mS) > 0.005 * abs(fS):
            raise CoarseGridError(f"grid too coarse: means moved from ({mA}, {mS}) to ({fA}, {fS})")
    return mA, mS


def write_chain_csv(chain: PosteriorChain, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("iter,A,sigma,accepted_A,accepted_sigma\n")
        for i, ((a, s), aa, asg) in enumerate(zip(chain.samples, chain.accepted_A, chain.accepted_sigma)):
            fh.write(f"{i},{format_float(a)},{format_float(s)},{int(aa)},{int(asg)}\n")


def read_chain_csv(path) -> np.ndarray:
    """Rows of ``iter, A, sigma, accepted_A, accepted_sigma`` as a float array."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_summary_json(estimate: AmplitudeEstimate, config: McmcConfig, model: AmplitudeModel, path) -> None:
    doc = {
        "estimate": estimate.to_dict(),
        "config": asdict(config),
        "model": asdict(model),
        "seed": config.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def with_seed(config: McmcConfig, seed: int) -> McmcConfig:
    return replace(config, seed=int(seed))
