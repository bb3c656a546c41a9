"""Decomposition of multiple-periodically-correlated time series.

Stage one isolates each periodic component with a KZFT band-pass filter and
block-bootstraps it with block length equal to its period; stage two samples
each component's amplitude and noise scale with Metropolis-Hastings.  Fitted
sinusoids plus the linear trend give the reconstruction and forecast.
"""

from .bootstrap import BlockPlan, BootstrapEnsemble, make_block_plan, pbb_resample, periodic_mean_ci, sum_ensembles
from .kzft import (
    FilteredComponent,
    KzftParams,
    UnseparableFrequenciesError,
    choose_bandwidth,
    kzft_apply,
    kzft_coefficients,
    transfer_gain,
)
from .mcmc import (
    AmplitudeEstimate,
    AmplitudeModel,
    GammaPrior,
    McmcConfig,
    PosteriorChain,
    log_target,
    mh_step,
    posterior_oracle,
    run_chain,
    summarize,
)
from .pipeline import McpFit, RunConfig, SimulationSpec, reconstruct, residual_diagnostics, run_pipeline, write_run
from .series import SinusoidModel, TimeSeries, TrendLine, detrend_linear, load_milk, read_csv, simulate_mpc, write_csv
from .spectral import Periodogram, find_peaks, periodogram

__version__ = "0.1.0"
