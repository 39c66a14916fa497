"""Bayesian discrete-time Hawkes processes with random histogram kernels.

The main entry points are :class:`HistogramHawkes` (an sklearn-style
estimator), the lower-level :func:`run_parallel` sampler driver, and the
``histhawkes`` command-line tool.
"""

__version__ = "0.1.0"

from .exceptions import (
    ChainFailure,
    ConfigError,
    DimensionMismatchError,
    HistHawkesError,
    InvalidDataError,
    InvalidKernelError,
    NonFiniteLikelihoodError,
    UnstableProcessError,
)
from .kernels import GeometricKernel, HistogramKernel, histogram_masses
from .model import (
    CountSeries,
    DthpModel,
    intensities,
    intensity,
    log_likelihood,
    precompute_lag_counts,
    spectral_stability,
)
from .priors import ContinuousPrior, PriorConfig, log_prior_continuous, log_prior_structure
from .simulation import SimulationConfig, simulate, simulate_batch
from .sampler import ChainConfig, fit_geometric, run_chain, run_parallel
from .trace import SampleTrace
from .posterior import (
    band_coverage,
    five_number_summary,
    intensity_band,
    kernel_band,
    rmse_per_draw,
    static_summary,
)
from .diagnostics import diagnostics, effective_sample_size, split_rhat
from .data import load_counts, rolling_smooth, save_counts, split_phases
from .estimator import GeometricHawkes, HistogramHawkes

__all__ = [
    "__version__",
    "HistHawkesError",
    "ChainFailure",
    "ConfigError",
    "DimensionMismatchError",
    "InvalidDataError",
    "InvalidKernelError",
    "NonFiniteLikelihoodError",
    "UnstableProcessError",
    "GeometricKernel",
    "HistogramKernel",
    "histogram_masses",
    "CountSeries",
    "DthpModel",
    "intensities",
    "intensity",
    "log_likelihood",
    "precompute_lag_counts",
    "spectral_stability",
    "ContinuousPrior",
    "PriorConfig",
    "log_prior_continuous",
    "log_prior_structure",
    "SimulationConfig",
    "simulate",
    "simulate_batch",
    "ChainConfig",
    "fit_geometric",
    "run_chain",
    "run_parallel",
    "SampleTrace",
    "band_coverage",
    "five_number_summary",
    "intensity_band",
    "kernel_band",
    "rmse_per_draw",
    "static_summary",
    "diagnostics",
    "effective_sample_size",
    "split_rhat",
    "load_counts",
    "rolling_smooth",
    "save_counts",
    "split_phases",
    "GeometricHawkes",
    "HistogramHawkes",
]
