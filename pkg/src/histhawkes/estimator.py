"""scikit-learn style wrappers around the samplers.

``X`` is a count matrix of shape (n_days, n_dimensions), the usual sklearn
orientation; internally series are stored as (K, T).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .model import CountSeries, log_likelihood
from .posterior import intensity_band, kernel_band, static_summary
from .priors import PriorConfig
from .sampler import ChainConfig, run_parallel

__all__ = ["HistogramHawkes", "GeometricHawkes"]


class _HawkesEstimator(BaseEstimator):
    _family = "histogram"

    def __init__(
        self,
        s_max=7,
        prior="relatively_informative",
        n_iter=60_000,
        burn_in=30_000,
        n_chains=3,
        thin=1,
        step_size=0.1,
        random_state=0,
        n_jobs=1,
    ):
        self.s_max = s_max
        self.prior = prior
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.n_chains = n_chains
        self.thin = thin
        self.step_size = step_size
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _series(self, X, allow_real=False):
        X = check_array(X, dtype="numeric", ensure_min_samples=2)
        if np.any(X < 0):
            raise ValueError("counts must be non-negative")
        return CountSeries(X.T, allow_real=allow_real or bool(np.any(X != np.round(X))))

    def _priors(self):
        if isinstance(self.prior, PriorConfig):
            return self.prior
        return PriorConfig(setting=self.prior)

    def _chain_config(self):
        seed = self.random_state if self.random_state is not None else 0
        return ChainConfig(
            iterations=self.n_iter,
            burn_in=self.burn_in,
            n_chains=self.n_chains,
            thin=self.thin,
            s_max=self.s_max,
            baseline_step=self.step_size,
            magnitude_step=self.step_size,
            height_step=self.step_size,
            beta_step=self.step_size,
            seed=int(seed),
            workers=self.n_jobs,
        )

    def fit(self, X, y=None):
        """Sample the posterior given counts ``X`` of shape (n_days, K).

        Sets ``trace_``, ``mu_`` and ``alpha_`` (posterior medians),
        ``kernel_bands_`` (a K x K list of :class:`KernelBand`) and
        ``n_features_in_``.
        """
        series = self._series(X)
        self.trace_ = run_parallel(series, self._priors(), self._chain_config(), family=self._family, workers=self.n_jobs)
        K = series.K
        self.n_features_in_ = K
        self.mu_ = np.median(self.trace_.mu, axis=0)
        self.alpha_ = np.median(self.trace_.alpha, axis=0)
        self.kernel_bands_ = [[kernel_band(self.trace_, l, k) for k in range(K)] for l in range(K)]
        self.static_summary_ = static_summary(self.trace_)
        return self

    def _checked(self, X):
        check_is_fitted(self, "trace_")
        series = self._series(X)
        if series.K != self.n_features_in_:
            raise ValueError(f"X has {series.K} columns, the model was fitted on {self.n_features_in_}")
        return series

    def predict_interval(self, X):
        """Posterior median and 80% band of the intensity, each (n_days, K)."""
        series = self._checked(X)
        band = intensity_band(self.trace_, series)
        return {key: value.T for key, value in band.items()}

    def predict(self, X):
        """Posterior median intensity on each day of ``X``, shape (n_days, K)."""
        return self.predict_interval(X)["median"]

    def score(self, X, y=None):
        """Mean over draws of the log-likelihood of ``X``."""
        series = self._checked(X)
        idx = np.linspace(0, len(self.trace_) - 1, min(len(self.trace_), 200)).astype(int)
        return float(np.mean([log_likelihood(self.trace_.model(i), series) for i in idx]))


class HistogramHawkes(_HawkesEstimator):
    """DTHP with random histogram kernels fitted by reversible-jump MCMC.

    Parameters
    ----------
    s_max : int or array of shape (K, K)
        Kernel support in days.
    prior : str or PriorConfig
        Prior setting name or a full prior configuration.
    n_iter, burn_in, n_chains, thin : int
        Chain length, discarded prefix, number of chains and thinning.
    step_size : float
        Variance of every random-walk proposal.
    random_state : int
        Seed; results are identical for any ``n_jobs``.
    n_jobs : int
        Worker processes for the chains.

    Examples
    --------
    >>> est = HistogramHawkes(n_iter=200, burn_in=100, n_chains=1)
    >>> est.fit(X).predict(X).shape  # doctest: +SKIP
    (500, 1)
    """

    _family = "histogram"


class GeometricHawkes(_HawkesEstimator):
    """DTHP with truncated geometric kernels, a parametric baseline."""

    _family = "geometric"
