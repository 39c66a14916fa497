"""Posterior summaries: kernel bands, RMSE against a known kernel, intensity
bands and static-parameter summaries.

All quantiles use linear interpolation between order statistics
(``numpy.quantile(..., method="linear")``). The default 80% band runs from
the 10% to the 90% quantile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError
from .model import CountSeries, precompute_lag_counts
from .trace import SampleTrace

__all__ = [
    "KernelBand",
    "kernel_band",
    "rmse_per_draw",
    "five_number_summary",
    "intensity_band",
    "static_summary",
    "band_coverage",
]

LOWER_Q = 0.10
UPPER_Q = 0.90


def _quantiles(x, axis=0):
    return np.quantile(x, [LOWER_Q, 0.5, UPPER_Q], axis=axis, method="linear")


def _require_draws(trace):
    if len(trace) == 0:
        raise ValueError("trace holds no draws")


@dataclass(frozen=True)
class KernelBand:
    """Per-lag posterior summary of one kernel; arrays are indexed by lag - 1."""

    lags: np.ndarray
    mean: np.ndarray
    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def contains(self, truth) -> np.ndarray:
        """Boolean per lag: is ``truth`` (kernel or mass vector) inside the band?"""
        values = truth.masses() if hasattr(truth, "masses") else np.asarray(truth, dtype=float)
        return (self.lower <= values) & (values <= self.upper)

    def rows(self):
        for i, d in enumerate(self.lags):
            yield int(d), float(self.mean[i]), float(self.median[i]), float(self.lower[i]), float(self.upper[i])


def kernel_band(trace: SampleTrace, l: int = 0, k: int = 0) -> KernelBand:
    """Mean, median and 80% interval of kernel ``(l, k)`` at every lag."""
    _require_draws(trace)
    masses = trace.kernel_masses(l, k)
    lower, median, upper = _quantiles(masses)
    return KernelBand(np.arange(1, masses.shape[1] + 1), masses.mean(axis=0), median, lower, upper)


def rmse_per_draw(trace: SampleTrace, l: int, k: int, truth) -> np.ndarray:
    """Root mean squared difference to ``truth`` over lags 1..s_max, per draw."""
    _require_draws(trace)
    masses = trace.kernel_masses(l, k)
    if truth.s_max != masses.shape[1]:
        raise ValueError(f"truth has s_max={truth.s_max} but the trace kernels have s_max={masses.shape[1]}")
    diff = masses - truth.masses()[None, :]
    return np.sqrt(np.mean(diff * diff, axis=1))


def five_number_summary(values) -> dict:
    """Minimum, quartiles and maximum (boxplot inputs)."""
    q = np.quantile(np.asarray(values, dtype=float), [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return dict(zip(("min", "q1", "median", "q3", "max"), map(float, q)))


def draw_intensities(trace: SampleTrace, data: CountSeries, t_slice=slice(None), cache=None) -> np.ndarray:
    """Intensities of every draw on the days in ``t_slice``, shape (n_draws, K, n_days)."""
    if trace.K != data.K:
        raise DimensionMismatchError(f"trace has K={trace.K} but data has K={data.K}")
    S = trace.masses.shape[-1]
    if cache is None:
        cache = precompute_lag_counts(data, S)
    # excitation[n, l, k, t] = sum_d C[t, l, d] g_lk^(n)(d)
    exc = np.einsum("tld,nlkd->nlkt", cache[t_slice], trace.masses, optimize=True)
    return trace.mu[:, :, None] + np.einsum("nlk,nlkt->nkt", trace.alpha, exc, optimize=True)


def intensity_band(trace: SampleTrace, data: CountSeries, chunk=None) -> dict:
    """Median and 80% interval of the intensity at every ``(k, t)``.

    Returns a dict of ``lower``, ``median`` and ``upper`` arrays of shape
    (K, T). Days are processed in chunks to bound memory.
    """
    _require_draws(trace)
    if trace.K != data.K:
        raise DimensionMismatchError(f"trace has K={trace.K} but data has K={data.K}")
    cache = precompute_lag_counts(data, trace.masses.shape[-1])
    if chunk is None:
        chunk = max(1, int(2e7 // (len(trace) * data.K * data.K)))
    out = np.zeros((3, data.K, data.T))
    for start in range(0, data.T, chunk):
        sl = slice(start, min(start + chunk, data.T))
        lam = draw_intensities(trace, data, sl, cache)
        out[:, :, sl] = _quantiles(lam)
    return {"lower": out[0], "median": out[1], "upper": out[2]}


def band_coverage(band: dict, truth) -> float:
    """Fraction of points where ``truth`` lies inside ``[lower, upper]``."""
    truth = np.asarray(truth)
    inside = (band["lower"] <= truth) & (truth <= band["upper"])
    return float(inside.mean())


def static_summary(trace: SampleTrace) -> dict:
    """Natural-scale medians and 80% intervals of every baseline and magnitude.

    Keys are ``"mu[k]"`` and ``"alpha[l,k]"`` (0-based); values are dicts
    with ``median``, ``lower`` and ``upper``.
    """
    _require_draws(trace)
    out = {}
    q_mu = _quantiles(trace.mu)
    for k in range(trace.K):
        out[f"mu[{k}]"] = {"median": float(q_mu[1, k]), "lower": float(q_mu[0, k]), "upper": float(q_mu[2, k])}
    q_alpha = _quantiles(trace.alpha)
    for l in range(trace.K):
        for k in range(trace.K):
            out[f"alpha[{l},{k}]"] = {
                "median": float(q_alpha[1, l, k]),
                "lower": float(q_alpha[0, l, k]),
                "upper": float(q_alpha[2, l, k]),
            }
    return out
