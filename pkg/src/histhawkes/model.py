"""Count series, the multivariate DTHP model, intensities and likelihood.

Time indices in this module are 0-based: ``t = 0`` is the first day and has
an empty history, so its intensity is the baseline.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import gammaln

from .exceptions import DimensionMismatchError, InvalidDataError, NonFiniteLikelihoodError
from .kernels import GeometricKernel, HistogramKernel

__all__ = [
    "CountSeries",
    "DthpModel",
    "Stability",
    "precompute_lag_counts",
    "intensity",
    "intensities",
    "log_likelihood",
    "spectral_stability",
]


@dataclass(frozen=True)
class CountSeries:
    """K parallel sequences of daily event counts.

    Parameters
    ----------
    counts : array_like, shape (K, T)
        Non-negative counts, one row per dimension. A 1-d input is treated
        as a single dimension.
    labels : sequence of str, optional
    start_date : datetime.date, optional
        Calendar date of the first column.
    allow_real : bool
        Accept non-integer counts (for smoothed data evaluated with the
        log-gamma form of the Poisson mass).
    """

    counts: np.ndarray
    labels: Optional[tuple] = None
    start_date: Optional[_dt.date] = None
    allow_real: bool = False

    def __post_init__(self):
        try:
            raw = np.asarray(self.counts, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidDataError(f"counts are not numeric: {exc}") from None
        if raw.ndim == 1:
            raw = raw[None, :]
        if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
            raise InvalidDataError(f"counts must be a non-empty (K, T) grid, got shape {raw.shape}")
        if not np.all(np.isfinite(raw)):
            raise InvalidDataError("counts contain NaN or infinite values")
        if np.any(raw < 0):
            k, t = np.argwhere(raw < 0)[0]
            raise InvalidDataError(f"negative count at dimension {k}, time {t}")
        if self.allow_real:
            arr = raw
        else:
            if np.any(raw != np.round(raw)):
                k, t = np.argwhere(raw != np.round(raw))[0]
                raise InvalidDataError(f"non-integer count at dimension {k}, time {t}")
            arr = raw.astype(np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != arr.shape[0]:
                raise InvalidDataError(f"{len(labels)} labels for {arr.shape[0]} dimensions")
            object.__setattr__(self, "labels", labels)

    @property
    def K(self) -> int:
        return self.counts.shape[0]

    @property
    def T(self) -> int:
        return self.counts.shape[1]

    def dimension_labels(self) -> tuple:
        if self.labels is not None:
            return self.labels
        return tuple(f"dim_{k + 1}" for k in range(self.K))

    def dates(self):
        if self.start_date is None:
            return None
        return [self.start_date + _dt.timedelta(days=i) for i in range(self.T)]

    def slice(self, start: int, stop: int) -> "CountSeries":
        """Sub-series over columns ``start:stop`` (dates shifted accordingly)."""
        start_date = None
        if self.start_date is not None:
            start_date = self.start_date + _dt.timedelta(days=start)
        return CountSeries(self.counts[:, start:stop], self.labels, start_date, self.allow_real)

    def __eq__(self, other):
        if not isinstance(other, CountSeries):
            return NotImplemented
        return (
            self.counts.shape == other.counts.shape
            and bool(np.array_equal(self.counts, other.counts))
            and self.labels == other.labels
            and self.start_date == other.start_date
        )

    __hash__ = None


@dataclass(frozen=True)
class DthpModel:
    """Baselines, magnitudes and kernels of a K-dimensional DTHP.

    ``alpha[l, k]`` and ``kernels[l][k]`` describe excitation from source
    dimension ``l`` onto target dimension ``k``.
    """

    mu: np.ndarray
    alpha: np.ndarray
    kernels: tuple = field(default=())

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        K = mu.size
        alpha = np.asarray(self.alpha, dtype=float).reshape(K, K).copy()
        if np.any(~np.isfinite(mu)) or np.any(mu <= 0):
            raise ValueError(f"baselines must be finite and positive, got {mu}")
        if np.any(~np.isfinite(alpha)) or np.any(alpha < 0):
            raise ValueError(f"magnitudes must be finite and non-negative, got {alpha}")
        kernels = self.kernels
        if isinstance(kernels, (HistogramKernel, GeometricKernel)):
            kernels = [[kernels]]
        kernels = tuple(tuple(row) for row in kernels)
        if len(kernels) != K or any(len(row) != K for row in kernels):
            raise DimensionMismatchError(f"kernels must form a {K}x{K} grid")
        mu.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "kernels", kernels)

    @property
    def K(self) -> int:
        return self.mu.size

    @property
    def s_max(self) -> int:
        """Longest kernel support over all pairs."""
        return max(kern.s_max for row in self.kernels for kern in row)

    def kernel_masses(self, s_max: Optional[int] = None) -> np.ndarray:
        """Stacked kernel masses, shape (K, K, s_max), zero-padded."""
        s_max = self.s_max if s_max is None else s_max
        out = np.zeros((self.K, self.K, s_max))
        for l, row in enumerate(self.kernels):
            for k, kern in enumerate(row):
                m = kern.masses()
                out[l, k, : m.size] = m[:s_max]
        return out

    def to_dict(self) -> dict:
        return {
            "mu": self.mu.tolist(),
            "alpha": self.alpha.tolist(),
            "kernels": [[kern.to_dict() for kern in row] for row in self.kernels],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DthpModel":
        from .kernels import kernel_from_dict

        kernels = [[kernel_from_dict(kd) for kd in row] for row in payload["kernels"]]
        return cls(payload["mu"], payload["alpha"], kernels)


def precompute_lag_counts(series: CountSeries, s_max: int) -> np.ndarray:
    """Lag-count cache ``C[t, l, d-1] = y[l, t-d]`` for ``1 <= d <= min(t, s_max)``.

    Entries that would reach before the start of the series are zero. The
    returned array has shape (T, K, s_max) and is read-only.
    """
    y = np.asarray(series.counts, dtype=float)
    K, T = y.shape
    cache = np.zeros((T, K, s_max))
    for d in range(1, min(s_max, T - 1) + 1):
        cache[d:, :, d - 1] = y[:, : T - d].T
    cache.setflags(write=False)
    return cache


def _check_dims(model: DthpModel, series: CountSeries):
    if model.K != series.K:
        raise DimensionMismatchError(f"model has K={model.K} but series has K={series.K}")


def intensities(model: DthpModel, series: CountSeries, cache: Optional[np.ndarray] = None) -> np.ndarray:
    """Conditional intensities for every dimension and day, shape (K, T)."""
    _check_dims(model, series)
    s_max = model.s_max
    if cache is None:
        cache = precompute_lag_counts(series, s_max)
    elif cache.shape[2] < s_max or cache.shape[:2] != (series.T, series.K):
        raise DimensionMismatchError(f"lag cache of shape {cache.shape} does not fit the model")
    masses = model.kernel_masses(cache.shape[2])
    excitation = np.einsum("tld,lkd->lkt", cache, masses)
    return model.mu[:, None] + np.einsum("lk,lkt->kt", model.alpha, excitation)


def intensity(model: DthpModel, series: CountSeries, t: int, k: int) -> float:
    """Expected count in dimension ``k`` on day ``t`` given strictly earlier days."""
    _check_dims(model, series)
    if not (0 <= t < series.T):
        raise IndexError(f"t={t} outside 0..{series.T - 1}")
    if not (0 <= k < model.K):
        raise IndexError(f"k={k} outside 0..{model.K - 1}")
    y = series.counts
    total = float(model.mu[k])
    for l in range(model.K):
        kern = model.kernels[l][k]
        m = kern.masses()
        window = min(t, m.size)
        if window == 0:
            continue
        past = y[l, t - window : t][::-1]
        total += model.alpha[l, k] * float(np.dot(past, m[:window]))
    return total


def poisson_log_mass(counts: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Row-wise ``sum_t y log(rate) - rate - log(y!)`` for (K, T) inputs."""
    y = np.asarray(counts, dtype=float)
    return (y * np.log(rates)).sum(axis=-1) - rates.sum(axis=-1) - gammaln(y + 1.0).sum(axis=-1)


def log_likelihood(model: DthpModel, series: CountSeries, cache: Optional[np.ndarray] = None) -> float:
    """Full Poisson log-likelihood of ``series`` under ``model``.

    Includes the ``-log(y!)`` constant. Raises
    :class:`NonFiniteLikelihoodError` rather than returning NaN or inf.
    """
    lam = intensities(model, series, cache)
    value = float(poisson_log_mass(series.counts, lam).sum())
    if not np.isfinite(value):
        raise NonFiniteLikelihoodError(f"log-likelihood is {value}")
    return value


class Stability(NamedTuple):
    stable: bool
    spectral_radius: float


def spectral_stability(alpha, tol: float = 1e-10, max_iter: int = 10_000) -> Stability:
    """Spectral radius of a non-negative magnitude matrix by power iteration.

    Iterates on ``alpha + I``, whose dominant eigenvalue is ``rho + 1`` and
    is strictly dominant for non-negative matrices, so periodic matrices
    converge too. Defective matrices make the iteration crawl, so an
    estimate whose eigen-residual stays large is replaced by a dense
    eigenvalue solve. The process is reported stable iff ``rho < 1 - tol``.
    """
    a = np.atleast_2d(np.asarray(alpha, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"alpha must be square, got {a.shape}")
    if np.any(a < 0):
        raise ValueError("alpha must be non-negative")
    shifted = a + np.eye(a.shape[0])
    v = np.full(a.shape[0], 1.0 / np.sqrt(a.shape[0]))
    estimate = 0.0
    converged = True
    for _ in range(max_iter):
        w = shifted @ v
        norm = np.linalg.norm(w)
        new_estimate = float(v @ w)
        v = w / norm
        if abs(new_estimate - estimate) < tol:
            estimate = new_estimate
            break
        estimate = new_estimate
    else:
        converged = False
    if not converged or np.linalg.norm(shifted @ v - estimate * v) > 100 * tol * max(1.0, estimate):
        estimate = float(np.max(np.abs(np.linalg.eigvals(shifted))))
    radius = max(estimate - 1.0, 0.0)
    # radii within tol of 1 are indistinguishable from critical
    return Stability(radius < 1.0 - tol, radius)
