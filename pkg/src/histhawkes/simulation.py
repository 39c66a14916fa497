"""Forward simulation of discrete-time Hawkes processes.

Days are drawn in order; each day's counts are Poisson with the intensity
implied by the counts already drawn. Random streams come from
:class:`numpy.random.SeedSequence`, whose hashing is fixed and portable.
Replicate ``i`` of seed ``s`` uses ``SeedSequence(s, spawn_key=(i,))``, so
it can be regenerated on its own.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import UnstableProcessError
from .model import CountSeries, DthpModel, spectral_stability

__all__ = ["SimulationConfig", "simulate", "simulate_batch", "replicate_rng"]

DEFAULT_COUNT_CEILING = 1e9


@dataclass(frozen=True)
class SimulationConfig:
    """What to simulate and how.

    ``warning`` is set (not raised) when the magnitude matrix has spectral
    radius of at least one.
    """

    model: DthpModel
    T: int
    seed: int = 0
    replicates: int = 1
    count_ceiling: float = DEFAULT_COUNT_CEILING

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T}")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not self.count_ceiling > 0:
            raise ValueError("count_ceiling must be positive")

    @property
    def warning(self) -> Optional[str]:
        stab = spectral_stability(self.model.alpha)
        if stab.stable:
            return None
        return f"magnitude matrix has spectral radius {stab.spectral_radius:.4g} >= 1; process is explosive"


def replicate_rng(seed: int, replicate: int = 0) -> np.random.Generator:
    """Random generator for one replicate of a seeded batch."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(replicate),))))


def _simulate(model: DthpModel, T: int, rng: np.random.Generator, count_ceiling: float) -> np.ndarray:
    K = model.K
    s_max = model.s_max
    # weights[l, k, d-1] = alpha[l, k] * g_lk(d)
    weights = model.alpha[:, :, None] * model.kernel_masses(s_max)
    # reversed so a window of the last s_max days lines up with lags s_max..1
    rev = weights[:, :, ::-1]
    y = np.zeros((K, T), dtype=np.int64)
    mu = model.mu
    for t in range(T):
        w = min(t, s_max)
        if w:
            past = y[:, t - w : t].astype(float)
            lam = mu + np.einsum("ld,lkd->k", past, rev[:, :, s_max - w :])
        else:
            lam = mu
        if np.any(lam > count_ceiling) or not np.all(np.isfinite(lam)):
            raise UnstableProcessError(
                f"intensity {float(np.max(lam)):.3g} exceeded the count ceiling {count_ceiling:.3g} on day {t}"
            )
        y[:, t] = rng.poisson(lam)
    return y


def simulate(config: SimulationConfig, replicate: int = 0) -> CountSeries:
    """Simulate one replicate of ``config``.

    Raises
    ------
    UnstableProcessError
        If an intensity exceeds ``config.count_ceiling``.
    """
    if config.warning:
        warnings.warn(config.warning, RuntimeWarning, stacklevel=2)
    rng = replicate_rng(config.seed, replicate)
    return CountSeries(_simulate(config.model, config.T, rng, config.count_ceiling))


def simulate_batch(config: SimulationConfig, n_replicates: Optional[int] = None) -> list:
    """Simulate ``n_replicates`` independent series (default ``config.replicates``)."""
    n = config.replicates if n_replicates is None else n_replicates
    if config.warning:
        warnings.warn(config.warning, RuntimeWarning, stacklevel=2)
    return [
        CountSeries(_simulate(config.model, config.T, replicate_rng(config.seed, i), config.count_ceiling))
        for i in range(n)
    ]
