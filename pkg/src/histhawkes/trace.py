"""Storage for posterior draws."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernels import GeometricKernel, HistogramKernel
from .model import DthpModel

__all__ = ["SampleTrace", "MOVES"]

MOVES = ("baseline", "magnitude", "height", "shift", "birth", "death", "beta")


def empty_counters() -> dict:
    return {m: {"attempted": 0, "accepted": 0, "skipped": 0} for m in MOVES}


def merge_counters(counters) -> dict:
    out = empty_counters()
    for c in counters:
        for move, vals in c.items():
            for key, n in vals.items():
                out[move][key] += n
    return out


@dataclass
class SampleTrace:
    """Ordered post-burn-in draws from one chain or a pooled set of chains.

    Arrays are indexed by draw first. Histogram structure is stored padded:
    ``knots[n, l, k, :J+1]`` is the knot vector and ``heights[n, l, k, :J]``
    the heights, with ``-1`` / NaN beyond. ``masses[n, l, k, :s_max[l, k]]``
    holds the normalised kernel at lags 1..s_max.
    """

    family: str
    s_max: np.ndarray
    iteration: np.ndarray
    chain: np.ndarray
    mu: np.ndarray
    alpha: np.ndarray
    masses: np.ndarray
    n_components: Optional[np.ndarray] = None
    knots: Optional[np.ndarray] = None
    heights: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    acceptance: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    fingerprint: str = ""
    checkpoints: list = field(default_factory=list)

    def __len__(self) -> int:
        return self.iteration.size

    @property
    def K(self) -> int:
        return self.mu.shape[1]

    @property
    def n_chains(self) -> int:
        return len(self.acceptance)

    def kernel_masses(self, l: int, k: int) -> np.ndarray:
        """Per-draw kernel masses for pair ``(l, k)``, shape (n_draws, s_max)."""
        return self.masses[:, l, k, : int(self.s_max[l, k])]

    def acceptance_totals(self) -> dict:
        return merge_counters(self.acceptance)

    def kernel(self, i: int, l: int, k: int):
        if self.family == "geometric":
            return GeometricKernel(float(self.beta[i, l, k]), int(self.s_max[l, k]))
        J = int(self.n_components[i, l, k])
        return HistogramKernel(
            tuple(int(s) for s in self.knots[i, l, k, : J + 1]),
            tuple(float(h) for h in self.heights[i, l, k, :J]),
        )

    def model(self, i: int) -> DthpModel:
        """The full model stored at draw ``i``."""
        K = self.K
        kernels = [[self.kernel(i, l, k) for k in range(K)] for l in range(K)]
        return DthpModel(self.mu[i], self.alpha[i], kernels)

    def chain_slices(self) -> list:
        """Per-chain sub-traces, in chain order."""
        out = []
        for pos, c in enumerate(np.unique(self.chain)):
            idx = np.flatnonzero(self.chain == c)
            sub = self.take(idx)
            sub.acceptance = [self.acceptance[pos]] if pos < len(self.acceptance) else []
            sub.seeds = [self.seeds[pos]] if pos < len(self.seeds) else []
            sub.checkpoints = [self.checkpoints[pos]] if pos < len(self.checkpoints) else []
            out.append(sub)
        return out

    def take(self, idx) -> "SampleTrace":
        def sel(a):
            return None if a is None else a[idx]

        return SampleTrace(
            family=self.family,
            s_max=self.s_max,
            iteration=self.iteration[idx],
            chain=self.chain[idx],
            mu=self.mu[idx],
            alpha=self.alpha[idx],
            masses=self.masses[idx],
            n_components=sel(self.n_components),
            knots=sel(self.knots),
            heights=sel(self.heights),
            beta=sel(self.beta),
            acceptance=list(self.acceptance),
            seeds=list(self.seeds),
            fingerprint=self.fingerprint,
            checkpoints=list(self.checkpoints),
        )

    @classmethod
    def concatenate(cls, traces) -> "SampleTrace":
        """Pool traces in the given order."""
        traces = list(traces)
        if not traces:
            raise ValueError("nothing to concatenate")
        first = traces[0]
        for tr in traces[1:]:
            if tr.family != first.family or not np.array_equal(tr.s_max, first.s_max):
                raise ValueError("cannot pool traces of different kernel families or supports")

        def cat(name):
            parts = [getattr(tr, name) for tr in traces]
            if parts[0] is None:
                return None
            if name == "knots":
                width = max(p.shape[-1] for p in parts)
                parts = [np.pad(p, [(0, 0)] * (p.ndim - 1) + [(0, width - p.shape[-1])], constant_values=-1) for p in parts]
            if name == "heights":
                width = max(p.shape[-1] for p in parts)
                parts = [np.pad(p, [(0, 0)] * (p.ndim - 1) + [(0, width - p.shape[-1])], constant_values=np.nan) for p in parts]
            return np.concatenate(parts, axis=0)

        return cls(
            family=first.family,
            s_max=first.s_max,
            iteration=cat("iteration"),
            chain=cat("chain"),
            mu=cat("mu"),
            alpha=cat("alpha"),
            masses=cat("masses"),
            n_components=cat("n_components"),
            knots=cat("knots"),
            heights=cat("heights"),
            beta=cat("beta"),
            acceptance=[c for tr in traces for c in tr.acceptance],
            seeds=[s for tr in traces for s in tr.seeds],
            fingerprint=first.fingerprint,
            checkpoints=[c for tr in traces for c in tr.checkpoints],
        )
