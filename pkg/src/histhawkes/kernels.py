"""Triggering kernels defined on integer lags 1..s_max.

Both kernel families expose the same small surface: ``s_max``,
``evaluate(lag)`` and ``masses()`` (the vector of per-lag masses for lags
1..s_max, summing to one).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .exceptions import InvalidKernelError

__all__ = [
    "HistogramKernel",
    "GeometricKernel",
    "kernel_evaluate",
    "geometric_evaluate",
    "histogram_masses",
]


def histogram_masses(knots, heights) -> np.ndarray:
    """Normalised per-lag masses of a step function.

    Lag ``d`` belongs to the half-open interval ``(s_{j-1}, s_j]`` and gets
    mass ``theta_j / sum_h (s_h - s_{h-1}) theta_h``.

    Parameters
    ----------
    knots : array_like of int
        ``(0, s_1, ..., s_J = s_max)``, strictly increasing.
    heights : array_like of float
        ``J`` positive unnormalised heights.

    Returns
    -------
    ndarray of shape (s_max,)
    """
    knots = np.asarray(knots)
    heights = np.asarray(heights, dtype=float)
    widths = np.diff(knots)
    denom = float(np.dot(widths, heights))
    return np.repeat(heights / denom, widths)


@dataclass(frozen=True)
class HistogramKernel:
    """Normalised random-histogram kernel.

    Parameters
    ----------
    knots : sequence of int
        Knot vector ``(0, s_1, ..., s_max)``. Interior knots are the change
        points; interval ``j`` is ``(s_{j-1}, s_j]``.
    heights : sequence of float
        Unnormalised heights ``(1, gamma_1, ..., gamma_{J-1})``. The first
        height is pinned to exactly 1 so that a given shape has a unique
        parameterisation.
    """

    knots: tuple
    heights: tuple

    def __post_init__(self):
        knots = tuple(int(s) for s in self.knots)
        heights = tuple(float(h) for h in self.heights)
        if any(int(s) != s for s in self.knots):
            raise InvalidKernelError(f"knots must be integers, got {self.knots}")
        if len(knots) < 2 or knots[0] != 0:
            raise InvalidKernelError(f"knots must start at 0 and end at s_max, got {knots}")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise InvalidKernelError(f"knots must be strictly increasing, got {knots}")
        if len(heights) != len(knots) - 1:
            raise InvalidKernelError(
                f"expected {len(knots) - 1} heights for {len(knots)} knots, got {len(heights)}"
            )
        if heights[0] != 1.0:
            raise InvalidKernelError(f"first height must be exactly 1, got {heights[0]}")
        if not all(np.isfinite(h) and h > 0 for h in heights):
            raise InvalidKernelError(f"heights must be finite and positive, got {heights}")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "heights", heights)

    @classmethod
    def flat(cls, s_max: int) -> "HistogramKernel":
        """Single-component kernel, uniform over lags 1..s_max."""
        return cls((0, int(s_max)), (1.0,))

    @classmethod
    def from_masses(cls, masses: Sequence[float]) -> "HistogramKernel":
        """Kernel with one component per lag reproducing ``masses``.

        Adjacent equal masses are merged so the result has the smallest
        number of components.
        """
        masses = np.asarray(masses, dtype=float)
        if masses.ndim != 1 or masses.size == 0 or np.any(masses <= 0):
            raise InvalidKernelError("masses must be a non-empty vector of positive values")
        knots = [0]
        heights = [masses[0]]
        for d in range(1, masses.size):
            if masses[d] != masses[d - 1]:
                knots.append(d)
                heights.append(masses[d])
        knots.append(masses.size)
        heights = np.asarray(heights) / heights[0]
        heights[0] = 1.0
        return cls(tuple(knots), tuple(heights))

    @property
    def s_max(self) -> int:
        return self.knots[-1]

    @property
    def n_components(self) -> int:
        return len(self.heights)

    @property
    def interior_knots(self) -> tuple:
        return self.knots[1:-1]

    @cached_property
    def _masses(self) -> np.ndarray:
        masses = histogram_masses(self.knots, self.heights)
        masses.setflags(write=False)
        return masses

    def masses(self) -> np.ndarray:
        """Per-lag masses for lags ``1..s_max`` (read-only array)."""
        return self._masses

    def evaluate(self, lag):
        """Mass at integer ``lag`` (scalar or array); zero beyond ``s_max``."""
        return _evaluate_from_masses(self._masses, lag)

    def to_dict(self) -> dict:
        return {"type": "histogram", "knots": list(self.knots), "heights": list(self.heights)}


@dataclass(frozen=True)
class GeometricKernel:
    """Geometric kernel ``beta (1 - beta)^(d - 1)`` truncated to lags 1..s_max.

    The truncated mass is renormalised so the kernel sums to one and the
    magnitude parameter keeps its branching-ratio meaning.
    """

    beta: float
    s_max: int = 7

    def __post_init__(self):
        beta = float(self.beta)
        if not (0.0 < beta < 1.0):
            raise InvalidKernelError(f"beta must lie in (0, 1), got {beta}")
        if int(self.s_max) != self.s_max or self.s_max < 1:
            raise InvalidKernelError(f"s_max must be a positive integer, got {self.s_max}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "s_max", int(self.s_max))

    @property
    def n_components(self) -> int:
        return self.s_max

    @cached_property
    def _masses(self) -> np.ndarray:
        masses = geometric_masses(self.beta, self.s_max)
        masses.setflags(write=False)
        return masses

    def masses(self) -> np.ndarray:
        return self._masses

    def evaluate(self, lag):
        return _evaluate_from_masses(self._masses, lag)

    def to_dict(self) -> dict:
        return {"type": "geometric", "beta": self.beta, "s_max": self.s_max}


def geometric_masses(beta: float, s_max: int) -> np.ndarray:
    q = 1.0 - beta
    lags = np.arange(s_max)
    return beta * q**lags / (1.0 - q**s_max)


def _evaluate_from_masses(masses, lag):
    lag_arr = np.asarray(lag)
    if np.any(lag_arr < 1):
        raise ValueError("lags must be positive integers")
    if lag_arr.ndim == 0:
        d = int(lag_arr)
        return float(masses[d - 1]) if d <= masses.size else 0.0
    out = np.zeros(lag_arr.shape)
    inside = lag_arr <= masses.size
    out[inside] = masses[lag_arr[inside].astype(int) - 1]
    return out


def kernel_evaluate(kernel: HistogramKernel, lag):
    """Mass of a histogram kernel at ``lag``."""
    return kernel.evaluate(lag)


def geometric_evaluate(kernel: GeometricKernel, lag):
    """Mass of a truncated geometric kernel at ``lag``."""
    return kernel.evaluate(lag)


def kernel_from_dict(payload: dict):
    kind = payload.get("type", "histogram")
    if kind == "histogram":
        return HistogramKernel(tuple(payload["knots"]), tuple(payload["heights"]))
    if kind == "geometric":
        return GeometricKernel(payload["beta"], payload["s_max"])
    raise InvalidKernelError(f"unknown kernel type {kind!r}")
