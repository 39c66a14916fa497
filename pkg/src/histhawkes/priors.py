"""Prior densities for the log-parameters and the histogram structure.

Continuous parameters are sampled on the log scale: ``log mu``,
``log alpha`` and the log of each free histogram height. Three named
settings are supported:

``informative``
    ``Normal(log(x_true) - v/2, v)`` with variance ``v = 0.5``, so that the
    implied log-normal prior on the natural scale has mean ``x_true``.
``relatively_informative``
    Standard normal.
``quite_uninformative``
    ``Uniform(-5, 5)``.

The second argument of every normal here is a variance.

Two conventions are available for the knot-configuration prior
``Pi(s | J)``. ``"printed"`` is ``J! (s_max - J)! / s_max!``; it is not
normalised over the ``C(s_max - 1, J - 1)`` admissible configurations with
fixed endpoints, so combined with a uniform ``Pi(J)`` the joint target puts
mass proportional to ``J`` on each ``J``. ``"normalized"`` (the default
used by the sampler) is ``1 / C(s_max - 1, J - 1)``, which keeps ``J``
uniform. Both are uniform over configurations for fixed ``J``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import gammaln

__all__ = [
    "SETTINGS",
    "ContinuousPrior",
    "PriorConfig",
    "log_prior_continuous",
    "log_prior_structure",
    "gamma_avg",
]

SETTINGS = ("informative", "relatively_informative", "quite_uninformative")
PARAMETERS = ("baseline", "magnitude", "height")
INFORMATIVE_VARIANCE = 0.5
UNIFORM_BOUNDS = (-5.0, 5.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ContinuousPrior:
    """A normal (mean, variance) or uniform (low, high) density on a log-parameter."""

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind == "normal":
            if not self.b > 0:
                raise ValueError(f"normal prior variance must be positive, got {self.b}")
        elif self.kind == "uniform":
            if not self.a < self.b:
                raise ValueError(f"uniform bounds must be ordered, got ({self.a}, {self.b})")
        else:
            raise ValueError(f"unknown prior kind {self.kind!r}")

    def logpdf(self, x: float) -> float:
        if self.kind == "normal":
            z = x - self.a
            return -0.5 * z * z / self.b - 0.5 * math.log(self.b) - _LOG_SQRT_2PI
        if self.a <= x <= self.b:
            return -math.log(self.b - self.a)
        return -math.inf

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "normal":
            return self.a + math.sqrt(self.b) * rng.standard_normal()
        return rng.uniform(self.a, self.b)

    def to_dict(self) -> dict:
        if self.kind == "normal":
            return {"kind": "normal", "mean": self.a, "variance": self.b}
        return {"kind": "uniform", "low": self.a, "high": self.b}

    @classmethod
    def from_dict(cls, payload: dict) -> "ContinuousPrior":
        kind = payload["kind"]
        if kind == "normal":
            return cls("normal", float(payload["mean"]), float(payload["variance"]))
        if kind == "uniform":
            return cls("uniform", float(payload["low"]), float(payload["high"]))
        raise ValueError(f"unknown prior kind {kind!r}")


def _as_grid(value, K, name):
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full((K, K) if name != "baseline" else (K,), float(arr))
    return arr


@dataclass(frozen=True)
class PriorConfig:
    """Prior setting plus optional per-parameter overrides.

    Parameters
    ----------
    setting : str
        One of :data:`SETTINGS`.
    true_mu, true_alpha, true_gamma_avg : float or array, optional
        Required by the informative setting. ``true_mu`` may be a K-vector,
        the other two K x K grids; scalars are broadcast.
    overrides : dict, optional
        Maps ``"baseline"``, ``"magnitude"`` or ``"height"`` to a
        :class:`ContinuousPrior` (or its dict form) replacing the setting's
        default for that parameter everywhere.
    structure : {"normalized", "printed"}
        Convention for the knot-configuration prior.
    """

    setting: str = "relatively_informative"
    true_mu: Optional[object] = None
    true_alpha: Optional[object] = None
    true_gamma_avg: Optional[object] = None
    overrides: dict = field(default_factory=dict)
    structure: str = "normalized"

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ValueError(f"unknown prior setting {self.setting!r}; expected one of {SETTINGS}")
        if self.structure not in ("normalized", "printed"):
            raise ValueError(f"structure prior must be 'normalized' or 'printed', got {self.structure!r}")
        overrides = {}
        for name, prior in dict(self.overrides).items():
            if name not in PARAMETERS:
                raise ValueError(f"cannot override unknown parameter {name!r}")
            overrides[name] = prior if isinstance(prior, ContinuousPrior) else ContinuousPrior.from_dict(prior)
        object.__setattr__(self, "overrides", overrides)
        if self.setting == "informative":
            required = {"baseline": self.true_mu, "magnitude": self.true_alpha, "height": self.true_gamma_avg}
            missing = [n for n, v in required.items() if v is None and n not in overrides]
            if missing:
                raise ValueError(f"informative priors need true values for: {', '.join(missing)}")
            for name, value in required.items():
                if value is not None and np.any(np.asarray(value, dtype=float) <= 0):
                    raise ValueError(f"true value for {name} must be positive")

    def prior_for(self, which: str, index=()) -> ContinuousPrior:
        """The prior on the log of parameter ``which`` at ``index``.

        ``index`` is ``(k,)`` for a baseline and ``(l, k)`` for a magnitude
        or height; it only matters for the informative setting.
        """
        if which not in PARAMETERS:
            raise ValueError(f"unknown parameter {which!r}")
        if which in self.overrides:
            return self.overrides[which]
        if self.setting == "relatively_informative":
            return ContinuousPrior("normal", 0.0, 1.0)
        if self.setting == "quite_uninformative":
            return ContinuousPrior("uniform", *UNIFORM_BOUNDS)
        truth = {"baseline": self.true_mu, "magnitude": self.true_alpha, "height": self.true_gamma_avg}[which]
        arr = np.asarray(truth, dtype=float)
        value = float(arr) if arr.ndim == 0 else float(arr[tuple(index)])
        v = INFORMATIVE_VARIANCE
        return ContinuousPrior("normal", math.log(value) - v / 2.0, v)

    def log_prior_structure(self, J: int, s_max: int, knots=None) -> float:
        return log_prior_structure(J, knots, s_max, convention=self.structure)

    def with_truth(self, model, true_gamma_avg=None) -> "PriorConfig":
        """Copy with the informative-setting centres taken from ``model``."""
        if true_gamma_avg is None:
            true_gamma_avg = [[gamma_avg(kern) for kern in row] for row in model.kernels]
        return replace(self, true_mu=model.mu.tolist(), true_alpha=model.alpha.tolist(), true_gamma_avg=true_gamma_avg)

    def to_dict(self) -> dict:
        def plain(v):
            return None if v is None else np.asarray(v, dtype=float).tolist()

        return {
            "setting": self.setting,
            "true_mu": plain(self.true_mu),
            "true_alpha": plain(self.true_alpha),
            "true_gamma_avg": plain(self.true_gamma_avg),
            "overrides": {k: v.to_dict() for k, v in sorted(self.overrides.items())},
            "structure": self.structure,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PriorConfig":
        return cls(
            setting=payload.get("setting", "relatively_informative"),
            true_mu=payload.get("true_mu"),
            true_alpha=payload.get("true_alpha"),
            true_gamma_avg=payload.get("true_gamma_avg"),
            overrides=payload.get("overrides") or {},
            structure=payload.get("structure", "normalized"),
        )


def log_prior_continuous(config: PriorConfig, which: str, log_value: float, index=()) -> float:
    """Log-density of the prior on a log-parameter, evaluated at ``log_value``."""
    return config.prior_for(which, index).logpdf(float(log_value))


def _log_choose(n, r):
    return gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)


def log_prior_structure(J: int, knots, s_max: int, convention: str = "printed") -> float:
    """Log prior mass of a histogram structure ``(J, knots)``.

    ``convention="printed"`` gives ``log(1/s_max) + log(J! (s_max-J)! / s_max!)``;
    ``"normalized"`` replaces the second term by ``-log C(s_max-1, J-1)``.
    ``knots`` may be None, in which case only ``J`` is validated.
    """
    J = int(J)
    s_max = int(s_max)
    if s_max < 1 or not 1 <= J <= s_max:
        raise ValueError(f"need 1 <= J <= s_max, got J={J}, s_max={s_max}")
    if knots is not None:
        knots = [int(s) for s in knots]
        if (
            len(knots) != J + 1
            or knots[0] != 0
            or knots[-1] != s_max
            or any(b <= a for a, b in zip(knots, knots[1:]))
        ):
            raise ValueError(f"knots {knots} are not a valid structure for J={J}, s_max={s_max}")
    log_pj = -math.log(s_max)
    if convention == "printed":
        return float(log_pj - _log_choose(s_max, J))
    if convention == "normalized":
        return float(log_pj - _log_choose(s_max - 1, J - 1))
    raise ValueError(f"unknown structure prior convention {convention!r}")


def gamma_avg(kernel) -> float:
    """Mean of the unnormalised heights of ``kernel``, including the pinned first one."""
    return float(np.mean(kernel.heights))
