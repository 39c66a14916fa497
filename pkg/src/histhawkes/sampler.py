"""Reversible-jump MCMC for histogram-kernel DTHPs and an MH sampler for the
geometric-kernel baseline.

One sweep of the histogram sampler, in order:

1. a log-scale random-walk update of every baseline ``mu^k``;
2. for every pair ``(l, k)``: a log-scale random-walk update of
   ``alpha^{lk}``, one-at-a-time updates of the free heights, and one
   knot-shift proposal;
3. one birth-death proposal for every pair.

The likelihood is maintained per target dimension. A proposal touching
pair ``(l, k)`` only recomputes dimension ``k``, and every cached quantity is
rebuilt from its components (never updated by increments) so the cache
cannot drift from a fresh evaluation.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .exceptions import ChainFailure
from .kernels import geometric_masses, histogram_masses
from .model import CountSeries, DthpModel, log_likelihood, precompute_lag_counts
from .priors import PriorConfig, log_prior_structure
from .trace import SampleTrace, empty_counters

__all__ = [
    "ChainConfig",
    "HistogramSampler",
    "GeometricSampler",
    "run_chain",
    "run_parallel",
    "fit_geometric",
    "chain_rng",
]

CHECKPOINT_VERSION = 1
_INIT_RETRIES = 100
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ChainConfig:
    """Sampler settings.

    Step sizes are variances of the Gaussian random-walk increments on the
    log (or, for ``beta``, logit) scale. ``birth_height_variance`` is the
    variance of the normal proposal for a newborn height.
    ``constant_likelihood`` replaces the likelihood with zero so the chain
    samples the prior; it exists for correctness checks.
    """

    iterations: int = 60_000
    burn_in: int = 30_000
    n_chains: int = 3
    thin: int = 1
    s_max: object = 7
    baseline_step: float = 0.1
    magnitude_step: float = 0.1
    height_step: float = 0.1
    beta_step: float = 0.1
    birth_height_variance: float = 0.1
    birth_probability: float = 0.5
    seed: int = 0
    workers: int = 1
    constant_likelihood: bool = False
    check_every: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError(f"burn_in must lie in [0, iterations), got {self.burn_in}")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.n_chains < 1:
            raise ValueError("n_chains must be at least 1")
        if not 0.0 <= self.birth_probability <= 1.0:
            raise ValueError("birth_probability must lie in [0, 1]")
        for name in ("baseline_step", "magnitude_step", "height_step", "beta_step", "birth_height_variance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        smax = np.asarray(self.s_max)
        if np.any(smax < 1) or np.any(smax != np.round(smax)):
            raise ValueError(f"s_max must be positive integers, got {self.s_max}")

    @property
    def n_draws(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    def s_max_grid(self, K: int) -> np.ndarray:
        smax = np.asarray(self.s_max, dtype=int)
        if smax.ndim == 0:
            return np.full((K, K), int(smax))
        return smax.reshape(K, K)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["s_max"] = np.asarray(self.s_max).tolist()
        return d

    @classmethod
    def from_dict(cls, payload: dict) -> "ChainConfig":
        known = {k: v for k, v in payload.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    """Independent stream for chain ``chain_index`` of a seeded run."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(0xC4A1, int(chain_index)))
    return np.random.Generator(np.random.PCG64(ss))


def fingerprint(data: CountSeries, priors: PriorConfig, config: ChainConfig, family: str) -> str:
    """Short hash identifying a fit's inputs (worker count excluded)."""
    cfg = config.to_dict()
    cfg.pop("workers", None)
    payload = json.dumps(
        {"family": family, "priors": priors.to_dict(), "config": cfg}, sort_keys=True
    ).encode()
    h = hashlib.sha256(payload)
    h.update(np.ascontiguousarray(data.counts, dtype=float).tobytes())
    return h.hexdigest()[:16]


def _log(p):
    return math.log(p) if p > 0.0 else -math.inf


def _normal_logpdf(x, mean, var):
    z = x - mean
    return -0.5 * z * z / var - 0.5 * math.log(var) - 0.5 * _LOG_2PI


class _SamplerBase:
    """Shared state: static parameters, excitation cache and per-dimension likelihood."""

    family = ""

    def __init__(self, data: CountSeries, priors: PriorConfig, config: ChainConfig, rng, lag_cache=None):
        self.data = data
        self.priors = priors
        self.config = config
        self.rng = rng
        self.K = K = data.K
        self.T = data.T
        self.y = np.asarray(data.counts, dtype=float)
        self.s_max = config.s_max_grid(K)
        S = int(self.s_max.max())
        if lag_cache is None:
            lag_cache = precompute_lag_counts(data, S)
        self.lag_cache = lag_cache
        self._lags = [np.ascontiguousarray(lag_cache[:, l, :]) for l in range(K)]
        self._ll_const = gammaln(self.y + 1.0).sum(axis=1)
        self._constant = config.constant_likelihood
        self.prior_mu = [priors.prior_for("baseline", (k,)) for k in range(K)]
        self.prior_alpha = [[priors.prior_for("magnitude", (l, k)) for k in range(K)] for l in range(K)]
        self.counters = empty_counters()
        self.iteration = 0
        self.log_mu = np.zeros(K)
        self.log_alpha = np.zeros((K, K))
        self.mu = np.ones(K)
        self.alpha = np.ones((K, K))

    # likelihood plumbing -------------------------------------------------

    def _loglik_dim(self, k, lam):
        if self._constant:
            return 0.0
        value = float(np.dot(self.y[k], np.log(lam)) - lam.sum() - self._ll_const[k])
        return value if math.isfinite(value) else -math.inf

    def _excitation(self, l, masses):
        s = masses.size
        return self._lags[l][:, :s] @ masses

    def _lambda(self, k, mu_k=None, alpha_col=None, exc_col=None):
        mu_k = self.mu[k] if mu_k is None else mu_k
        alpha_col = self.alpha[:, k] if alpha_col is None else alpha_col
        exc_col = self.exc[k] if exc_col is None else exc_col
        base = alpha_col[0] * exc_col[0]
        for l in range(1, self.K):
            base = base + alpha_col[l] * exc_col[l]
        return mu_k + base

    def _rebuild(self):
        # exc[k][l] is the excitation of target k by source l
        self.exc = [[self._excitation(l, self.masses[l][k]) for l in range(self.K)] for k in range(self.K)]
        self.lam = [self._lambda(k) for k in range(self.K)]
        self.ll = [self._loglik_dim(k, self.lam[k]) for k in range(self.K)]

    @property
    def log_likelihood(self) -> float:
        return float(sum(self.ll))

    def fresh_log_likelihood(self) -> float:
        """Likelihood recomputed from scratch through the model layer."""
        if self._constant:
            return 0.0
        return log_likelihood(self.model(), self.data, self.lag_cache)

    def check_cache(self, tol=1e-8):
        fresh = self.fresh_log_likelihood()
        if abs(fresh - self.log_likelihood) > tol * max(1.0, abs(fresh)):
            raise AssertionError(f"cached log-likelihood {self.log_likelihood} != fresh {fresh}")

    def _accept(self, log_ratio) -> bool:
        u = self.rng.random()
        if log_ratio >= 0.0:
            return True
        if not log_ratio > -math.inf:
            return False
        return math.log(u) < log_ratio if u > 0 else False

    def _init_static(self):
        K = self.K
        for k in range(K):
            self.log_mu[k] = self.prior_mu[k].sample(self.rng)
        for l in range(K):
            for k in range(K):
                self.log_alpha[l, k] = self.prior_alpha[l][k].sample(self.rng)
        self.mu = np.exp(self.log_mu)
        self.alpha = np.exp(self.log_alpha)

    # static moves --------------------------------------------------------

    def update_baseline(self, k: int):
        c = self.counters["baseline"]
        c["attempted"] += 1
        step = math.sqrt(self.config.baseline_step) * self.rng.standard_normal()
        cur = self.log_mu[k]
        prop = cur + step
        mu_new = math.exp(prop)
        lam = self._lambda(k, mu_k=mu_new)
        ll = self._loglik_dim(k, lam)
        prior = self.prior_mu[k]
        log_ratio = ll - self.ll[k] + prior.logpdf(prop) - prior.logpdf(cur)
        if self._accept(log_ratio):
            c["accepted"] += 1
            self.log_mu[k] = prop
            self.mu[k] = mu_new
            self.lam[k] = lam
            self.ll[k] = ll

    def update_magnitude(self, l: int, k: int):
        c = self.counters["magnitude"]
        c["attempted"] += 1
        step = math.sqrt(self.config.magnitude_step) * self.rng.standard_normal()
        cur = self.log_alpha[l, k]
        prop = cur + step
        a_new = math.exp(prop)
        col = self.alpha[:, k].copy()
        col[l] = a_new
        lam = self._lambda(k, alpha_col=col)
        ll = self._loglik_dim(k, lam)
        prior = self.prior_alpha[l][k]
        log_ratio = ll - self.ll[k] + prior.logpdf(prop) - prior.logpdf(cur)
        if self._accept(log_ratio):
            c["accepted"] += 1
            self.log_alpha[l, k] = prop
            self.alpha[l, k] = a_new
            self.lam[k] = lam
            self.ll[k] = ll

    def _try_kernel(self, l, k, masses):
        """Likelihood pieces for dimension ``k`` with pair ``(l, k)`` set to ``masses``."""
        exc = self._excitation(l, masses)
        col = list(self.exc[k])
        col[l] = exc
        lam = self._lambda(k, exc_col=col)
        return exc, lam, self._loglik_dim(k, lam)

    def _commit_kernel(self, l, k, masses, exc, lam, ll):
        self.masses[l][k] = masses
        self.exc[k][l] = exc
        self.lam[k] = lam
        self.ll[k] = ll

    def model(self) -> DthpModel:
        raise NotImplementedError

    def record(self):
        raise NotImplementedError

    # checkpointing ---------------------------------------------------------

    def _base_checkpoint(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "family": self.family,
            "iteration": self.iteration,
            "log_mu": self.log_mu.tolist(),
            "log_alpha": self.log_alpha.tolist(),
            "rng": self.rng.bit_generator.state,
            "counters": json.loads(json.dumps(self.counters)),
        }

    def _restore_base(self, payload: dict):
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
        if payload.get("family") != self.family:
            raise ValueError(f"checkpoint is for a {payload.get('family')} sampler")
        self.iteration = int(payload["iteration"])
        self.log_mu = np.asarray(payload["log_mu"], dtype=float)
        self.log_alpha = np.asarray(payload["log_alpha"], dtype=float).reshape(self.K, self.K)
        self.mu = np.exp(self.log_mu)
        self.alpha = np.exp(self.log_alpha)
        self.rng.bit_generator.state = payload["rng"]
        self.counters = json.loads(json.dumps(payload["counters"]))


class HistogramSampler(_SamplerBase):
    """State and moves of one reversible-jump chain.

    Heights are stored unnormalised with the first pinned to 1; height
    ``i`` (0-based) belongs to the interval ``(knots[i], knots[i+1]]``.
    """

    family = "histogram"

    def __init__(self, data, priors, config, rng, lag_cache=None, initialise=True):
        super().__init__(data, priors, config, rng, lag_cache)
        K = self.K
        self.prior_height = [[priors.prior_for("height", (l, k)) for k in range(K)] for l in range(K)]
        self._struct = {
            int(s): [None] + [log_prior_structure(J, None, int(s), priors.structure) for J in range(1, int(s) + 1)]
            for s in np.unique(self.s_max)
        }
        self.knots = [[[0, int(self.s_max[l, k])] for k in range(K)] for l in range(K)]
        self.heights = [[[1.0] for _ in range(K)] for _ in range(K)]
        self.masses = [[histogram_masses(self.knots[l][k], self.heights[l][k]) for k in range(K)] for l in range(K)]
        if initialise:
            self._initialise()

    def _initialise(self):
        for _ in range(_INIT_RETRIES):
            self._init_static()
            self._rebuild()
            if math.isfinite(self.log_likelihood):
                return
        raise ChainFailure(-1, f"no finite initial likelihood after {_INIT_RETRIES} prior draws")

    def model(self) -> DthpModel:
        from .kernels import HistogramKernel

        kernels = [
            [HistogramKernel(tuple(self.knots[l][k]), tuple(self.heights[l][k])) for k in range(self.K)]
            for l in range(self.K)
        ]
        return DthpModel(self.mu.copy(), self.alpha.copy(), kernels)

    def log_prior_kernel(self, l, k) -> float:
        prior = self.prior_height[l][k]
        s = int(self.s_max[l, k])
        hs = self.heights[l][k]
        total = self._struct[s][len(hs)]
        for h in hs[1:]:
            total += prior.logpdf(math.log(h))
        return total

    # within-model kernel moves --------------------------------------------

    def update_heights(self, l: int, k: int):
        c = self.counters["height"]
        heights = self.heights[l][k]
        if len(heights) == 1:
            c["skipped"] += 1
            return
        prior = self.prior_height[l][k]
        knots = self.knots[l][k]
        sd = math.sqrt(self.config.height_step)
        for j in range(1, len(heights)):
            c["attempted"] += 1
            cur = math.log(heights[j])
            prop = cur + sd * self.rng.standard_normal()
            new_heights = list(heights)
            new_heights[j] = math.exp(prop)
            masses = histogram_masses(knots, new_heights)
            exc, lam, ll = self._try_kernel(l, k, masses)
            log_ratio = ll - self.ll[k] + prior.logpdf(prop) - prior.logpdf(cur)
            if self._accept(log_ratio):
                c["accepted"] += 1
                heights = new_heights
                self.heights[l][k] = heights
                self._commit_kernel(l, k, masses, exc, lam, ll)

    def shift_knot(self, l: int, k: int):
        """Move one interior knot to a vacant integer between its neighbours."""
        c = self.counters["shift"]
        knots = self.knots[l][k]
        n_interior = len(knots) - 2
        if n_interior == 0:
            c["skipped"] += 1
            return
        j = 1 + int(self.rng.integers(n_interior))
        lo, cur, hi = knots[j - 1], knots[j], knots[j + 1]
        n_vacant = hi - lo - 2
        if n_vacant == 0:
            c["skipped"] += 1
            return
        c["attempted"] += 1
        r = int(self.rng.integers(n_vacant))
        new = lo + 1 + r
        if new >= cur:
            new += 1
        # the neighbours are untouched, so the reverse move sees the same gap
        n_vacant_rev = hi - lo - 2
        new_knots = list(knots)
        new_knots[j] = new
        masses = histogram_masses(new_knots, self.heights[l][k])
        exc, lam, ll = self._try_kernel(l, k, masses)
        log_ratio = ll - self.ll[k] + math.log(n_vacant) - math.log(n_vacant_rev)
        if self._accept(log_ratio):
            c["accepted"] += 1
            self.knots[l][k] = new_knots
            self._commit_kernel(l, k, masses, exc, lam, ll)

    # trans-dimensional move -----------------------------------------------

    def _p_birth(self, J, s_max):
        if s_max == 1:
            return 0.0
        if J == 1:
            return 1.0
        if J == s_max:
            return 0.0
        return self.config.birth_probability

    def _log_birth_proposal(self, x, s_max, gamma, m):
        """Log of ``q(birth from J=x) / q(reverse death from J=x+1)``."""
        v = self.config.birth_height_variance
        log_q_birth = _log(self._p_birth(x, s_max)) - math.log(s_max - x) + _normal_logpdf(gamma, m, v)
        log_q_death = _log(1.0 - self._p_birth(x + 1, s_max)) - math.log(x)
        if log_q_death == -math.inf:
            return math.inf
        return log_q_birth - log_q_death

    def _log_height_prior(self, l, k, gamma):
        # prior is on log(gamma); the newborn height is proposed on the natural
        # scale, so its density there carries the 1/gamma change of variables
        return self.prior_height[l][k].logpdf(math.log(gamma)) - math.log(gamma)

    def birth_death(self, l: int, k: int):
        s_max = int(self.s_max[l, k])
        J = len(self.heights[l][k])
        if s_max == 1:
            self.counters["birth"]["skipped"] += 1
            return
        p_b = self._p_birth(J, s_max)
        if self.rng.random() < p_b:
            self._birth(l, k, s_max)
        else:
            self._death(l, k, s_max)

    def _birth(self, l, k, s_max):
        c = self.counters["birth"]
        c["attempted"] += 1
        knots = self.knots[l][k]
        heights = self.heights[l][k]
        x = len(heights)
        occupied = set(knots)
        vacant = [s for s in range(1, s_max) if s not in occupied]
        s_new = vacant[int(self.rng.integers(len(vacant)))]
        m = sum(heights) / x
        gamma = m + math.sqrt(self.config.birth_height_variance) * self.rng.standard_normal()
        u = self.rng.random()
        if gamma <= 0.0:
            return
        j = next(i for i, s in enumerate(knots) if s > s_new)
        new_knots = knots[:j] + [s_new] + knots[j:]
        new_heights = heights[:j] + [gamma] + heights[j:]
        masses = histogram_masses(new_knots, new_heights)
        exc, lam, ll = self._try_kernel(l, k, masses)
        struct = self._struct[s_max]
        log_ratio = (
            ll
            - self.ll[k]
            + struct[x + 1]
            - struct[x]
            + self._log_height_prior(l, k, gamma)
            - self._log_birth_proposal(x, s_max, gamma, m)
        )
        if log_ratio >= 0.0 or (log_ratio > -math.inf and u > 0 and math.log(u) < log_ratio):
            c["accepted"] += 1
            self.knots[l][k] = new_knots
            self.heights[l][k] = new_heights
            self._commit_kernel(l, k, masses, exc, lam, ll)

    def _death(self, l, k, s_max):
        c = self.counters["death"]
        c["attempted"] += 1
        knots = self.knots[l][k]
        heights = self.heights[l][k]
        x = len(heights) - 1
        j = 1 + int(self.rng.integers(x))
        gamma = heights[j]
        new_knots = knots[:j] + knots[j + 1 :]
        new_heights = heights[:j] + heights[j + 1 :]
        m = sum(new_heights) / x
        masses = histogram_masses(new_knots, new_heights)
        exc, lam, ll = self._try_kernel(l, k, masses)
        struct = self._struct[s_max]
        log_ratio = (
            ll
            - self.ll[k]
            + struct[x]
            - struct[x + 1]
            - self._log_height_prior(l, k, gamma)
            + self._log_birth_proposal(x, s_max, gamma, m)
        )
        if self._accept(log_ratio):
            c["accepted"] += 1
            self.knots[l][k] = new_knots
            self.heights[l][k] = new_heights
            self._commit_kernel(l, k, masses, exc, lam, ll)

    def sweep(self):
        K = self.K
        for k in range(K):
            self.update_baseline(k)
        for l in range(K):
            for k in range(K):
                self.update_magnitude(l, k)
                self.update_heights(l, k)
                self.shift_knot(l, k)
        for l in range(K):
            for k in range(K):
                self.birth_death(l, k)
        self.iteration += 1
        if self.config.check_every and self.iteration % self.config.check_every == 0:
            self.check_cache()

    def checkpoint(self) -> dict:
        payload = self._base_checkpoint()
        payload["knots"] = [[list(map(int, kn)) for kn in row] for row in self.knots]
        payload["heights"] = [[list(map(float, h)) for h in row] for row in self.heights]
        return payload

    def restore(self, payload: dict):
        self._restore_base(payload)
        self.knots = [[list(map(int, kn)) for kn in row] for row in payload["knots"]]
        self.heights = [[list(map(float, h)) for h in row] for row in payload["heights"]]
        self.masses = [
            [histogram_masses(self.knots[l][k], self.heights[l][k]) for k in range(self.K)] for l in range(self.K)
        ]
        self._rebuild()


class GeometricSampler(_SamplerBase):
    """Metropolis-Hastings over ``(log mu, log alpha, logit beta)``.

    ``beta`` has a Uniform(0, 1) prior, which on the logit scale is the
    density ``beta (1 - beta)``.
    """

    family = "geometric"

    def __init__(self, data, priors, config, rng, lag_cache=None, initialise=True):
        super().__init__(data, priors, config, rng, lag_cache)
        K = self.K
        self.logit_beta = np.zeros((K, K))
        self.beta = np.full((K, K), 0.5)
        self.masses = [[geometric_masses(0.5, int(self.s_max[l, k])) for k in range(K)] for l in range(K)]
        if initialise:
            for _ in range(_INIT_RETRIES):
                self._init_static()
                for l in range(K):
                    for k in range(K):
                        b = self.rng.uniform(0.0, 1.0)
                        b = min(max(b, 1e-6), 1 - 1e-6)
                        self._set_beta(l, k, math.log(b / (1 - b)))
                self._rebuild()
                if math.isfinite(self.log_likelihood):
                    break
            else:
                raise ChainFailure(-1, f"no finite initial likelihood after {_INIT_RETRIES} prior draws")

    def _set_beta(self, l, k, logit):
        self.logit_beta[l, k] = logit
        self.beta[l, k] = 1.0 / (1.0 + math.exp(-logit))
        self.masses[l][k] = geometric_masses(self.beta[l, k], int(self.s_max[l, k]))

    @staticmethod
    def _log_prior_logit(logit):
        # log(beta (1 - beta)) written stably in terms of the logit
        return -abs(logit) - 2.0 * math.log1p(math.exp(-abs(logit)))

    def update_beta(self, l, k):
        c = self.counters["beta"]
        c["attempted"] += 1
        cur = self.logit_beta[l, k]
        prop = cur + math.sqrt(self.config.beta_step) * self.rng.standard_normal()
        beta = 1.0 / (1.0 + math.exp(-prop))
        if not 0.0 < beta < 1.0:
            self.rng.random()
            return
        masses = geometric_masses(beta, int(self.s_max[l, k]))
        exc, lam, ll = self._try_kernel(l, k, masses)
        log_ratio = ll - self.ll[k] + self._log_prior_logit(prop) - self._log_prior_logit(cur)
        if self._accept(log_ratio):
            c["accepted"] += 1
            self.logit_beta[l, k] = prop
            self.beta[l, k] = beta
            self._commit_kernel(l, k, masses, exc, lam, ll)

    def model(self) -> DthpModel:
        from .kernels import GeometricKernel

        kernels = [
            [GeometricKernel(float(self.beta[l, k]), int(self.s_max[l, k])) for k in range(self.K)]
            for l in range(self.K)
        ]
        return DthpModel(self.mu.copy(), self.alpha.copy(), kernels)

    def sweep(self):
        K = self.K
        for k in range(K):
            self.update_baseline(k)
        for l in range(K):
            for k in range(K):
                self.update_magnitude(l, k)
                self.update_beta(l, k)
        self.iteration += 1
        if self.config.check_every and self.iteration % self.config.check_every == 0:
            self.check_cache()

    def checkpoint(self) -> dict:
        payload = self._base_checkpoint()
        payload["logit_beta"] = self.logit_beta.tolist()
        return payload

    def restore(self, payload: dict):
        self._restore_base(payload)
        logits = np.asarray(payload["logit_beta"], dtype=float).reshape(self.K, self.K)
        for l in range(self.K):
            for k in range(self.K):
                self._set_beta(l, k, float(logits[l, k]))
        self._rebuild()


_SAMPLERS = {"histogram": HistogramSampler, "geometric": GeometricSampler}


class _Recorder:
    """Preallocated storage for thinned post-burn-in draws."""

    def __init__(self, sampler, n):
        K = sampler.K
        S = int(sampler.s_max.max())
        self.family = sampler.family
        self.n = 0
        self.iteration = np.zeros(n, dtype=np.int64)
        self.mu = np.zeros((n, K))
        self.alpha = np.zeros((n, K, K))
        self.masses = np.zeros((n, K, K, S))
        if self.family == "histogram":
            self.n_components = np.zeros((n, K, K), dtype=np.int16)
            self.knots = np.full((n, K, K, S + 1), -1, dtype=np.int16)
            self.heights = np.full((n, K, K, S), np.nan)
        else:
            self.beta = np.zeros((n, K, K))

    def add(self, sampler):
        i = self.n
        K = sampler.K
        self.iteration[i] = sampler.iteration
        self.mu[i] = sampler.mu
        self.alpha[i] = sampler.alpha
        for l in range(K):
            for k in range(K):
                m = sampler.masses[l][k]
                self.masses[i, l, k, : m.size] = m
                if self.family == "histogram":
                    kn = sampler.knots[l][k]
                    J = len(kn) - 1
                    self.n_components[i, l, k] = J
                    self.knots[i, l, k, : J + 1] = kn
                    self.heights[i, l, k, :J] = sampler.heights[l][k]
        if self.family == "geometric":
            self.beta[i] = sampler.beta
        self.n += 1

    def to_trace(self, sampler, chain_index, seed, fp) -> SampleTrace:
        n = self.n
        hist = self.family == "histogram"
        return SampleTrace(
            family=self.family,
            s_max=sampler.s_max.copy(),
            iteration=self.iteration[:n],
            chain=np.full(n, chain_index, dtype=np.int64),
            mu=self.mu[:n],
            alpha=self.alpha[:n],
            masses=self.masses[:n],
            n_components=self.n_components[:n] if hist else None,
            knots=self.knots[:n] if hist else None,
            heights=self.heights[:n] if hist else None,
            beta=None if hist else self.beta[:n],
            acceptance=[json.loads(json.dumps(sampler.counters))],
            seeds=[[int(seed), int(chain_index)]],
            fingerprint=fp,
            checkpoints=[sampler.checkpoint()],
        )


def run_chain(
    data: CountSeries,
    priors: PriorConfig,
    config: ChainConfig,
    chain_index: int = 0,
    family: str = "histogram",
    resume: Optional[dict] = None,
    lag_cache=None,
) -> SampleTrace:
    """Run one chain and return its thinned post-burn-in draws.

    Kernels start flat with one component; baselines and magnitudes are
    drawn from the prior. With ``resume`` (a checkpoint from a previous
    call) the chain continues bit-identically from the recorded iteration,
    and only draws after that iteration are returned.
    """
    if family not in _SAMPLERS:
        raise ValueError(f"unknown kernel family {family!r}")
    rng = chain_rng(config.seed, chain_index)
    cls = _SAMPLERS[family]
    try:
        if resume is None:
            sampler = cls(data, priors, config, rng, lag_cache)
        else:
            sampler = cls(data, priors, config, rng, lag_cache, initialise=False)
            sampler.restore(resume)
    except ChainFailure as exc:
        raise ChainFailure(chain_index, str(exc).split(": ", 1)[-1]) from None
    start = sampler.iteration
    first_kept = config.burn_in + config.thin
    n_expected = sum(
        1 for i in range(max(start + 1, first_kept), config.iterations + 1) if (i - config.burn_in) % config.thin == 0
    )
    rec = _Recorder(sampler, n_expected)
    while sampler.iteration < config.iterations:
        sampler.sweep()
        i = sampler.iteration
        if i > config.burn_in and (i - config.burn_in) % config.thin == 0:
            rec.add(sampler)
    return rec.to_trace(sampler, chain_index, config.seed, fingerprint(data, priors, config, family))


def _chain_job(args):
    data, priors, config, chain_index, family = args
    try:
        return run_chain(data, priors, config, chain_index, family)
    except ChainFailure:
        raise
    except Exception as exc:  # surfaced with the failing chain named
        raise ChainFailure(chain_index, f"{type(exc).__name__}: {exc}") from exc


def run_parallel(
    data: CountSeries,
    priors: PriorConfig,
    config: ChainConfig,
    family: str = "histogram",
    workers: Optional[int] = None,
) -> SampleTrace:
    """Run ``config.n_chains`` chains and pool their draws in chain order.

    Chains own independent random streams, so the pooled trace does not
    depend on ``workers``.
    """
    workers = config.workers if workers is None else workers
    jobs = [(data, priors, config, c, family) for c in range(config.n_chains)]
    if workers <= 1 or config.n_chains == 1:
        traces = [_chain_job(job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_chain_job, jobs))
    return SampleTrace.concatenate(traces)


def fit_geometric(data: CountSeries, priors: PriorConfig, config: ChainConfig, workers: Optional[int] = None) -> SampleTrace:
    """Pooled posterior draws for the geometric-kernel baseline model."""
    return run_parallel(data, priors, config, family="geometric", workers=workers)
