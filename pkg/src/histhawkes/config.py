"""The JSON run configuration shared by every CLI subcommand."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .exceptions import ConfigError
from .model import DthpModel
from .priors import PriorConfig
from .sampler import ChainConfig

__all__ = ["RunConfig", "template", "config_hash"]

_CHAIN_KEYS = tuple(
    f.name for f in fields(ChainConfig) if f.name not in ("seed", "s_max", "constant_likelihood", "check_every")
)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a simulate / fit run.

    ``phase_boundaries`` are 1-based day numbers on which a new phase
    starts. ``smoothing_window`` of 0 or 1 disables smoothing.
    """

    seed: int = 0
    s_max: object = 7
    data_path: Optional[str] = None
    columns: Optional[list] = None
    labels: Optional[list] = None
    smoothing_window: int = 0
    allow_real_counts: bool = False
    phase_boundaries: list = field(default_factory=list)
    prior: PriorConfig = field(default_factory=PriorConfig)
    chain: dict = field(default_factory=dict)
    output_dir: Optional[str] = None
    simulation: Optional[dict] = None

    def __post_init__(self):
        smax = np.asarray(self.s_max)
        if np.any(smax < 1) or np.any(smax != np.round(smax)):
            raise ConfigError(f"s_max must be positive integers, got {self.s_max}")
        if self.smoothing_window < 0:
            raise ConfigError("smoothing_window must be >= 0")
        b = list(self.phase_boundaries)
        if any(y <= x for x, y in zip(b, b[1:])) or any(x <= 1 for x in b):
            raise ConfigError(f"phase boundaries must be strictly increasing day numbers > 1, got {b}")
        unknown = set(self.chain) - set(_CHAIN_KEYS)
        if unknown:
            raise ConfigError(f"unknown chain settings: {sorted(unknown)}")
        try:
            full = self.chain_config().to_dict()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "chain", {key: full[key] for key in _CHAIN_KEYS})
        object.__setattr__(self, "phase_boundaries", [int(x) for x in b])

    def chain_config(self, **overrides) -> ChainConfig:
        params = dict(self.chain)
        params.update(overrides)
        return ChainConfig(seed=self.seed, s_max=self.s_max, **params)

    def simulation_model(self) -> DthpModel:
        if not self.simulation or "model" not in self.simulation:
            raise ConfigError("config has no simulation.model section")
        try:
            return DthpModel.from_dict(self.simulation["model"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad simulation model: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "s_max": np.asarray(self.s_max).tolist(),
            "data": {
                "path": self.data_path,
                "columns": self.columns,
                "labels": self.labels,
                "smoothing_window": self.smoothing_window,
                "allow_real_counts": self.allow_real_counts,
                "phase_boundaries": list(self.phase_boundaries),
            },
            "prior": self.prior.to_dict(),
            "chain": dict(self.chain),
            "output_dir": self.output_dir,
            "simulation": self.simulation,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        if not isinstance(payload, dict):
            raise ConfigError("config must be a JSON object")
        known = {"seed", "s_max", "data", "prior", "chain", "output_dir", "simulation"}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = payload.get("data") or {}
        try:
            prior = PriorConfig.from_dict(payload.get("prior") or {})
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad prior section: {exc}") from None
        try:
            return cls(
                seed=int(payload.get("seed", 0)),
                s_max=payload.get("s_max", 7),
                data_path=data.get("path"),
                columns=data.get("columns"),
                labels=data.get("labels"),
                smoothing_window=int(data.get("smoothing_window", 0)),
                allow_real_counts=bool(data.get("allow_real_counts", False)),
                phase_boundaries=list(data.get("phase_boundaries") or []),
                prior=prior,
                chain=dict(payload.get("chain") or {}),
                output_dir=payload.get("output_dir"),
                simulation=payload.get("simulation"),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(payload)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        return self if seed is None else replace(self, seed=int(seed))


def config_hash(config: RunConfig) -> str:
    """Hash of the canonical config, ignoring file locations and worker count."""
    d = config.to_dict()
    d["data"] = dict(d["data"], path=None)
    d["output_dir"] = None
    d["chain"] = {k: v for k, v in d["chain"].items() if k != "workers"}
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def template() -> RunConfig:
    """A config with every default spelled out, plus the univariate simulation scenario."""
    truth = {
        "mu": [1.0],
        "alpha": [[0.9]],
        "kernels": [[{"type": "histogram", "knots": [0, 2, 5, 7], "heights": [1.0, 0.5, 0.25]}]],
    }
    return RunConfig(
        seed=0,
        s_max=7,
        chain={key: getattr(ChainConfig(), key) for key in _CHAIN_KEYS},
        simulation={"T": 500, "replicates": 1, "count_ceiling": 1e9, "model": truth},
    )
