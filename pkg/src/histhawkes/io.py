"""Files: atomic writes, model JSON, gzip JSON-lines traces and checkpoints.

A trace file holds one chain. Its first line is a header record::

    {"type": "header", "format": 1, "family": ..., "chain": ..., "seed": ...,
     "s_max": [[...]], "fingerprint": ..., "acceptance": {...}}

followed by one record per draw::

    {"iteration": 30001, "mu": [...], "alpha": [[...]],
     "kernels": [[{"J": 3, "s": [0, 2, 5, 7], "theta": [1.0, 0.5, 0.25]}]]}

Geometric traces store ``{"beta": ...}`` per kernel instead. Files are
gzip-compressed with a zeroed timestamp so identical runs produce identical
bytes.
"""

from __future__ import annotations

import gzip
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .kernels import geometric_masses, histogram_masses
from .model import DthpModel
from .trace import SampleTrace

__all__ = [
    "atomic_write_bytes",
    "atomic_write_text",
    "write_json",
    "read_json",
    "save_model",
    "load_model",
    "write_trace",
    "read_trace",
    "TRACE_FORMAT",
]

TRACE_FORMAT = 1


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def save_model(model: DthpModel, path) -> None:
    write_json(path, model.to_dict())


def load_model(path) -> DthpModel:
    return DthpModel.from_dict(read_json(path))


def _draw_record(trace: SampleTrace, i: int) -> dict:
    K = trace.K
    kernels = []
    for l in range(K):
        row = []
        for k in range(K):
            if trace.family == "geometric":
                row.append({"beta": float(trace.beta[i, l, k])})
            else:
                J = int(trace.n_components[i, l, k])
                row.append(
                    {
                        "J": J,
                        "s": trace.knots[i, l, k, : J + 1].tolist(),
                        "theta": trace.heights[i, l, k, :J].tolist(),
                    }
                )
        kernels.append(row)
    return {
        "iteration": int(trace.iteration[i]),
        "mu": trace.mu[i].tolist(),
        "alpha": trace.alpha[i].tolist(),
        "kernels": kernels,
    }


def trace_lines(trace: SampleTrace, provenance=None):
    """Yield the JSON lines of a single-chain trace."""
    if trace.n_chains != 1:
        raise ValueError("write one chain per trace file; use SampleTrace.chain_slices()")
    seed, chain = trace.seeds[0] if trace.seeds else (None, int(trace.chain[0]) if len(trace) else 0)
    header = {
        "type": "header",
        "format": TRACE_FORMAT,
        "family": trace.family,
        "chain": chain,
        "seed": seed,
        "s_max": trace.s_max.tolist(),
        "K": trace.K,
        "fingerprint": trace.fingerprint,
        "acceptance": trace.acceptance[0],
        "provenance": provenance or {},
    }
    yield json.dumps(header, sort_keys=True)
    for i in range(len(trace)):
        yield json.dumps(_draw_record(trace, i), sort_keys=True)


def write_trace(trace: SampleTrace, path, provenance=None) -> None:
    """Write a single-chain trace as gzip-compressed JSON lines."""
    text = "\n".join(trace_lines(trace, provenance)) + "\n"
    payload = gzip.compress(text.encode("utf-8"), compresslevel=6, mtime=0)
    atomic_write_bytes(path, payload)


def read_trace(path) -> SampleTrace:
    """Load a trace file written by :func:`write_trace`."""
    with gzip.open(path, "rt", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("type") != "header" or header.get("format") != TRACE_FORMAT:
            raise ValueError(f"{path}: not a trace file of format {TRACE_FORMAT}")
        records = [json.loads(line) for line in fh if line.strip()]
    family = header["family"]
    s_max = np.asarray(header["s_max"], dtype=int)
    K = int(header["K"])
    S = int(s_max.max())
    n = len(records)
    mu = np.array([r["mu"] for r in records], dtype=float).reshape(n, K)
    alpha = np.array([r["alpha"] for r in records], dtype=float).reshape(n, K, K)
    masses = np.zeros((n, K, K, S))
    n_components = knots = heights = beta = None
    if family == "histogram":
        n_components = np.zeros((n, K, K), dtype=np.int16)
        knots = np.full((n, K, K, S + 1), -1, dtype=np.int16)
        heights = np.full((n, K, K, S), np.nan)
    else:
        beta = np.zeros((n, K, K))
    for i, r in enumerate(records):
        for l in range(K):
            for k in range(K):
                kd = r["kernels"][l][k]
                s = int(s_max[l, k])
                if family == "histogram":
                    J = kd["J"]
                    n_components[i, l, k] = J
                    knots[i, l, k, : J + 1] = kd["s"]
                    heights[i, l, k, :J] = kd["theta"]
                    masses[i, l, k, :s] = histogram_masses(kd["s"], kd["theta"])
                else:
                    beta[i, l, k] = kd["beta"]
                    masses[i, l, k, :s] = geometric_masses(kd["beta"], s)
    chain = int(header["chain"])
    return SampleTrace(
        family=family,
        s_max=s_max,
        iteration=np.array([r["iteration"] for r in records], dtype=np.int64),
        chain=np.full(n, chain, dtype=np.int64),
        mu=mu,
        alpha=alpha,
        masses=masses,
        n_components=n_components,
        knots=knots,
        heights=heights,
        beta=beta,
        acceptance=[header["acceptance"]],
        seeds=[header["seed"]],
        fingerprint=header.get("fingerprint", ""),
    )
