"""Convergence diagnostics for pooled or per-chain traces.

Split-R-hat and effective sample size follow Gelman et al., *Bayesian Data
Analysis* (3rd ed.), with autocorrelations from the FFT and Geyer's initial
monotone sequence to truncate the sum.
"""

from __future__ import annotations

import numpy as np

from .trace import SampleTrace, merge_counters

__all__ = ["split_rhat", "effective_sample_size", "autocorrelation", "acceptance_rates", "j_occupancy", "diagnostics"]


def _as_chains(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("expected an array of shape (n_chains, n_draws)")
    return x


def _split(x: np.ndarray) -> np.ndarray:
    n = x.shape[1] // 2
    return np.concatenate([x[:, :n], x[:, x.shape[1] - n :]], axis=0)


def split_rhat(chains) -> float:
    """Potential scale reduction factor on half-chains."""
    x = _split(_as_chains(chains))
    m, n = x.shape
    if n < 2:
        return float("nan")
    means = x.mean(axis=1)
    within = x.var(axis=1, ddof=1).mean()
    between = n * means.var(ddof=1)
    if within == 0:
        return 1.0 if between == 0 else float("inf")
    var_plus = (n - 1) / n * within + between / n
    return float(np.sqrt(var_plus / within))


def autocorrelation(x) -> np.ndarray:
    """Sample autocorrelation of a single chain at every lag."""
    x = np.asarray(x, dtype=float)
    n = x.size
    centred = x - x.mean()
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(centred, size)
    acov = np.fft.irfft(f * np.conjugate(f), size)[:n] / n
    if acov[0] == 0:
        out = np.zeros(n)
        out[0] = 1.0
        return out
    return acov / acov[0]


def effective_sample_size(chains) -> float:
    """Multi-chain ESS of the mean, using split chains."""
    x = _split(_as_chains(chains))
    m, n = x.shape
    if n < 4:
        return float(m * n)
    acov = np.array([autocorrelation(c) * c.var() for c in x])
    chain_var = x.var(axis=1, ddof=1)
    within = chain_var.mean()
    var_plus = within * (n - 1) / n
    if m > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    if var_plus == 0:
        return float(m * n)
    rho = 1.0 - (within - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer: sum consecutive pairs while positive, enforce monotone decrease
    total = 0.0
    prev_pair = np.inf
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        pair = min(pair, prev_pair)
        total += pair
        prev_pair = pair
        t += 2
    tau = -1.0 + 2.0 * total
    tau = max(tau, 1.0 / np.log10(m * n))
    return float(m * n / tau)


def acceptance_rates(counters) -> dict:
    """Accepted / attempted per move type (NaN when never attempted)."""
    if isinstance(counters, list):
        counters = merge_counters(counters)
    out = {}
    for move, c in counters.items():
        out[move] = c["accepted"] / c["attempted"] if c["attempted"] else float("nan")
    return out


def j_occupancy(trace: SampleTrace) -> dict:
    """Posterior frequency of each number of components, per kernel pair."""
    if trace.n_components is None:
        return {}
    out = {}
    for l in range(trace.K):
        for k in range(trace.K):
            J = trace.n_components[:, l, k].astype(int)
            counts = np.bincount(J, minlength=int(trace.s_max[l, k]) + 1)[1:]
            out[f"{l},{k}"] = (counts / max(J.size, 1)).tolist()
    return out


def _static_series(trace: SampleTrace):
    names = [f"mu[{k}]" for k in range(trace.K)]
    cols = [trace.mu[:, k] for k in range(trace.K)]
    for l in range(trace.K):
        for k in range(trace.K):
            names.append(f"alpha[{l},{k}]")
            cols.append(trace.alpha[:, l, k])
    return names, cols


def diagnostics(traces, lags=(1, 5, 10, 50)) -> dict:
    """ESS, split-R-hat, autocorrelations, acceptance rates and J occupancy.

    ``traces`` is a list of per-chain traces or a single pooled trace, which
    is split back into its chains. Chains are truncated to the shortest.
    """
    if isinstance(traces, SampleTrace):
        traces = traces.chain_slices()
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one chain")
    n = min(len(tr) for tr in traces)
    names, _ = _static_series(traces[0])
    params = {}
    for i, name in enumerate(names):
        chains = np.array([_static_series(tr)[1][i][:n] for tr in traces])
        acf = autocorrelation(chains[0]) if n > 1 else np.ones(1)
        params[name] = {
            "ess": effective_sample_size(chains),
            "rhat": split_rhat(chains),
            "autocorrelation": {str(lag): float(acf[lag]) for lag in lags if lag < acf.size},
        }
    pooled = SampleTrace.concatenate(traces)
    counters = merge_counters([c for tr in traces for c in tr.acceptance])
    return {
        "n_chains": len(traces),
        "draws_per_chain": n,
        "parameters": params,
        "acceptance": acceptance_rates(counters),
        "counters": counters,
        "j_occupancy": j_occupancy(pooled),
    }
