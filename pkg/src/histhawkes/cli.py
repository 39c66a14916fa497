"""Command-line interface: ``histhawkes <subcommand> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import csv
import hashlib
import io
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from .config import RunConfig, config_hash, template
from .data import load_counts, phase_bounds, rolling_smooth, save_counts
from .diagnostics import diagnostics
from .exceptions import ChainFailure, ConfigError, DimensionMismatchError, InvalidDataError, UnstableProcessError
from .io import atomic_write_text, load_model, read_json, read_trace, save_model, write_json, write_trace
from .priors import PriorConfig
from .posterior import five_number_summary, intensity_band, kernel_band, rmse_per_draw, static_summary
from .sampler import run_parallel
from .simulation import SimulationConfig, simulate
from .trace import SampleTrace

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING = 4
EXIT_DATA = 5
EXIT_UNSTABLE = 6
EXIT_RUNTIME = 7

EXIT_CODES = f"""exit codes:
  {EXIT_OK}  success
  {EXIT_USAGE}  usage error (unknown subcommand or flag, bad flag value)
  {EXIT_CONFIG}  malformed or inconsistent config
  {EXIT_MISSING}  input file or trace directory not found
  {EXIT_DATA}  invalid count data or dimension mismatch
  {EXIT_UNSTABLE}  simulated process exceeded the count ceiling
  {EXIT_RUNTIME}  chain failure or other runtime error
errors are reported as a JSON object on stderr"""


class CliError(Exception):
    def __init__(self, code, kind, message):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, "usage", message)


def _provenance(cfg: RunConfig) -> dict:
    return {"version": __version__, "config_hash": config_hash(cfg), "seed": cfg.seed}


def _provenance_line(prov: dict) -> str:
    return f"# histhawkes={prov['version']} config_hash={prov['config_hash']} seed={prov['seed']}\n"


def _write_csv(path, header, rows, prov):
    buf = io.StringIO()
    buf.write(_provenance_line(prov))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    atomic_write_text(path, buf.getvalue())


def _load_config(path, seed=None, truth=None) -> RunConfig:
    """Load a config; a ``truth`` model fills the informative prior centres."""
    if path is None:
        payload = template().to_dict()
    elif not Path(path).exists():
        raise CliError(EXIT_MISSING, "missing_file", f"config file not found: {path}")
    else:
        try:
            payload = read_json(path)
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_CONFIG, "config", f"{path}: invalid JSON ({exc})") from None
    if truth is not None and isinstance(payload, dict) and isinstance(payload.get("prior"), dict):
        prior = payload["prior"]
        if prior.get("setting") == "informative":
            filled = PriorConfig(setting="relatively_informative").with_truth(truth).to_dict()
            for key in ("true_mu", "true_alpha", "true_gamma_avg"):
                prior[key] = filled[key]
    return RunConfig.from_dict(payload).with_seed(seed)


# subcommands -----------------------------------------------------------------


def cmd_init_config(args):
    text = template().dumps()
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    cfg = _load_config(args.config, args.seed)
    sim = dict(cfg.simulation or {})
    model = cfg.simulation_model()
    T = args.T if args.T is not None else int(sim.get("T", 500))
    replicates = int(sim.get("replicates", 1))
    sim_cfg = SimulationConfig(model, T, cfg.seed, replicates, float(sim.get("count_ceiling", 1e9)))
    out = Path(args.out)
    prov = _provenance(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        series = [simulate(sim_cfg, i) for i in range(replicates)]
    for i, s in enumerate(series):
        name = "counts.csv" if replicates == 1 else f"counts_rep{i:03d}.csv"
        save_counts(s, out / name)
    save_model(model, out / "model.json")
    write_json(
        out / "simulation.json",
        {"provenance": prov, "T": T, "replicates": replicates, "warning": sim_cfg.warning, "config": cfg.to_dict()},
    )


def _prepare_data(cfg: RunConfig, data_path):
    path = Path(data_path)
    if not path.exists():
        raise CliError(EXIT_MISSING, "missing_file", f"data file not found: {data_path}")
    series = load_counts(path, allow_real=cfg.allow_real_counts, columns=cfg.columns)
    if cfg.labels is not None:
        from .model import CountSeries

        series = CountSeries(series.counts, cfg.labels, series.start_date, series.allow_real)
    if cfg.smoothing_window > 1:
        series = rolling_smooth(series, cfg.smoothing_window, round_counts=not cfg.allow_real_counts)
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    return series, digest


def _fit(args, family):
    truth = _load_truth(args.truth) if args.truth else None
    cfg = _load_config(args.config, args.seed, truth)
    overrides = {}
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.burn_in is not None:
        overrides["burn_in"] = args.burn_in
    if args.chains is not None:
        overrides["n_chains"] = args.chains
    try:
        chain_cfg = cfg.chain_config(**overrides)
        cfg = dataclasses.replace(cfg, chain={key: getattr(chain_cfg, key) for key in cfg.chain})
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "config", str(exc)) from None
    data_path = args.data or cfg.data_path
    if data_path is None:
        raise CliError(EXIT_USAGE, "usage", "no data file given (use --data or data.path in the config)")
    series, digest = _prepare_data(cfg, data_path)
    priors = cfg.prior
    if truth is not None and truth.K != series.K:
        raise DimensionMismatchError(f"truth model has K={truth.K} but data has K={series.K}")
    try:
        bounds = phase_bounds(series.T, cfg.phase_boundaries)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "config", str(exc)) from None
    workers = args.workers if args.workers is not None else chain_cfg.workers
    out = Path(args.out)
    prov = _provenance(cfg)
    phases = []
    for p, (start, stop) in enumerate(bounds, start=1):
        name = f"phase_{p}"
        phase = series.slice(start, stop)
        trace = run_parallel(phase, priors, chain_cfg, family=family, workers=workers)
        pdir = out / name
        save_counts(phase, pdir / "data.csv")
        for c, sub in enumerate(trace.chain_slices()):
            write_trace(sub, pdir / f"chain_{c:03d}.jsonl.gz", prov)
            write_json(pdir / f"checkpoint_{c:03d}.json", sub.checkpoints[0])
        phases.append({"name": name, "first_day": start + 1, "last_day": stop, "T": stop - start})
    manifest_cfg = cfg.to_dict()
    manifest_cfg["data"]["path"] = Path(data_path).name
    manifest_cfg["output_dir"] = None
    write_json(
        out / "manifest.json",
        {
            "provenance": prov,
            "family": family,
            "data_sha256": digest,
            "phases": phases,
            "prior": priors.to_dict(),
            "chain": {k: v for k, v in chain_cfg.to_dict().items() if k != "workers"},
            "config": manifest_cfg,
        },
    )


def cmd_fit(args):
    _fit(args, "histogram")


def cmd_fit_geometric(args):
    _fit(args, "geometric")


def _load_truth(path):
    if not Path(path).exists():
        raise CliError(EXIT_MISSING, "missing_file", f"truth model not found: {path}")
    try:
        return load_model(path)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, "config", f"bad truth model {path}: {exc}") from None


def _load_run(trace_dir):
    root = Path(trace_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise CliError(EXIT_MISSING, "missing_file", f"no manifest.json in trace directory {trace_dir}")
    manifest = read_json(manifest_path)
    phases = []
    for ph in manifest["phases"]:
        pdir = root / ph["name"]
        files = sorted(pdir.glob("chain_*.jsonl.gz"))
        if not files:
            raise CliError(EXIT_MISSING, "missing_file", f"no chain files in {pdir}")
        chains = [read_trace(f) for f in files]
        data = load_counts(pdir / "data.csv", allow_real=True)
        phases.append((ph["name"], chains, data))
    return manifest, phases


def cmd_summarize(args):
    manifest, phases = _load_run(args.trace)
    prov = manifest["provenance"]
    truth = _load_truth(args.truth) if args.truth else None
    out = Path(args.out) if args.out else Path(args.trace) / "summary"
    band_rows, static_rows, rmse_rows, rmse_draw_rows, intensity_rows = [], [], [], [], []
    summary = {"provenance": prov, "family": manifest["family"], "phases": {}}
    for name, chains, data in phases:
        pooled = SampleTrace.concatenate(chains)
        K = pooled.K
        if truth is not None and truth.K != K:
            raise DimensionMismatchError(f"truth model has K={truth.K} but trace has K={K}")
        phase_summary = {"static": static_summary(pooled), "kernels": {}, "n_draws": len(pooled)}
        for key, s in phase_summary["static"].items():
            static_rows.append([name, key, s["median"], s["lower"], s["upper"]])
        for l in range(K):
            for k in range(K):
                band = kernel_band(pooled, l, k)
                entry = {
                    "mean": band.mean.tolist(),
                    "median": band.median.tolist(),
                    "lower": band.lower.tolist(),
                    "upper": band.upper.tolist(),
                }
                for row in band.rows():
                    band_rows.append([name, l + 1, k + 1, *row])
                if truth is not None:
                    true_kernel = truth.kernels[l][k]
                    rmse = rmse_per_draw(pooled, l, k, true_kernel)
                    five = five_number_summary(rmse)
                    entry["rmse"] = five
                    entry["truth_inside_band"] = band.contains(true_kernel).tolist()
                    rmse_rows.append([name, l + 1, k + 1, *five.values()])
                    rmse_draw_rows.extend([name, l + 1, k + 1, i, float(v)] for i, v in enumerate(rmse))
                phase_summary["kernels"][f"{l + 1},{k + 1}"] = entry
        ib = intensity_band(pooled, data)
        for k in range(K):
            for t in range(data.T):
                intensity_rows.append(
                    [name, k + 1, t + 1, float(ib["lower"][k, t]), float(ib["median"][k, t]), float(ib["upper"][k, t])]
                )
        summary["phases"][name] = phase_summary
    _write_csv(out / "kernel_bands.csv", ["phase", "source", "target", "lag", "mean", "median", "lower", "upper"], band_rows, prov)
    _write_csv(out / "static_summary.csv", ["phase", "parameter", "median", "lower", "upper"], static_rows, prov)
    _write_csv(out / "intensity_band.csv", ["phase", "dimension", "day", "lower", "median", "upper"], intensity_rows, prov)
    if truth is not None:
        _write_csv(out / "rmse_summary.csv", ["phase", "source", "target", "min", "q1", "median", "q3", "max"], rmse_rows, prov)
        _write_csv(out / "rmse_draws.csv", ["phase", "source", "target", "draw", "rmse"], rmse_draw_rows, prov)
    write_json(out / "summary.json", summary)


def cmd_diagnose(args):
    manifest, phases = _load_run(args.trace)
    report = {"provenance": manifest["provenance"], "phases": {}}
    for name, chains, _ in phases:
        report["phases"][name] = diagnostics(chains)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    out = Path(args.out) if args.out else Path(args.trace) / "diagnostics.json"
    atomic_write_text(out, text)
    if not args.quiet:
        sys.stdout.write(text)


def cmd_compare(args):
    truth = _load_truth(args.truth)
    man_a, phases_a = _load_run(args.trace_a)
    man_b, phases_b = _load_run(args.trace_b)
    if [p[0] for p in phases_a] != [p[0] for p in phases_b]:
        raise CliError(EXIT_DATA, "data", "the two runs have different phases")
    out = Path(args.out) if args.out else Path(args.trace_a) / "compare"
    rows, draw_rows, result = [], [], {}
    for (name, chains_a, _), (_, chains_b, _) in zip(phases_a, phases_b):
        for label, man, chains in (("a", man_a, chains_a), ("b", man_b, chains_b)):
            pooled = SampleTrace.concatenate(chains)
            if pooled.K != truth.K:
                raise DimensionMismatchError(f"truth model has K={truth.K} but trace has K={pooled.K}")
            for l in range(pooled.K):
                for k in range(pooled.K):
                    rmse = rmse_per_draw(pooled, l, k, truth.kernels[l][k])
                    five = five_number_summary(rmse)
                    rows.append([name, label, man["family"], l + 1, k + 1, *five.values()])
                    draw_rows.extend([name, label, l + 1, k + 1, i, float(v)] for i, v in enumerate(rmse))
                    result.setdefault(name, {}).setdefault(f"{l + 1},{k + 1}", {})[label] = dict(five, family=man["family"])
    prov = man_a["provenance"]
    _write_csv(out / "rmse_compare.csv", ["phase", "run", "family", "source", "target", "min", "q1", "median", "q3", "max"], rows, prov)
    _write_csv(out / "rmse_compare_draws.csv", ["phase", "run", "source", "target", "draw", "rmse"], draw_rows, prov)
    write_json(out / "compare.json", {"provenance": prov, "runs": {"a": man_a["provenance"], "b": man_b["provenance"]}, "rmse": result})


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="histhawkes",
        description="Simulate and fit discrete-time Hawkes processes with random histogram kernels.",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"histhawkes {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("init-config", help="write a config template with every default", epilog=EXIT_CODES,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", help="file to write (default: stdout)")
    p.set_defaults(func=cmd_init_config)

    p = sub.add_parser("simulate", help="simulate counts from the config's simulation model", epilog=EXIT_CODES,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--T", type=int, help="override simulation.T")
    p.set_defaults(func=cmd_simulate)

    for name, func, help_text in (
        ("fit", cmd_fit, "fit the histogram-kernel model by reversible-jump MCMC"),
        ("fit-geometric", cmd_fit_geometric, "fit the geometric-kernel baseline"),
    ):
        p = sub.add_parser(name, help=help_text, epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config")
        p.add_argument("--data")
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--truth", help="model JSON whose values replace the informative prior centres")
        p.add_argument("--iterations", type=int)
        p.add_argument("--burn-in", type=int, dest="burn_in")
        p.add_argument("--chains", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("summarize", help="kernel bands, RMSE, intensity bands and static summaries",
                       epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--trace", required=True)
    p.add_argument("--truth")
    p.add_argument("--out")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("diagnose", help="ESS, split R-hat, acceptance rates, J occupancy", epilog=EXIT_CODES,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--trace", required=True)
    p.add_argument("--out")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("compare", help="paired RMSE of two runs against a known model", epilog=EXIT_CODES,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--trace-a", required=True, dest="trace_a")
    p.add_argument("--trace-b", required=True, dest="trace_b")
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return parser


def _report(code, kind, message) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise CliError(EXIT_USAGE, "usage", "no subcommand given; see --help")
        args.func(args)
    except CliError as exc:
        return _report(exc.code, exc.kind, str(exc))
    except ConfigError as exc:
        return _report(EXIT_CONFIG, "config", str(exc))
    except FileNotFoundError as exc:
        return _report(EXIT_MISSING, "missing_file", str(exc))
    except (InvalidDataError, DimensionMismatchError) as exc:
        return _report(EXIT_DATA, "data", str(exc))
    except UnstableProcessError as exc:
        return _report(EXIT_UNSTABLE, "unstable_process", str(exc))
    except ChainFailure as exc:
        return _report(EXIT_RUNTIME, "chain_failure", str(exc))
    except (ValueError, RuntimeError) as exc:
        return _report(EXIT_RUNTIME, "runtime", f"{type(exc).__name__}: {exc}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
