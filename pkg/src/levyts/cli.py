"""Command-line front end: simulation campaigns, single-series fits,
window-growing classification, variance-oracle checks and report
aggregation.

All randomness flows from --seed; two runs with equal flags produce
identical artifacts. Analysis anomalies (non-converged fits) surface as
report flags with exit code 0; only I/O and configuration errors exit
nonzero.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .classify import Thresholds, report_to_dict, run_nstep
from .mle import fit_stochastic
from .noise import gen_scenario
from .oracles import ResidualSignalSpec, brute_force_moments, moments
from .series import parse_offsets, parse_series, write_series

_CONFIG_KEYS = {
    "scenario", "beta", "replicates", "length", "seed", "jobs", "noise_model",
    "steps", "harmonics", "offsets", "output_dir", "small_pct", "large_pct",
    "alpha_heavy", "corr_margin", "lengths", "memory_budget",
}

_DEFAULTS = {
    "scenario": "A", "beta": 1.1, "replicates": 1, "length": 3650, "seed": 0,
    "jobs": os.cpu_count() or 1, "noise_model": "pl+wn",
    "steps": "0,0.3,0.5,0.7,0.8,1", "harmonics": 2, "offsets": None,
    "output_dir": ".", "small_pct": 3.0, "large_pct": 20.0,
    "alpha_heavy": 1.9, "corr_margin": 0.02, "lengths": "10,100,1000",
    "memory_budget": 6,
}


class ConfigError(ValueError):
    pass


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = value
    return out


def _setting(args, config: dict, key: str, cast=None):
    """Flag value if given, else config file, else default."""
    cli_val = getattr(args, key, None)
    if cli_val is not None:
        return cli_val
    if key in config:
        raw = config[key]
        if cast is not None:
            return cast(raw)
        default = _DEFAULTS[key]
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    return _DEFAULTS[key]


def _parse_steps(text: str) -> tuple[float, ...]:
    try:
        fractions = tuple(float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --steps value {text!r}") from exc
    if not fractions or any(not 0.0 <= f <= 1.0 for f in fractions):
        raise ConfigError("step fractions must lie in [0, 1]")
    return tuple(f * 365.0 for f in fractions)


def _collect_inputs(patterns) -> list[Path]:
    files: list[Path] = []
    for pattern in patterns:
        p = Path(pattern)
        if p.is_dir():
            files.extend(sorted(p.glob("*.txt")))
        else:
            hits = sorted(glob.glob(pattern))
            if not hits:
                raise FileNotFoundError(f"no input matches {pattern!r}")
            files.extend(Path(h) for h in hits)
    if not files:
        raise FileNotFoundError("no input series found")
    return files


def _worker_init():
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = "1"


def _run_pool(func, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    import multiprocessing as mp

    ctx = mp.get_context("spawn")
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks)), mp_context=ctx,
                             initializer=_worker_init) as pool:
        return list(pool.map(func, tasks))


# --- simulate --------------------------------------------------------------

def _theta_dicts(theta1, theta2):
    return ({"trend_mm_yr": theta1.trend, "intercept_mm": theta1.intercept,
             "harmonics": [list(h) for h in theta1.harmonics],
             "offsets_mm": list(theta1.offsets)},
            {"kind": theta2.kind, "a_wh_mm": theta2.a_wh, "b_cl": theta2.b_cl,
             "beta": theta2.beta})


def cmd_simulate(args, config) -> int:
    scenario = _setting(args, config, "scenario")
    beta = _setting(args, config, "beta")
    replicates = _setting(args, config, "replicates")
    length = _setting(args, config, "length")
    seed = _setting(args, config, "seed")
    kind = _setting(args, config, "noise_model")
    outdir = Path(_setting(args, config, "output_dir"))
    if replicates < 1:
        raise ConfigError(f"replicate count must be >= 1, got {replicates}")
    outdir.mkdir(parents=True, exist_ok=True)
    child_seeds = np.random.SeedSequence(seed).spawn(replicates)
    manifest = {"scenario": scenario, "beta": beta, "seed": seed,
                "length": length, "noise_model": kind, "series": []}
    for i, child in enumerate(child_seeds):
        rep_seed = int(child.generate_state(1)[0])
        ts, theta1, theta2 = gen_scenario(scenario, beta, length, rep_seed, kind=kind)
        name = f"series_{i:03d}.txt"
        with open(outdir / name, "w") as fh:
            fh.write(f"# scenario={scenario} beta={beta} replicate={i} seed={rep_seed}\n")
            write_series(ts, fh)
        t1, t2 = _theta_dicts(theta1, theta2)
        manifest["series"].append({"file": name, "seed": rep_seed,
                                   "theta1": t1, "theta2": t2})
    with open(outdir / "truth.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    print(f"wrote {replicates} series + truth.json to {outdir}")
    return 0


# --- fit -------------------------------------------------------------------

def cmd_fit(args, config) -> int:
    kind = _setting(args, config, "noise_model")
    harmonics = _setting(args, config, "harmonics")
    offsets_path = _setting(args, config, "offsets")
    outdir = Path(_setting(args, config, "output_dir"))
    outdir.mkdir(parents=True, exist_ok=True)
    inputs = _collect_inputs(args.input)
    for path in inputs:
        with open(path) as fh:
            ts = parse_series(fh)
        catalog = None
        if offsets_path:
            with open(offsets_path) as fh:
                catalog = parse_offsets(fh)
        fit, theta1, _ = fit_stochastic(ts, kind=kind, n_harmonics=harmonics,
                                        offsets=catalog)
        t1, _ = _theta_dicts(theta1, fit)
        payload = {"input": str(path), "theta1": t1, "theta2": asdict(fit)}
        out = outdir / (path.stem + ".fit.json")
        with open(out, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
        print(f"wrote {out}")
    return 0


# --- classify / report -----------------------------------------------------

def _classify_one(task) -> dict:
    path, kind, steps, harmonics, offsets_path, thresholds_tuple, outdir, budget = task
    with open(path) as fh:
        ts = parse_series(fh)
    catalog = None
    if offsets_path:
        with open(offsets_path) as fh:
            catalog = parse_offsets(fh)
    thresholds = Thresholds(*thresholds_tuple)
    report = run_nstep(ts, kind=kind, step_offsets_days=steps, n_harmonics=harmonics,
                       offsets=catalog, thresholds=thresholds, memory_budget=budget)
    payload = report_to_dict(report)
    payload["series_meta"]["input"] = str(path)
    out = Path(outdir) / (Path(path).stem + ".report.json")
    with open(out, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
    return payload


def _aggregate_reports(payloads: list[dict], outdir: Path) -> None:
    steps_yr = [s / 365.0 for s in payloads[0]["series_meta"]["step_offsets_days"]]
    f_curves = np.array([p["variations"]["functional_pct_by_step"] for p in payloads])
    g_curves = np.array([p["variations"]["stochastic_pct_by_step"] for p in payloads])
    with open(outdir / "variations.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step_offset_yr", "functional_pct_mean", "functional_pct_std",
                         "stochastic_pct_mean", "stochastic_pct_std"])
        for j, yr in enumerate(steps_yr):
            writer.writerow([f"{yr:g}",
                             repr(float(f_curves[:, j].mean())),
                             repr(float(f_curves[:, j].std())),
                             repr(float(g_curves[:, j].mean())),
                             repr(float(g_curves[:, j].std()))])

    def _gather(fn):
        vals = [fn(step) for p in payloads for step in p["steps"]]
        return float(np.mean(vals)), float(np.std(vals))

    arma_err = _gather(lambda s: s["memory_model"]["arma"]["fit_error_mm"])
    farima_err = _gather(lambda s: s["memory_model"]["farima"]["fit_error_mm"])
    corr_n = _gather(lambda s: s["correlations"]["normal"])
    corr_l = _gather(lambda s: s["correlations"]["levy"])
    classes = sorted(p["levy_class"] for p in payloads)
    summary = {
        "n_series": len(payloads),
        "arma_fit_error_mm": {"mean": arma_err[0], "std": arma_err[1]},
        "farima_fit_error_mm": {"mean": farima_err[0], "std": farima_err[1]},
        "corr_normal": {"mean": corr_n[0], "std": corr_n[1]},
        "corr_levy": {"mean": corr_l[0], "std": corr_l[1]},
        "levy_classes": {c: classes.count(c) for c in sorted(set(classes))},
        "functional_pct_mean_final": float(f_curves[:, -1].mean()),
        "stochastic_pct_mean_final": float(g_curves[:, -1].mean()),
    }
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)


def cmd_classify(args, config) -> int:
    kind = _setting(args, config, "noise_model")
    steps = _parse_steps(_setting(args, config, "steps"))
    harmonics = _setting(args, config, "harmonics")
    offsets_path = _setting(args, config, "offsets")
    jobs = _setting(args, config, "jobs")
    budget = _setting(args, config, "memory_budget")
    outdir = Path(_setting(args, config, "output_dir"))
    outdir.mkdir(parents=True, exist_ok=True)
    thresholds = (
        _setting(args, config, "small_pct"), _setting(args, config, "large_pct"),
        _setting(args, config, "alpha_heavy"), _setting(args, config, "corr_margin"))
    Thresholds(*thresholds)  # validate early
    inputs = _collect_inputs(args.input)
    tasks = [(str(p), kind, steps, harmonics, offsets_path, thresholds, str(outdir), budget)
             for p in inputs]
    payloads = _run_pool(_classify_one, tasks, jobs)
    payloads.sort(key=lambda p: p["series_meta"]["input"])
    _aggregate_reports(payloads, outdir)
    n_flagged = sum(1 for p in payloads if p["flags"])
    print(f"classified {len(payloads)} series -> {outdir} "
          f"({n_flagged} with flags)")
    return 0


def cmd_report(args, config) -> int:
    outdir = Path(_setting(args, config, "output_dir"))
    outdir.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    for pattern in args.input:
        p = Path(pattern)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.report.json")))
        else:
            paths.extend(Path(h) for h in sorted(glob.glob(pattern)))
    if not paths:
        raise FileNotFoundError("no report JSONs found")
    payloads = []
    for path in paths:
        with open(path) as fh:
            payloads.append(json.load(fh))
    payloads.sort(key=lambda p: p["series_meta"].get("input", ""))
    _aggregate_reports(payloads, outdir)
    print(f"aggregated {len(payloads)} reports -> {outdir}")
    return 0


# --- oracle-check ----------------------------------------------------------

def _oracle_specs() -> dict[str, ResidualSignalSpec]:
    return {
        "trend": ResidualSignalSpec(kind="trend", a_r=1.0, b_r=0.5, mu_c=0.2,
                                    sigma_n2=1.0),
        "seasonal": ResidualSignalSpec(kind="seasonal",
                                       seasonal_pairs=((0.1, 0.05),),
                                       mu_c=0.2, sigma_n2=1.0),
        "offsets": ResidualSignalSpec(kind="offsets", offsets=((0.5, 0.5),),
                                      mu_c=0.2, sigma_n2=1.0),
    }


def cmd_oracle_check(args, config) -> int:
    outdir = Path(_setting(args, config, "output_dir"))
    outdir.mkdir(parents=True, exist_ok=True)
    lengths = [int(tok) for tok in str(_setting(args, config, "lengths")).split(",")]
    rows = []
    for kind, spec in _oracle_specs().items():
        for L in lengths:
            eff = spec
            if kind == "offsets":
                eff = ResidualSignalSpec(kind="offsets", offsets=((0.5, L / 2.0),),
                                         mu_c=spec.mu_c, sigma_n2=spec.sigma_n2)
            exact = moments(eff, L, "exact")
            approx = moments(eff, L, "approx")
            brute = brute_force_moments(eff, L)
            rel = lambda a, b: abs(a - b) / max(abs(b), 1e-300)
            rows.append([kind, L, repr(exact[0]), repr(exact[1]), repr(approx[0]),
                         repr(approx[1]), repr(brute[0]), repr(brute[1]),
                         f"{rel(exact[1], brute[1]):.3e}", f"{rel(approx[1], brute[1]):.3e}"])
    path = outdir / "oracle_check.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "L", "exact_mean", "exact_var", "approx_mean",
                         "approx_var", "brute_mean", "brute_var",
                         "rel_err_exact_var", "rel_err_approx_var"])
        writer.writerows(rows)
    print(f"wrote {path}")
    return 0


# --- entry point -----------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--jobs", type=int, default=None)
    sub.add_argument("--config", type=str, default=None)
    sub.add_argument("--output-dir", dest="output_dir", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levyts",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="generate scenario series + truth manifest")
    sim.add_argument("--scenario", choices=["A", "B", "C"], default=None)
    sim.add_argument("--beta", type=float, default=None)
    sim.add_argument("--replicates", type=int, default=None)
    sim.add_argument("--length", type=int, default=None)
    sim.add_argument("--noise-model", dest="noise_model",
                     choices=["pl+wn", "fn+wn"], default=None)
    _add_common(sim)
    sim.set_defaults(func=cmd_simulate)

    fit = subs.add_parser("fit", help="fit one series: functional + stochastic models")
    fit.add_argument("--input", nargs="+", required=True)
    fit.add_argument("--noise-model", dest="noise_model",
                     choices=["pl+wn", "fn+wn"], default=None)
    fit.add_argument("--harmonics", type=int, default=None)
    fit.add_argument("--offsets", type=str, default=None)
    _add_common(fit)
    fit.set_defaults(func=cmd_fit)

    cls = subs.add_parser("classify", help="window-growing Levy classification")
    cls.add_argument("--input", nargs="+", required=True)
    cls.add_argument("--noise-model", dest="noise_model",
                     choices=["pl+wn", "fn+wn"], default=None)
    cls.add_argument("--steps", type=str, default=None,
                     help="comma-separated step fractions of one year")
    cls.add_argument("--harmonics", type=int, default=None)
    cls.add_argument("--offsets", type=str, default=None)
    cls.add_argument("--memory-budget", dest="memory_budget", type=int, default=None)
    cls.add_argument("--small-pct", dest="small_pct", type=float, default=None)
    cls.add_argument("--large-pct", dest="large_pct", type=float, default=None)
    cls.add_argument("--alpha-heavy", dest="alpha_heavy", type=float, default=None)
    cls.add_argument("--corr-margin", dest="corr_margin", type=float, default=None)
    _add_common(cls)
    cls.set_defaults(func=cmd_classify)

    orc = subs.add_parser("oracle-check", help="closed-form vs brute-force moments CSV")
    orc.add_argument("--lengths", type=str, default=None)
    _add_common(orc)
    orc.set_defaults(func=cmd_oracle_check)

    rep = subs.add_parser("report", help="aggregate stored report JSONs")
    rep.add_argument("--input", nargs="+", required=True)
    _add_common(rep)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = {}
    try:
        if getattr(args, "config", None):
            config = _read_config(args.config)
        return args.func(args, config)
    except (ConfigError, FileNotFoundError, PermissionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
