"""Experiment front door.

Commands:
    simulate            run the Monte Carlo ensemble, write empirical.csv
    predict             run the analytical models, write theoretical.csv
    compare             per-channel deviations, verdict, and plots
    normality           capture weight-error pairs and test their normality
    reproduce-figures   full pipeline with the built-in benchmark preset

Exit codes: 0 success, 2 configuration/validation problem, 3 runtime
numerical failure. All outputs are plain files (CSV, SVG, JSON manifest);
a command refuses to overwrite its own outputs unless --overwrite is given.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, replace

import numpy as np
import yaml

from . import __version__
from .errors import (ConfigurationError, DegenerateCovarianceError,
                     DegenerateSampleError, LinearSolveError,
                     NumericalFailureError)
from .records import TrajectoryRecord
from .sim import (ExperimentConfig, normality_audit, run_ensemble,
                  rx_toeplitz, sparse32_config)
from .theory import SystemSpec, run_theory

__all__ = [
    "CompareTolerances",
    "RunManifest",
    "load_config",
    "cmd_simulate",
    "cmd_predict",
    "cmd_compare",
    "cmd_normality",
    "cmd_reproduce_figures",
    "main",
]

_SCHEMA = "trajectory-v1"
# Rows used for "terminal" statistics and the mean-weight check.
_TAIL_WINDOW = 200


@dataclass(frozen=True)
class CompareTolerances:
    """Pass/fail gates for empirical-vs-theoretical comparisons. The dB
    gates apply from iteration `curve_from` on; weight and terminal checks
    average over the final `tail_window` iterations."""

    weight_tol: float = 0.02
    curve_tol_db: float = 1.0
    curve_from: int = 100
    terminal_mse_tol_db: float = 0.5
    tail_window: int = _TAIL_WINDOW


@dataclass
class RunManifest:
    command: str
    version: str
    out_dir: str
    duration_s: float
    config: dict
    config_sha256: str
    outputs: dict


# ---------------------------------------------------------------------------
# Config document handling
# ---------------------------------------------------------------------------

def _section(doc: dict, name: str) -> dict:
    value = doc.get(name)
    if value is None:
        raise ConfigurationError(f"missing section '{name}'")
    if not isinstance(value, dict):
        raise ConfigurationError(f"section '{name}' must be a mapping")
    return value


def _field(section: dict, section_name: str, key: str, kind, required=True,
           default=None):
    if key not in section:
        if required:
            raise ConfigurationError(f"missing field '{section_name}.{key}'")
        return default
    value = section[key]
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(
            f"field '{section_name}.{key}' has invalid value {value!r}: {exc}"
        ) from exc


def load_config(path) -> tuple[ExperimentConfig, CompareTolerances]:
    """Parse the experiment configuration document (YAML)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config document must be a mapping")

    filt = _section(doc, "filter")
    inp = _section(doc, "input")
    noise = _section(doc, "noise")
    system = _section(doc, "system")
    run = _section(doc, "run")
    capture = doc.get("capture") or {}

    w_star = system.get("w_star")
    if w_star is None:
        raise ConfigurationError("missing field 'system.w_star'")
    if not isinstance(w_star, (list, tuple)):
        raise ConfigurationError("field 'system.w_star' must be a list of reals")

    pairs = capture.get("pairs", ())
    try:
        pairs = tuple((int(p[0]), int(p[1])) for p in pairs)
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigurationError(f"field 'capture.pairs' must be index pairs: {exc}") from exc

    config = ExperimentConfig(
        L=_field(filt, "filter", "L", int),
        lam=_field(filt, "filter", "lambda", float),
        delta=_field(filt, "filter", "delta", float),
        epsilon=_field(filt, "filter", "epsilon", float),
        sigma_z2=_field(noise, "noise", "sigma_z2", float),
        rho=_field(inp, "input", "rho", float),
        sigma_s2=_field(inp, "input", "sigma_s2", float),
        w_star=tuple(float(v) for v in w_star),
        n_iters=_field(run, "run", "n_iters", int),
        n_runs=_field(run, "run", "n_runs", int),
        seed=_field(run, "run", "seed", int),
        capture_instants=tuple(
            int(v) for v in capture.get("instants", ())),
        capture_pairs=pairs,
        capture_samples=_field(capture, "capture", "samples", int,
                               required=False, default=0),
    )

    comp = doc.get("compare") or {}
    tolerances = CompareTolerances(
        weight_tol=_field(comp, "compare", "weight_tol", float,
                          required=False, default=0.02),
        curve_tol_db=_field(comp, "compare", "curve_tol_db", float,
                            required=False, default=1.0),
        curve_from=_field(comp, "compare", "curve_from", int,
                          required=False, default=100),
        terminal_mse_tol_db=_field(comp, "compare", "terminal_mse_tol_db", float,
                                   required=False, default=0.5),
        tail_window=_field(comp, "compare", "tail_window", int,
                           required=False, default=_TAIL_WINDOW),
    )
    return config, tolerances


def config_to_dict(config: ExperimentConfig) -> dict:
    """Nested mapping mirroring the config document (manifest snapshot)."""
    return {
        "filter": {"L": config.L, "lambda": config.lam, "delta": config.delta,
                   "epsilon": config.epsilon},
        "input": {"rho": config.rho, "sigma_s2": config.sigma_s2},
        "noise": {"sigma_z2": config.sigma_z2},
        "system": {"w_star": list(config.w_star)},
        "run": {"n_iters": config.n_iters, "n_runs": config.n_runs,
                "seed": config.seed},
        "capture": {"instants": list(config.capture_instants),
                    "pairs": [list(p) for p in config.capture_pairs],
                    "samples": config.capture_samples},
    }


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def theory_config_hash(config: ExperimentConfig) -> str:
    """Hash of the configuration fields the analytical models depend on.

    Theory outputs are seed-free and run-count-free, so those fields are
    normalized out; predict then yields byte-identical files across seeds."""
    return config_hash(replace(config, seed=0, n_runs=1,
                               capture_instants=(), capture_pairs=(),
                               capture_samples=0))


def write_config_yaml(path, config: ExperimentConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_to_dict(config), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# Trajectory CSV I/O
# ---------------------------------------------------------------------------

def write_trajectory_csv(path, record: TrajectoryRecord, cfg_hash: str) -> None:
    """17-significant-digit CSV: n, mean_w_1..L, msd, mse, emse."""
    L = record.n_taps
    header = ["n"] + [f"mean_w_{i + 1}" for i in range(L)] + ["msd", "mse", "emse"]
    lines = [f"# l1rls {__version__} schema={_SCHEMA} kind={record.kind} "
             f"config=sha256:{cfg_hash}"]
    lines.append(",".join(header))
    for t in range(record.n_iters):
        cells = [str(t + 1)]
        cells += [format(v, ".17g") for v in record.mean_w[t]]
        cells += [format(record.msd[t], ".17g"), format(record.mse[t], ".17g"),
                  format(record.emse[t], ".17g")]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trajectory_csv(path) -> tuple[TrajectoryRecord, dict]:
    """Parse a trajectory CSV back into a record plus header metadata."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    meta = {}
    if not lines or not lines[0].startswith("#"):
        raise ConfigurationError(f"{path}: missing schema header comment")
    for token in lines[0][1:].split():
        if "=" in token:
            key, _, val = token.partition("=")
            meta[key] = val
    if meta.get("schema") != _SCHEMA:
        raise ConfigurationError(
            f"{path}: unsupported schema {meta.get('schema')!r}")
    header = lines[1].split(",")
    expected_tail = ["msd", "mse", "emse"]
    if header[:1] != ["n"] or header[-3:] != expected_tail:
        raise ConfigurationError(f"{path}: unexpected column layout")
    L = len(header) - 4
    data = np.loadtxt(lines[2:], delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise ConfigurationError(f"{path}: row width does not match header")
    record = TrajectoryRecord(kind=meta.get("kind", "empirical"),
                              mean_w=data[:, 1:1 + L], msd=data[:, 1 + L],
                              mse=data[:, 2 + L], emse=data[:, 3 + L])
    return record, meta


# ---------------------------------------------------------------------------
# Output-directory and manifest plumbing
# ---------------------------------------------------------------------------

def _prepare_out_dir(out_dir, planned: list[str], overwrite: bool) -> None:
    os.makedirs(out_dir, exist_ok=True)
    if overwrite:
        return
    clashes = [name for name in planned
               if os.path.exists(os.path.join(out_dir, name))]
    if clashes:
        raise ConfigurationError(
            f"output files already exist in {out_dir}: {', '.join(clashes)} "
            "(use --overwrite to replace)")


def _write_manifest(out_dir, manifest: RunManifest, name="manifest.json") -> str:
    path = os.path.join(out_dir, name)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def _db(values: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(values, 1e-300))


# ---------------------------------------------------------------------------
# Plots
# ---------------------------------------------------------------------------

def _plot_weights(emp: TrajectoryRecord, theo: TrajectoryRecord, path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = emp.iterations
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i in range(emp.n_taps):
        ax.plot(n, emp.mean_w[:, i], color="C0", lw=0.8, alpha=0.6,
                label="empirical" if i == 0 else None)
        ax.plot(n, theo.mean_w[:, i], color="C3", lw=0.8, ls="--",
                label="model" if i == 0 else None)
    ax.set_xlabel("iteration n")
    ax.set_ylabel("mean weight")
    ax.legend(loc="upper right")
    ax.set_title("Mean weight evolution")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _plot_error_curves(emp: TrajectoryRecord, theo: TrajectoryRecord,
                       mse_path, msd_path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = emp.iterations
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(n, _db(emp.mse), color="C0", lw=0.9, label="MSE empirical")
    ax.plot(n, _db(theo.mse), color="C3", lw=0.9, ls="--", label="MSE model")
    ax.plot(n, _db(emp.emse), color="C2", lw=0.9, label="EMSE empirical")
    ax.plot(n, _db(theo.emse), color="C1", lw=0.9, ls="--", label="EMSE model")
    ax.set_xlabel("iteration n")
    ax.set_ylabel("dB")
    ax.legend(loc="upper right")
    ax.set_title("MSE and EMSE learning curves")
    fig.tight_layout()
    fig.savefig(mse_path)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(n, _db(emp.msd), color="C0", lw=0.9, label="MSD empirical")
    ax.plot(n, _db(theo.msd), color="C3", lw=0.9, ls="--", label="MSD model")
    ax.set_xlabel("iteration n")
    ax.set_ylabel("dB")
    ax.legend(loc="upper right")
    ax.set_title("MSD learning curve")
    fig.tight_layout()
    fig.savefig(msd_path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Comparison logic
# ---------------------------------------------------------------------------

def compare_records(emp: TrajectoryRecord, theo: TrajectoryRecord,
                    tol: CompareTolerances) -> dict:
    """Deviation summary and pass/fail verdict for a record pair."""
    if emp.n_iters != theo.n_iters or emp.n_taps != theo.n_taps:
        raise ConfigurationError(
            f"record shapes differ: {emp.mean_w.shape} vs {theo.mean_w.shape}")
    n = emp.n_iters
    tail = min(tol.tail_window, n)
    start = min(max(tol.curve_from - 1, 0), n - 1)

    checks = []

    weight_dev = np.abs(emp.mean_w - theo.mean_w)[n - tail:].mean(axis=0)
    worst_tap = int(np.argmax(weight_dev))
    checks.append({
        "name": f"mean weights: per-tap |emp - model| averaged over final {tail}",
        "observed": float(weight_dev.max()),
        "tolerance": tol.weight_tol,
        "detail": f"worst tap {worst_tap + 1}",
        "passed": bool(weight_dev.max() <= tol.weight_tol),
    })

    curve_summary = {}
    for name in ("mse", "emse", "msd"):
        dev_db = np.abs(_db(getattr(emp, name)) - _db(getattr(theo, name)))
        observed = float(dev_db[start:].max())
        curve_summary[name] = {
            "max_abs_db_from_gate": observed,
            "mean_abs_db_from_gate": float(dev_db[start:].mean()),
            "max_abs_db_all": float(dev_db.max()),
        }
        checks.append({
            "name": f"{name} dB deviation for n >= {start + 1}",
            "observed": observed,
            "tolerance": tol.curve_tol_db,
            "detail": f"worst at n={int(np.argmax(dev_db[start:])) + start + 1}",
            "passed": bool(observed <= tol.curve_tol_db),
        })

    term_emp = float(emp.mse[n - tail:].mean())
    term_theo = float(theo.mse[n - tail:].mean())
    term_dev = abs(10.0 * math.log10(term_emp / term_theo))
    checks.append({
        "name": f"terminal MSE (mean of final {tail}) dB deviation",
        "observed": term_dev,
        "tolerance": tol.terminal_mse_tol_db,
        "detail": f"empirical {term_emp:.6g}, model {term_theo:.6g}",
        "passed": bool(term_dev <= tol.terminal_mse_tol_db),
    })

    return {
        "n_iters": n,
        "weight_dev_per_tap": [float(v) for v in weight_dev],
        "curves": curve_summary,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _apply_overrides(config: ExperimentConfig, seed=None, runs=None) -> ExperimentConfig:
    if seed is not None:
        config = replace(config, seed=int(seed))
    if runs is not None:
        config = replace(config, n_runs=int(runs))
    return config


def cmd_simulate(config_path, out_dir, *, seed=None, runs=None,
                 overwrite=False) -> RunManifest:
    """Run the ensemble and write empirical.csv plus a manifest."""
    config, _ = load_config(config_path)
    config = _apply_overrides(config, seed, runs)
    # Captures are collected by the normality command, not here.
    config = replace(config, capture_instants=(), capture_pairs=(),
                     capture_samples=0)
    _prepare_out_dir(out_dir, ["empirical.csv", "manifest.json"], overwrite)
    started = time.perf_counter()
    record, _ = run_ensemble(config)
    csv_path = os.path.join(out_dir, "empirical.csv")
    write_trajectory_csv(csv_path, record, config_hash(config))
    manifest = RunManifest(command="simulate", version=__version__,
                           out_dir=str(out_dir),
                           duration_s=time.perf_counter() - started,
                           config=config_to_dict(config),
                           config_sha256=config_hash(config),
                           outputs={"empirical": "empirical.csv"})
    _write_manifest(out_dir, manifest)
    return manifest


def _system_from_config(config: ExperimentConfig) -> SystemSpec:
    return SystemSpec(w_star=config.w_star_array(),
                      R_x=rx_toeplitz(config.rho, config.sigma_x2, config.L),
                      sigma_z2=config.sigma_z2, lam=config.lam,
                      delta=config.delta, epsilon=config.epsilon)


def cmd_predict(config_path, out_dir, *, seed=None, runs=None,
                overwrite=False) -> RunManifest:
    """Run the analytical models and write theoretical.csv (seed-free)."""
    config, _ = load_config(config_path)
    config = _apply_overrides(config, seed, runs)
    _prepare_out_dir(out_dir, ["theoretical.csv", "manifest.json"], overwrite)
    started = time.perf_counter()
    record = run_theory(_system_from_config(config), config.n_iters)
    csv_path = os.path.join(out_dir, "theoretical.csv")
    write_trajectory_csv(csv_path, record, theory_config_hash(config))
    manifest = RunManifest(command="predict", version=__version__,
                           out_dir=str(out_dir),
                           duration_s=time.perf_counter() - started,
                           config=config_to_dict(config),
                           config_sha256=config_hash(config),
                           outputs={"theoretical": "theoretical.csv"})
    _write_manifest(out_dir, manifest)
    return manifest


def cmd_compare(empirical_csv, theoretical_csv, out_dir, *,
                tolerances: CompareTolerances | None = None,
                overwrite=False) -> dict:
    """Compare two trajectory CSVs; write report, verdict, and plots."""
    tol = tolerances or CompareTolerances()
    planned = ["comparison.json", "weights_evolution.svg", "mse_emse.svg",
               "msd.svg"]
    _prepare_out_dir(out_dir, planned, overwrite)
    emp, _ = read_trajectory_csv(empirical_csv)
    theo, _ = read_trajectory_csv(theoretical_csv)
    report = compare_records(emp, theo, tol)
    report["tolerances"] = asdict(tol)
    report["inputs"] = {"empirical": str(empirical_csv),
                        "theoretical": str(theoretical_csv)}
    _plot_weights(emp, theo, os.path.join(out_dir, "weights_evolution.svg"))
    _plot_error_curves(emp, theo, os.path.join(out_dir, "mse_emse.svg"),
                       os.path.join(out_dir, "msd.svg"))
    with open(os.path.join(out_dir, "comparison.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def _histogram_summary(samples: np.ndarray, bins: int = 20) -> dict:
    counts, xe, ye = np.histogram2d(samples[:, 0], samples[:, 1], bins=bins)
    return {"bins": bins,
            "x_edges": [float(v) for v in xe],
            "y_edges": [float(v) for v in ye],
            "counts": counts.astype(int).tolist()}


def cmd_normality(config_path, out_dir, *, seed=None, runs=None,
                  overwrite=False) -> RunManifest:
    """Capture weight-error pairs, test them for bivariate normality, and
    write the samples, histogram summaries, and decisions."""
    config, _ = load_config(config_path)
    config = _apply_overrides(config, seed, runs)
    if not config.capture_instants:
        raise ConfigurationError("config has no capture section to audit")
    if config.capture_samples > config.n_runs:
        raise ConfigurationError(
            f"cannot collect {config.capture_samples} capture samples from "
            f"{config.n_runs} runs")
    sample_names = [f"samples_n{inst}_pair{p[0]}_{p[1]}.csv"
                    for inst, p in zip(config.capture_instants,
                                       config.capture_pairs)]
    _prepare_out_dir(out_dir, sample_names + ["normality.json", "manifest.json"],
                     overwrite)
    started = time.perf_counter()
    _, pair_sets = run_ensemble(config, trajectories=False)
    decisions = normality_audit(pair_sets)
    outputs = {}
    entries = []
    for ps, decision, name in zip(pair_sets, decisions, sample_names):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"wtilde_{ps.pair[0]},wtilde_{ps.pair[1]}\n")
            for row in ps.samples:
                fh.write(f"{row[0]:.17g},{row[1]:.17g}\n")
        outputs[name] = name
        entries.append({
            "instant": decision.instant,
            "pair": list(decision.pair),
            "n_samples": decision.n_samples,
            "statistic": decision.statistic,
            "p_value": decision.p_value,
            "reject_at_0_05": decision.reject_at_0_05,
            "error": decision.error,
            "histogram": _histogram_summary(ps.samples),
        })
    with open(os.path.join(out_dir, "normality.json"), "w", encoding="utf-8") as fh:
        json.dump({"decisions": entries}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs["report"] = "normality.json"
    manifest = RunManifest(command="normality", version=__version__,
                           out_dir=str(out_dir),
                           duration_s=time.perf_counter() - started,
                           config=config_to_dict(config),
                           config_sha256=config_hash(config),
                           outputs=outputs)
    _write_manifest(out_dir, manifest)
    return manifest


def cmd_reproduce_figures(out_dir, *, seed=None, runs=None,
                          overwrite=False) -> RunManifest:
    """Full benchmark pipeline with the built-in 32-tap sparse preset:
    simulate + predict + compare + normality, plus a summary verdict.

    A --runs override scales the whole pipeline, including the capture
    ensemble (one captured sample per run, so runs must stay >= 100 for the
    normality audit).
    """
    started = time.perf_counter()
    config = sparse32_config()
    config = _apply_overrides(config, seed, runs)
    _prepare_out_dir(out_dir, ["config.yaml", "normality_config.yaml",
                               "summary.json", "reproduce_manifest.json",
                               "empirical.csv", "theoretical.csv",
                               "comparison.json"], overwrite)
    config_path = os.path.join(out_dir, "config.yaml")
    write_config_yaml(config_path, config)

    cmd_simulate(config_path, out_dir, overwrite=True)
    cmd_predict(config_path, out_dir, overwrite=True)
    report = cmd_compare(os.path.join(out_dir, "empirical.csv"),
                         os.path.join(out_dir, "theoretical.csv"),
                         out_dir, overwrite=True)

    # The normality audit collects one sample per run, so it gets its own
    # ensemble sized by the capture demand; it only has to reach the last
    # capture instant.
    eff_capture = config.capture_samples
    if runs is not None:
        eff_capture = min(eff_capture, config.n_runs)
    norm_config = replace(
        config,
        n_runs=eff_capture,
        capture_samples=eff_capture,
        n_iters=max(config.capture_instants) if config.capture_instants
        else config.n_iters,
    )
    norm_dir = os.path.join(out_dir, "normality")
    norm_config_path = os.path.join(out_dir, "normality_config.yaml")
    write_config_yaml(norm_config_path, norm_config)
    cmd_normality(norm_config_path, norm_dir, overwrite=True)

    norm_path = os.path.join(norm_dir, "normality.json")
    with open(norm_path, "r", encoding="utf-8") as fh:
        norm_report = json.load(fh)
    normality_ok = all(not entry["reject_at_0_05"] and entry["error"] is None
                       for entry in norm_report["decisions"])

    summary = {
        "passed": bool(report["passed"] and normality_ok),
        "comparison": {"passed": report["passed"],
                       "checks": report["checks"]},
        "normality": {"passed": normality_ok,
                      "decisions": [
                          {k: entry[k] for k in
                           ("instant", "pair", "statistic", "p_value",
                            "reject_at_0_05", "error")}
                          for entry in norm_report["decisions"]]},
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    manifest = RunManifest(command="reproduce-figures", version=__version__,
                           out_dir=str(out_dir),
                           duration_s=time.perf_counter() - started,
                           config=config_to_dict(config),
                           config_sha256=config_hash(config),
                           outputs={
                               "empirical": "empirical.csv",
                               "theoretical": "theoretical.csv",
                               "comparison": "comparison.json",
                               "weights_plot": "weights_evolution.svg",
                               "mse_emse_plot": "mse_emse.svg",
                               "msd_plot": "msd.svg",
                               "normality": "normality/normality.json",
                               "summary": "summary.json",
                           })
    _write_manifest(out_dir, manifest, name="reproduce_manifest.json")
    return manifest


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l1rls",
        description="Sparse RLS transient analysis: simulation, models, comparison.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="config document (YAML)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--runs", type=int, default=None, help="override run.n_runs")
        p.add_argument("--overwrite", action="store_true",
                       help="replace existing outputs")

    add_common(sub.add_parser("simulate", help="Monte Carlo ensemble -> empirical.csv"))
    add_common(sub.add_parser("predict", help="analytical models -> theoretical.csv"))

    comp = sub.add_parser("compare", help="compare empirical vs theoretical CSVs")
    comp.add_argument("--empirical", required=True)
    comp.add_argument("--theoretical", required=True)
    comp.add_argument("--out", required=True)
    comp.add_argument("--config", default=None,
                      help="optional config supplying compare tolerances")
    comp.add_argument("--overwrite", action="store_true")

    add_common(sub.add_parser(
        "normality", help="capture weight-error pairs and test normality"))

    add_common(sub.add_parser(
        "reproduce-figures",
        help="full benchmark pipeline with the built-in preset"),
        config_required=False)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cmd_simulate(args.config, args.out, seed=args.seed,
                         runs=args.runs, overwrite=args.overwrite)
        elif args.command == "predict":
            cmd_predict(args.config, args.out, seed=args.seed,
                        runs=args.runs, overwrite=args.overwrite)
        elif args.command == "compare":
            tolerances = None
            if args.config is not None:
                _, tolerances = load_config(args.config)
            report = cmd_compare(args.empirical, args.theoretical, args.out,
                                 tolerances=tolerances, overwrite=args.overwrite)
            for check in report["checks"]:
                status = "pass" if check["passed"] else "FAIL"
                print(f"[{status}] {check['name']}: observed {check['observed']:.4g} "
                      f"(tolerance {check['tolerance']:.4g})")
            print(f"comparison verdict: {'pass' if report['passed'] else 'FAIL'}")
        elif args.command == "normality":
            cmd_normality(args.config, args.out, seed=args.seed,
                          runs=args.runs, overwrite=args.overwrite)
        elif args.command == "reproduce-figures":
            manifest = cmd_reproduce_figures(args.out, seed=args.seed,
                                             runs=args.runs,
                                             overwrite=args.overwrite)
            with open(os.path.join(args.out, "summary.json"), encoding="utf-8") as fh:
                summary = json.load(fh)
            print(f"pipeline finished in {manifest.duration_s:.1f} s; "
                  f"verdict: {'pass' if summary['passed'] else 'FAIL'}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailureError, LinearSolveError, DegenerateCovarianceError,
            DegenerateSampleError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
