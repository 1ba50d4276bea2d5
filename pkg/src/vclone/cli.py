"""Experiment runner: configure, train, validate, report, and self-check.

All result files are plain structured text (CSV and line-delimited JSON)
so downstream plotting stays tool-agnostic.  Angles in configs are always
radians; a config declaring any other unit is rejected.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import sys
from pathlib import Path

import click
import jsonschema
import numpy as np

from . import __version__
from . import cloner, fock, optimizer, sampler
from .cloner import QubitState
from .mesh import MeshSpec

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["task", "seed"],
    "additionalProperties": False,
    "properties": {
        "task": {"enum": ["pc", "sd"]},
        "mesh": {
            "oneOf": [
                {"const": "four_mode_core"},
                {
                    "type": "object",
                    "required": ["mode_count", "cells"],
                    "properties": {
                        "mode_count": {"type": "integer", "minimum": 2},
                        "cells": {"type": "array"},
                        "fixed_couplers": {"type": "array"},
                    },
                },
            ]
        },
        "angle_unit": {"const": "rad"},
        "lambda": {"type": "number", "minimum": 0},
        "pair": {
            "type": "object",
            "required": ["a", "b"],
            "additionalProperties": False,
            "properties": {
                "a": {"$ref": "#/$defs/state"},
                "b": {"$ref": "#/$defs/state"},
            },
        },
        "nm": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "reflection": {"type": "number"},
                "expansion": {"type": "number"},
                "contraction": {"type": "number"},
                "shrink": {"type": "number"},
                "initial_edge": {"type": "number"},
                "max_iterations": {"type": "integer", "minimum": 1},
                "max_evaluations": {"type": "integer", "minimum": 1},
                "stagnation_window": {"type": "integer", "minimum": 1},
                "stagnation_tol": {"type": "number"},
                "collapse_diameter": {"type": "number"},
                "reboot_scale": {"type": "number"},
                "max_reboots": {"type": "integer", "minimum": 0},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "shots": {
                    "oneOf": [{"type": "integer", "minimum": 1}, {"const": "exact"}]
                },
                "seed": {"type": "integer"},
            },
        },
        "restarts": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "output_dir": {"type": "string"},
    },
    "$defs": {
        "state": {
            "type": "object",
            "required": ["theta", "phi"],
            "additionalProperties": False,
            "properties": {
                "theta": {"type": "number"},
                "phi": {"type": "number"},
            },
        }
    },
}

OPTIMAL_LINE = cloner.OPTIMAL_EQUATORIAL_FIDELITY
SEMICLASSICAL_LINE = cloner.SEMICLASSICAL_FIDELITY


class ConfigError(click.ClickException):
    pass


def load_config(path: Path) -> tuple[dict, bytes]:
    """Read and schema-validate an experiment config; returns (config, raw bytes)."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}")
    if config["task"] == "sd":
        if "lambda" not in config:
            raise ConfigError("sd task requires a 'lambda' value")
        if "pair" not in config:
            raise ConfigError("sd task requires a 'pair' of states")
    return config, raw


def mesh_from_config(config: dict) -> MeshSpec:
    mesh = config.get("mesh", "four_mode_core")
    if mesh == "four_mode_core":
        return MeshSpec.four_mode_core()
    return MeshSpec.from_dict(mesh)


def noise_from_config(config: dict) -> sampler.NoiseConfig:
    noise = config.get("noise", {"shots": "exact"})
    shots = noise.get("shots", "exact")
    return sampler.NoiseConfig(
        shots=None if shots == "exact" else int(shots),
        seed=int(noise.get("seed", config["seed"])),
    )


def nm_from_config(config: dict) -> optimizer.NMConfig:
    return optimizer.NMConfig(**config.get("nm", {}), seed=config["seed"])


class RunManifest:
    """Ledger of a run directory: config hash, seed, timestamps, outputs."""

    def __init__(self, run_dir: Path):
        self.path = Path(run_dir) / "manifest.json"
        if self.path.exists():
            self.data = json.loads(self.path.read_text())
        else:
            self.data = {
                "artifact_version": __version__,
                "created": _now(),
                "files": [],
            }

    def set_config(self, raw: bytes, seed: int) -> None:
        self.data["config_sha256"] = hashlib.sha256(raw).hexdigest()
        self.data["seed"] = seed

    def add_file(self, path: Path) -> None:
        rel = str(Path(path).relative_to(self.path.parent))
        if rel not in self.data["files"]:
            self.data["files"].append(rel)

    def write(self) -> None:
        self.data["updated"] = _now()
        self.path.write_text(json.dumps(self.data, indent=2) + "\n")


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Train and inspect variational photonic cloning circuits."""


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Override the config output directory.")
@click.option("--shots", default=None,
              help="Override the shot budget per evaluation ('exact' or an integer).")
def cmd_train(config_path: Path, seed: int | None, out_dir: Path | None, shots: str | None) -> None:
    """Run a training task and persist traces, summary, and best parameters."""
    config, raw = load_config(config_path)
    if seed is not None:
        config["seed"] = seed
    if shots is not None:
        config.setdefault("noise", {})["shots"] = "exact" if shots == "exact" else int(shots)
    run_dir = Path(out_dir or config.get("output_dir", "runs/latest"))
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(json.dumps(config, indent=2) + "\n")

    spec = mesh_from_config(config)
    noise = noise_from_config(config)
    cfg = nm_from_config(config)
    restarts = config.get("restarts", 1)

    if config["task"] == "pc":
        states = [QubitState.equatorial(phi) for phi in cloner.TRAINING_PHASES]
        state_ids = [f"equatorial phi={phi:.6f}" for phi in cloner.TRAINING_PHASES]

        def task_for(restart: int) -> optimizer.Task:
            evaluator = None
            if noise.shots is not None:
                restart_noise = sampler.NoiseConfig(shots=noise.shots, seed=noise.seed + restart)
                evaluator = sampler.sampled_evaluator(restart_noise, spec)
            return optimizer.pc_task(spec, evaluator=evaluator)

        def noiseless_cost(params):
            return cloner.cost_pc(params, spec)

    else:
        pair = config["pair"]
        psi_a = QubitState(pair["a"]["theta"], pair["a"]["phi"])
        psi_b = QubitState(pair["b"]["theta"], pair["b"]["phi"])
        lam = config["lambda"]
        states = [psi_a, psi_b]
        state_ids = ["A", "B"]

        def task_for(restart: int) -> optimizer.Task:
            evaluator = None
            if noise.shots is not None:
                restart_noise = sampler.NoiseConfig(shots=noise.shots, seed=noise.seed + restart)
                evaluator = sampler.sampled_evaluator(restart_noise, spec)
            return optimizer.sd_task(psi_a, psi_b, lam, spec, evaluator=evaluator)

        def noiseless_cost(params):
            return cloner.cost_sd(params, psi_a, psi_b, lam, spec)

    best, traces = optimizer.train(task_for, cfg, restarts, seed=config["seed"])

    manifest = RunManifest(run_dir)
    manifest.set_config(json.dumps(config, indent=2).encode() + b"\n", config["seed"])
    manifest.add_file(run_dir / "config.json")

    traces_dir = run_dir / "traces"
    traces_dir.mkdir(exist_ok=True)
    for r, trace in enumerate(traces):
        path = traces_dir / f"restart_{r:03d}.jsonl"
        trace.to_jsonl(path)
        manifest.add_file(path)

    best_params = {
        "task": config["task"],
        "phases": [float(x) for x in cloner.wrap_params(best.best_point)],
        "cost": best.best_cost,
        "seed": best.seed,
        "n_iterations": best.n_iterations,
        "n_evaluations": best.n_evaluations,
        "n_reboots": best.n_reboots,
    }
    params_path = run_dir / "best_params.json"
    params_path.write_text(json.dumps(best_params, indent=2) + "\n")
    manifest.add_file(params_path)

    rows = []
    for state_id, psi in zip(state_ids, states):
        _, out = cloner.run_cloner(best.best_point, psi, spec)
        rows.append((state_id, f"{out.f1:.12f}", f"{out.f2:.12f}", f"{out.p_post:.12f}"))
    summary_path = run_dir / "summary.csv"
    _write_csv(summary_path, ["state_id", "f1", "f2", "p_post"], rows)
    manifest.add_file(summary_path)

    summary = {
        "task": config["task"],
        "best_cost_trace": best.best_cost,
        "best_cost_noiseless": float(noiseless_cost(best.best_point)),
        "restarts": restarts,
        "total_evaluations": sum(t.n_evaluations for t in traces),
        "total_iterations": sum(t.n_iterations for t in traces),
        "total_reboots": sum(t.n_reboots for t in traces),
    }
    summary_json = run_dir / "summary.json"
    summary_json.write_text(json.dumps(summary, indent=2) + "\n")
    manifest.add_file(summary_json)
    manifest.write()

    click.echo(f"best cost (trace): {best.best_cost:.6f}")
    click.echo(f"best cost (noiseless recomputation): {summary['best_cost_noiseless']:.6f}")
    for row in rows:
        click.echo(f"  {row[0]}: F1={row[1]} F2={row[2]} P={row[3]}")


@main.command("validate")
@click.option("--params", "params_path", required=True, type=click.Path(path_type=Path),
              help="best_params.json file or a run directory containing one.")
@click.option("--count", type=int, default=50, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="Output CSV (default: sweep.csv next to the params file).")
def cmd_validate(params_path: Path, count: int, out_path: Path | None) -> None:
    """Sweep evenly spaced equatorial test states with trained parameters."""
    params_path = Path(params_path)
    if params_path.is_dir():
        params_path = params_path / "best_params.json"
    if not params_path.exists():
        raise click.ClickException(f"no parameters file at {params_path}")
    payload = json.loads(params_path.read_text())
    params = np.array(payload["phases"], dtype=float)

    rows = optimizer.validate_sweep(params, count=count)
    out_path = Path(out_path) if out_path else params_path.parent / "sweep.csv"
    _write_csv(
        out_path,
        ["phi", "f1", "f2", "p_post", "f_optimal", "f_semiclassical"],
        [
            (f"{phi:.12f}", f"{f1:.12f}", f"{f2:.12f}", f"{p:.12f}",
             f"{OPTIMAL_LINE:.12f}", f"{SEMICLASSICAL_LINE:.12f}")
            for phi, f1, f2, p in rows
        ],
    )
    if (out_path.parent / "manifest.json").exists():
        manifest = RunManifest(out_path.parent)
        manifest.add_file(out_path)
        manifest.write()
    worst = min(min(f1, f2) for _, f1, f2, _ in rows)
    click.echo(f"wrote {out_path} ({count} states, min fidelity {worst:.4f})")


@main.command("report")
@click.option("--run", "run_dir", required=True, type=click.Path(path_type=Path))
def cmd_report(run_dir: Path) -> None:
    """Regenerate figure-ready tables from the stored traces (no physics)."""
    run_dir = Path(run_dir)
    traces_dir = run_dir / "traces"
    trace_files = sorted(traces_dir.glob("restart_*.jsonl")) if traces_dir.exists() else []
    if not trace_files:
        raise click.ClickException(f"no traces found under {run_dir}")

    traces = [optimizer.OptimizationTrace.from_jsonl(p) for p in trace_files]
    best = min(traces, key=lambda t: t.best_cost)

    report_dir = run_dir / "report"
    report_dir.mkdir(exist_ok=True)

    cost_rows = []
    fid_rows = []
    best_cost = float("inf")
    best_f1 = best_f2 = float("nan")
    for rec in best.records:
        if rec.cost <= best_cost:
            best_cost = rec.cost
            if rec.extras:
                states = list(rec.extras.values())
                best_f1 = float(np.mean([s["f1"] for s in states]))
                best_f2 = float(np.mean([s["f2"] for s in states]))
        cost_rows.append(
            (rec.evaluation, rec.iteration, f"{rec.cost:.12f}", f"{best_cost:.12f}", int(rec.reboot))
        )
        if rec.extras:
            states = list(rec.extras.values())
            f1 = float(np.mean([s["f1"] for s in states]))
            f2 = float(np.mean([s["f2"] for s in states]))
            fid_rows.append(
                (rec.evaluation, rec.iteration, f"{f1:.12f}", f"{f2:.12f}",
                 f"{best_f1:.12f}", f"{best_f2:.12f}", int(rec.reboot))
            )

    cost_path = report_dir / "cost_series.csv"
    _write_csv(cost_path, ["evaluation", "iteration", "cost", "best_cost", "reboot"], cost_rows)
    written = [cost_path]
    if fid_rows:
        fid_path = report_dir / "fidelity_series.csv"
        _write_csv(
            fid_path,
            ["evaluation", "iteration", "f1_mean", "f2_mean", "f1_at_best", "f2_at_best", "reboot"],
            fid_rows,
        )
        written.append(fid_path)

    if (run_dir / "manifest.json").exists():
        manifest = RunManifest(run_dir)
        for path in written:
            manifest.add_file(path)
        manifest.write()
    for path in written:
        click.echo(f"wrote {path}")


@main.command("oracle")
@click.argument("which", type=click.Choice(["permanent", "design-identity", "semiclassical", "all"]),
                default="all")
def cmd_oracle(which: str) -> None:
    """Run the built-in reference checks and report pass/fail."""
    checks = []
    if which in ("permanent", "all"):
        checks.append(("permanent", _oracle_permanent))
    if which in ("design-identity", "all"):
        checks.append(("design-identity", _oracle_design_identity))
    if which in ("semiclassical", "all"):
        checks.append(("semiclassical", _oracle_semiclassical))

    failed = False
    for name, check in checks:
        ok, detail = check()
        status = "PASS" if ok else "FAIL"
        click.echo(f"[{status}] {name}: {detail}")
        failed |= not ok
    sys.exit(1 if failed else 0)


def _oracle_permanent() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        worst = max(worst, abs(fock.permanent(m) - fock.permanent_naive(m)))
    return worst < 1e-10, f"max |Ryser - naive| = {worst:.3e} (expected < 1e-10)"


def _oracle_design_identity() -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        lhs, rhs = cloner.design_identity_check(rho, quadrature_points=10_000)
        worst = max(worst, abs(lhs - rhs))
    return worst < 1e-6, f"max |integral - 4-point| = {worst:.3e} (expected < 1e-6)"


def _oracle_semiclassical() -> tuple[bool, str]:
    estimate = cloner.semiclassical_monte_carlo(1_000_000, seed=3)
    err = abs(estimate - cloner.semiclassical_baseline())
    return err < 0.002, f"Monte-Carlo {estimate:.4f} vs 0.750 (expected within 0.002)"


if __name__ == "__main__":
    main()
