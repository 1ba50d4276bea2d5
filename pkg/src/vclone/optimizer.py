"""Derivative-free training of the cloning circuit.

Nelder-Mead over the 12-dimensional phase torus, instrumented with a full
per-evaluation trace and a reboot heuristic: when the best cost stagnates
while the simplex has collapsed (a failure mode typical under shot noise),
the simplex is rebuilt around the best point with an enlarged edge.

Parameters are kept unwrapped during the search; the cost is 2*pi-periodic
so wrapping never changes its value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np

from . import cloner
from .cloner import QubitState, RailMap, DEFAULT_RAILS, run_cloner
from .mesh import MeshSpec

TRACE_SCHEMA_VERSION = 1

#: Simplex diameter below which the search is considered converged.
CONVERGENCE_DIAMETER = 1e-8

CostFn = Callable[[np.ndarray], "float | tuple[float, dict]"]


@dataclass(frozen=True)
class NMConfig:
    """Nelder-Mead settings, including the reboot heuristic.

    ``max_iterations`` caps simplex updates, ``max_evaluations`` caps cost
    evaluations (both counts are reported separately in the trace).
    """

    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    initial_edge: float = 0.5
    max_iterations: int = 100_000
    max_evaluations: int = 2500
    stagnation_window: int = 50
    stagnation_tol: float = 1e-3
    collapse_diameter: float = 1e-2
    reboot_scale: float = 4.0
    max_reboots: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.reflection > 0 and self.expansion > 1 and 0 < self.contraction < 1 and 0 < self.shrink < 1):
            raise ValueError("Nelder-Mead coefficients outside admissible ranges")
        if self.initial_edge <= 0 or self.reboot_scale <= 1:
            raise ValueError("initial_edge must be positive and reboot_scale > 1")
        if min(self.max_iterations, self.max_evaluations, self.stagnation_window) < 1 or self.max_reboots < 0:
            raise ValueError("iteration counts must be positive")


@dataclass
class TraceRecord:
    """One cost evaluation: where, what it cost, and the running best."""

    evaluation: int
    iteration: int
    point: list[float]
    cost: float
    best_cost: float
    reboot: bool = False
    extras: dict = field(default_factory=dict)


@dataclass
class OptimizationTrace:
    """Complete record of one optimization run."""

    records: list[TraceRecord] = field(default_factory=list)
    best_point: np.ndarray | None = None
    best_cost: float = math.inf
    n_iterations: int = 0
    n_evaluations: int = 0
    n_reboots: int = 0
    seed: int | None = None
    error: str | None = None

    def best_cost_series(self) -> np.ndarray:
        return np.array([r.best_cost for r in self.records])

    def reboot_evaluations(self) -> list[int]:
        return [r.evaluation for r in self.records if r.reboot]

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            header = {
                "schema_version": TRACE_SCHEMA_VERSION,
                "best_point": None if self.best_point is None else list(self.best_point),
                "best_cost": self.best_cost,
                "n_iterations": self.n_iterations,
                "n_evaluations": self.n_evaluations,
                "n_reboots": self.n_reboots,
                "seed": self.seed,
                "error": self.error,
            }
            fh.write(json.dumps(header) + "\n")
            for rec in self.records:
                fh.write(json.dumps(asdict(rec)) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "OptimizationTrace":
        with open(path) as fh:
            header = json.loads(fh.readline())
            if header.get("schema_version") != TRACE_SCHEMA_VERSION:
                raise ValueError(f"unsupported trace schema in {path}")
            records = [TraceRecord(**json.loads(line)) for line in fh if line.strip()]
        best_point = header["best_point"]
        return cls(
            records=records,
            best_point=None if best_point is None else np.array(best_point),
            best_cost=header["best_cost"],
            n_iterations=header["n_iterations"],
            n_evaluations=header["n_evaluations"],
            n_reboots=header["n_reboots"],
            seed=header.get("seed"),
            error=header.get("error"),
        )


class _NonFiniteCost(Exception):
    def __init__(self, point: np.ndarray, value: float) -> None:
        super().__init__(f"non-finite cost {value} at {point}")
        self.point = point


class _BudgetExhausted(Exception):
    pass


def _simplex_diameter(simplex: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(simplex - simplex[0], axis=1)))


def _initial_simplex(center: np.ndarray, edge: float) -> np.ndarray:
    d = len(center)
    simplex = np.tile(center, (d + 1, 1))
    for k in range(d):
        simplex[k + 1, k] += edge
    return simplex


def nelder_mead(cost: CostFn, init: Sequence[float], cfg: NMConfig) -> OptimizationTrace:
    """Minimize ``cost`` starting from ``init`` and record every evaluation.

    ``cost`` may return a plain float or (float, extras-dict); extras are
    stored on the trace record.  Ties in the simplex ordering break toward
    the lowest vertex index (stable sort), so runs are fully deterministic.
    A non-finite cost aborts the run with a diagnostic on the trace.
    """
    init = np.asarray(init, dtype=float)
    d = len(init)
    trace = OptimizationTrace(seed=cfg.seed)
    pending_reboot = False

    def evaluate(point: np.ndarray) -> float:
        nonlocal pending_reboot
        if trace.n_evaluations >= cfg.max_evaluations:
            raise _BudgetExhausted
        result = cost(point)
        value, extras = result if isinstance(result, tuple) else (float(result), {})
        value = float(value)
        trace.n_evaluations += 1
        if not math.isfinite(value):
            raise _NonFiniteCost(point, value)
        if value < trace.best_cost:
            trace.best_cost = value
            trace.best_point = point.copy()
        trace.records.append(
            TraceRecord(
                evaluation=trace.n_evaluations,
                iteration=trace.n_iterations,
                point=[float(x) for x in point],
                cost=value,
                best_cost=trace.best_cost,
                reboot=pending_reboot,
                extras=extras,
            )
        )
        pending_reboot = False
        return value

    def build_simplex(center: np.ndarray, edge: float) -> tuple[np.ndarray, np.ndarray]:
        simplex = _initial_simplex(center, edge)
        values = np.array([evaluate(p) for p in simplex])
        return simplex, values

    try:
        simplex, values = build_simplex(init, cfg.initial_edge)
        best_history = [trace.best_cost]  # best cost after each iteration
        iters_since_reboot = 0

        while trace.n_iterations < cfg.max_iterations and trace.n_evaluations < cfg.max_evaluations:
            order = np.argsort(values, kind="stable")
            simplex, values = simplex[order], values[order]

            # Reboot heuristic: best cost stagnant over the last K
            # iterations while the simplex has collapsed.
            diameter = _simplex_diameter(simplex)
            if iters_since_reboot >= cfg.stagnation_window:
                window_start = best_history[-cfg.stagnation_window - 1]
                stagnant = window_start - trace.best_cost < cfg.stagnation_tol
                if stagnant and diameter < cfg.collapse_diameter and trace.n_reboots < cfg.max_reboots:
                    trace.n_reboots += 1
                    pending_reboot = True
                    simplex, values = build_simplex(
                        trace.best_point, cfg.reboot_scale * cfg.initial_edge
                    )
                    best_history = [trace.best_cost]
                    iters_since_reboot = 0
                    continue

            if diameter < CONVERGENCE_DIAMETER:
                break

            trace.n_iterations += 1
            iters_since_reboot += 1

            centroid = np.mean(simplex[:-1], axis=0)
            worst = simplex[-1]
            reflected = centroid + cfg.reflection * (centroid - worst)
            f_reflected = evaluate(reflected)

            if f_reflected < values[0]:
                expanded = centroid + cfg.expansion * (reflected - centroid)
                f_expanded = evaluate(expanded)
                if f_expanded < f_reflected:
                    simplex[-1], values[-1] = expanded, f_expanded
                else:
                    simplex[-1], values[-1] = reflected, f_reflected
            elif f_reflected < values[-2]:
                simplex[-1], values[-1] = reflected, f_reflected
            else:
                if f_reflected < values[-1]:
                    contracted = centroid + cfg.contraction * (reflected - centroid)
                else:
                    contracted = centroid + cfg.contraction * (worst - centroid)
                f_contracted = evaluate(contracted)
                if f_contracted < min(f_reflected, values[-1]):
                    simplex[-1], values[-1] = contracted, f_contracted
                else:
                    # Shrink toward the best vertex.
                    for k in range(1, d + 1):
                        simplex[k] = simplex[0] + cfg.shrink * (simplex[k] - simplex[0])
                        values[k] = evaluate(simplex[k])

            best_history.append(trace.best_cost)
    except _BudgetExhausted:
        pass
    except _NonFiniteCost as exc:
        trace.error = str(exc)

    if trace.best_point is None:
        trace.best_point = init.copy()
    return trace


@dataclass(frozen=True)
class Task:
    """A trainable objective: named cost over a phase vector of given size."""

    name: str
    dim: int
    cost: CostFn


def pc_task(
    spec: MeshSpec | None = None,
    rails: RailMap = DEFAULT_RAILS,
    evaluator: Callable[[np.ndarray, QubitState], cloner.CloningOutcome] | None = None,
) -> Task:
    """Equatorial-cloning training task over the four-phase training set.

    ``evaluator`` defaults to the exact noiseless outcome; pass a sampling
    evaluator (see vclone.sampler) to train under shot noise.
    """
    spec = spec or MeshSpec.four_mode_core()

    def evaluate(params: np.ndarray, psi: QubitState) -> cloner.CloningOutcome:
        if evaluator is not None:
            return evaluator(params, psi)
        _, out = run_cloner(params, psi, spec, rails)
        return out

    def cost(params: np.ndarray) -> tuple[float, dict]:
        total = 0.0
        extras = {}
        for phi in cloner.TRAINING_PHASES:
            out = evaluate(params, QubitState.equatorial(phi))
            total += (1 - out.f1) ** 2 + (1 - out.f2) ** 2 + (out.f1 - out.f2) ** 2
            extras[f"phi={phi:.4f}"] = {"f1": out.f1, "f2": out.f2, "p": out.p_post}
        return total, extras

    return Task(name="pc", dim=spec.n_phases, cost=cost)


def sd_task(
    psi_a: QubitState,
    psi_b: QubitState,
    lam: float = 1.0,
    spec: MeshSpec | None = None,
    rails: RailMap = DEFAULT_RAILS,
    evaluator: Callable[[np.ndarray, QubitState], cloner.CloningOutcome] | None = None,
) -> Task:
    """Two-state cloning task with success-probability regularization."""
    if lam < 0:
        raise ValueError("regularization weight must be non-negative")
    spec = spec or MeshSpec.four_mode_core()

    def evaluate(params: np.ndarray, psi: QubitState) -> cloner.CloningOutcome:
        if evaluator is not None:
            return evaluator(params, psi)
        _, out = run_cloner(params, psi, spec, rails)
        return out

    def cost(params: np.ndarray) -> tuple[float, dict]:
        out_a = evaluate(params, psi_a)
        out_b = evaluate(params, psi_b)
        total = (1 - out_a.f1) ** 2 + (1 - out_a.f2) ** 2 + (out_a.f1 - out_a.f2) ** 2
        total += (1 - out_b.f1) ** 2 + (1 - out_b.f2) ** 2 + (out_b.f1 - out_b.f2) ** 2
        total += lam * (
            (1 - out_a.p_post) ** 2
            + (1 - out_b.p_post) ** 2
            + (out_a.p_post - out_b.p_post) ** 2
        )
        extras = {
            "A": {"f1": out_a.f1, "f2": out_a.f2, "p": out_a.p_post},
            "B": {"f1": out_b.f1, "f2": out_b.f2, "p": out_b.p_post},
        }
        return total, extras

    return Task(name="sd", dim=spec.n_phases, cost=cost)


def train(
    task: "Task | Callable[[int], Task]",
    cfg: NMConfig,
    restarts: int,
    seed: int | None = None,
) -> tuple[OptimizationTrace, list[OptimizationTrace]]:
    """Run independent seeded optimizations and keep the lowest-cost trace.

    Restart r uses seed ``seed + r`` (falling back to cfg.seed) for its
    uniform initial point on [0, 2*pi)^dim.  ``task`` may be a factory
    mapping the restart index to a Task, so noisy tasks get independent
    sample streams per restart.  Returns (best trace, all traces); ties go
    to the earliest restart.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    base_seed = cfg.seed if seed is None else seed
    traces = []
    for r in range(restarts):
        run_task = task(r) if callable(task) else task
        run_seed = base_seed + r
        rng = np.random.default_rng(run_seed)
        init = rng.uniform(0.0, 2.0 * math.pi, run_task.dim)
        run_cfg = NMConfig(**{**asdict(cfg), "seed": run_seed})
        traces.append(nelder_mead(run_task.cost, init, run_cfg))
    best = min(traces, key=lambda t: t.best_cost)
    return best, traces


def validate_sweep(
    params: np.ndarray | list[float],
    count: int = 50,
    spec: MeshSpec | None = None,
    rails: RailMap = DEFAULT_RAILS,
    evaluator: Callable[[np.ndarray, QubitState], cloner.CloningOutcome] | None = None,
) -> list[tuple[float, float, float, float]]:
    """Evaluate the circuit on ``count`` evenly spaced equatorial states.

    Returns rows (phi, F1, F2, P_post) for phi = 2*pi*k/count.
    """
    params = np.asarray(params, dtype=float)
    rows = []
    for k in range(count):
        phi = 2.0 * math.pi * k / count
        psi = QubitState.equatorial(phi)
        if evaluator is not None:
            out = evaluator(params, psi)
        else:
            _, out = run_cloner(params, psi, spec, rails)
        rows.append((phi, out.f1, out.f2, out.p_post))
    return rows
