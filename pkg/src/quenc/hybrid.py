"""Classical refinement, staged pipelines, and batch experiments.

A pipeline is a list of stages sharing one master seed. Each restart
derives its own seed stream, stages hand their best assignment to the
next stage, and the best cost never worsens across a stage boundary
because candidates only replace the incumbent on strict improvement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .analysis import brute_force_min_cost
from .ansatz import AnsatzSpec
from .objective import qubits_for
from .parallel import parallel_map
from .problems import QuboProblem, estimate_random_cost, graph_to_qubo, qubo_cost, random_complete_graph
from .records import RunRecord, problem_descriptor
from .rng import derive_seed, make_rng
from .training import TrainConfig, TrainingAborted, train

__all__ = [
    "local_search",
    "REFINERS",
    "QuencStage",
    "LocalSearchStage",
    "PipelineSpec",
    "run_pipeline",
    "global_opt_probability",
    "local_minima_experiment",
    "ansatz_compare_experiment",
    "shot_scaling_experiment",
]

HIT_TOLERANCE = 1e-9


def local_search(q: QuboProblem, x0: np.ndarray, budget: int) -> tuple[np.ndarray, float]:
    """Steepest-descent single-bit-flip refinement.

    Repeatedly flips the bit with the most negative cost change until no
    flip improves or the flip budget runs out. The returned cost is never
    above the starting cost. Flip gains are maintained incrementally, so
    each step costs O(n_c).
    """
    x = np.asarray(x0, dtype=np.int8).copy()
    if x.shape != (q.n_c,):
        raise ValueError(f"expected {q.n_c} bits, got shape {x.shape}")
    if np.any((x != 0) & (x != 1)):
        raise ValueError("bits must be 0 or 1")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    off = q.symmetric_offdiag()
    diag = np.diag(q.Q).copy()
    field = off @ x
    for _ in range(budget):
        delta = (1 - 2 * x) * (diag + field)
        k = int(np.argmin(delta))
        if delta[k] >= 0.0:
            break
        x[k] ^= 1
        field += off[:, k] * (2 * int(x[k]) - 1)
    return x, qubo_cost(q, x)


REFINERS = {"local": local_search}


@dataclass(frozen=True)
class QuencStage:
    """Variational stage: train the given ansatz on the problem.

    A warmstart ansatz picks up the best assignment produced by earlier
    stages; other families start from fresh random parameters.
    """

    ansatz: AnsatzSpec
    config: TrainConfig


@dataclass(frozen=True)
class LocalSearchStage:
    """Refinement stage: bit-flip descent from the current best."""

    max_flips: int

    def __post_init__(self) -> None:
        if self.max_flips < 0:
            raise ValueError("max_flips must be non-negative")


@dataclass(frozen=True)
class PipelineSpec:
    stages: tuple
    restarts: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        stages = tuple(self.stages)
        if not stages:
            raise ValueError("pipeline needs at least one stage")
        for s in stages:
            if not isinstance(s, (QuencStage, LocalSearchStage)):
                raise TypeError(f"unsupported stage type: {type(s).__name__}")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        object.__setattr__(self, "stages", stages)


def _bits_to_string(x: np.ndarray) -> str:
    return "".join(str(int(b)) for b in x)


def run_pipeline(q: QuboProblem, pipeline: PipelineSpec) -> RunRecord:
    """Execute the staged pipeline over all restarts and keep the best run.

    Restart r derives its stage seeds from (seed, r, stage_index), so the
    whole pipeline is reproducible from the master seed alone. A stage
    that aborts is recorded and the pipeline continues with the best
    assignment found so far.
    """
    t0 = time.perf_counter()
    best_x = None
    best_cost = np.inf
    best_restart = -1
    best_trace: list[float] = []
    restart_summaries = []
    for r in range(pipeline.restarts):
        x_cur = None
        cost_cur = np.inf
        trace_r: list[float] = []
        stage_notes = []
        for s_idx, stage in enumerate(pipeline.stages):
            stage_seed = int(derive_seed(pipeline.seed, r, s_idx))
            if isinstance(stage, QuencStage):
                if stage.ansatz.n_qubits != qubits_for(q.n_c):
                    raise ValueError(
                        f"stage {s_idx}: ansatz acts on {stage.ansatz.n_qubits} qubits "
                        f"but the problem needs {qubits_for(q.n_c)}"
                    )
                initial = None
                if stage.ansatz.family == "warmstart":
                    if x_cur is None:
                        raise ValueError(f"stage {s_idx}: warmstart stage has no predecessor assignment")
                    initial = _bits_to_string(x_cur)
                cfg = replace(stage.config, seed=stage_seed)
                try:
                    rec = train(q, stage.ansatz, cfg, initial=initial)
                except TrainingAborted as exc:
                    stage_notes.append(
                        {
                            "stage": s_idx,
                            "kind": "quenc",
                            "status": "aborted",
                            "survival": exc.survival,
                            "iteration": exc.iteration,
                        }
                    )
                    continue
                trace_r.extend(rec.trace)
                note = {
                    "stage": s_idx,
                    "kind": "quenc",
                    "status": "ok",
                    "best_cost": rec.best_cost,
                    "iterations": len(rec.trace),
                    "stop_reason": rec.extras.get("stop_reason"),
                }
                stage_notes.append(note)
                if rec.best_cost is not None and rec.best_cost < cost_cur:
                    cost_cur = rec.best_cost
                    x_cur = np.array([int(b) for b in rec.best_bitstring], dtype=np.int8)
            else:
                if x_cur is None:
                    rng = make_rng(stage_seed)
                    start = rng.integers(0, 2, size=q.n_c).astype(np.int8)
                else:
                    start = x_cur
                x_new, c_new = local_search(q, start, stage.max_flips)
                stage_notes.append(
                    {
                        "stage": s_idx,
                        "kind": "local_search",
                        "status": "ok",
                        "best_cost": c_new,
                        "max_flips": stage.max_flips,
                    }
                )
                if c_new < cost_cur:
                    cost_cur = c_new
                    x_cur = x_new
        restart_summaries.append(
            {
                "restart": r,
                "best_cost": None if x_cur is None else cost_cur,
                "stages": stage_notes,
            }
        )
        if x_cur is not None and cost_cur < best_cost:
            best_cost = cost_cur
            best_x = x_cur
            best_restart = r
            best_trace = trace_r
    wall_ms = (time.perf_counter() - t0) * 1e3

    first_quenc = next((s for s in pipeline.stages if isinstance(s, QuencStage)), None)
    if first_quenc is None:
        ansatz_info = {"family": "none", "layers": 0, "n_qubits": 0, "n_params": 0}
    else:
        a = first_quenc.ansatz
        ansatz_info = {
            "family": a.family,
            "layers": a.layers,
            "n_qubits": a.n_qubits,
            "n_params": a.layers * a.n_qubits,
        }
    return RunRecord(
        problem=problem_descriptor(q),
        ansatz=ansatz_info,
        optimizer={
            "kind": "pipeline",
            "stages": len(pipeline.stages),
            "restarts": pipeline.restarts,
        },
        seeds={"master": pipeline.seed},
        trace=best_trace,
        best_bitstring="" if best_x is None else _bits_to_string(best_x),
        best_cost=None if best_x is None else float(best_cost),
        c_norm=None,
        constraints=[],
        postselection=None,
        extras={
            "restarts": restart_summaries,
            "winning_restart": best_restart,
        },
        wall_ms=wall_ms,
    )


@lru_cache(maxsize=256)
def _problem_cell(n_c: int, problem_seed: int):
    """Problem instance with its exact optimum and random-guess baseline.

    Cached so restarts sharing an instance do not repeat the (expensive at
    32 variables) exact enumeration.
    """
    q = graph_to_qubo(random_complete_graph(n_c, seed=problem_seed))
    return q, brute_force_min_cost(q), estimate_random_cost(q, seed=0)


def _instance_run(args: tuple) -> dict:
    """One (problem, training run) cell; used by the batch experiments."""
    n_c, spec, cfg, problem_seed, run_seed = args
    q, optimum, c_rand = _problem_cell(n_c, problem_seed)
    rec = train(q, spec, replace(cfg, seed=run_seed))
    cost = rec.best_cost
    span = c_rand - optimum
    if cost is None:
        relative = None
        hit = False
    else:
        relative = 0.0 if span <= 1e-12 else (cost - optimum) / span
        hit = cost <= optimum + HIT_TOLERANCE
    return {
        "n_c": n_c,
        "L": spec.layers,
        "k": cfg.shots,
        "alpha": cfg.alpha,
        "seed": run_seed,
        "cost": cost,
        "relative_cost": relative,
        "iterations": len(rec.trace),
        "wall_ms": rec.wall_ms,
        "optimum": optimum,
        "hit": hit,
        "family": spec.family,
    }


def _run_cells(
    n_c: int,
    spec: AnsatzSpec,
    cfg: TrainConfig,
    runs: int,
    problems: int | None,
    tag: int,
) -> list[dict]:
    """Schedule `runs` training runs, optionally restricted to a fixed
    pool of shared problem instances."""
    if runs < 1:
        raise ValueError("runs must be positive")
    jobs = []
    if problems is None:
        for idx in range(runs):
            p_seed = int(derive_seed(cfg.seed, tag, 0, idx))
            r_seed = int(derive_seed(cfg.seed, tag, 1, idx))
            jobs.append((n_c, spec, cfg, p_seed, r_seed))
    else:
        if problems < 1 or runs % problems != 0:
            raise ValueError("runs must be a positive multiple of problems")
        per = runs // problems
        for p_idx in range(problems):
            p_seed = int(derive_seed(cfg.seed, tag, 0, p_idx))
            for rep in range(per):
                r_seed = int(derive_seed(cfg.seed, tag, 1, p_idx, rep))
                jobs.append((n_c, spec, cfg, p_seed, r_seed))
    return parallel_map(_instance_run, jobs)


def global_opt_probability(
    n_c: int,
    ansatz_spec: AnsatzSpec,
    runs: int,
    cfg: TrainConfig,
    problems: int | None = None,
) -> float:
    """Fraction of runs whose best decoded cost hits the exact optimum.

    By default every run draws a fresh random complete graph; passing
    `problems` shares `runs / problems` restarts across that many fixed
    instances (useful when exact optima are expensive to enumerate).
    """
    rows = _run_cells(n_c, ansatz_spec, cfg, runs, problems, tag=11)
    return sum(1 for r in rows if r["hit"]) / len(rows)


def local_minima_experiment(
    n_c: int,
    layer_grid: list[int],
    runs: int,
    cfg: TrainConfig,
    family: str = "sequential",
    problems: int | None = None,
) -> dict:
    """Success probability and per-run stats across circuit depths."""
    n_q = qubits_for(n_c)
    rows: list[dict] = []
    summary = []
    for L in layer_grid:
        spec = AnsatzSpec(family=family, n_qubits=n_q, layers=L)
        cell = _run_cells(n_c, spec, cfg, runs, problems, tag=11)
        rows.extend(cell)
        summary.append(
            {
                "L": L,
                "probability": sum(1 for r in cell if r["hit"]) / len(cell),
                "mean_relative_cost": float(
                    np.mean([r["relative_cost"] for r in cell if r["relative_cost"] is not None])
                ),
            }
        )
    return {"n_c": n_c, "rows": rows, "summary": summary}


def ansatz_compare_experiment(
    n_c: int,
    layer_grid: list[int],
    runs: int,
    cfg: TrainConfig,
    families: tuple[str, ...] = ("sequential", "simultaneous"),
    problems: int | None = None,
) -> dict:
    """Head-to-head success probability of ansatz families across depth."""
    n_q = qubits_for(n_c)
    rows: list[dict] = []
    summary = []
    for family in families:
        for L in layer_grid:
            spec = AnsatzSpec(family=family, n_qubits=n_q, layers=L)
            cell = _run_cells(n_c, spec, cfg, runs, problems, tag=13)
            rows.extend(cell)
            summary.append(
                {
                    "family": family,
                    "L": L,
                    "probability": sum(1 for r in cell if r["hit"]) / len(cell),
                    "mean_relative_cost": float(
                        np.mean([r["relative_cost"] for r in cell if r["relative_cost"] is not None])
                    ),
                }
            )
    return {"n_c": n_c, "rows": rows, "summary": summary}


def shot_scaling_experiment(
    n_c: int,
    shot_grid: list[int],
    alpha_grid: list[float],
    problems: int,
    layers: int,
    cfg: TrainConfig,
    baseline_alpha: float = 0.02,
) -> dict:
    """Relative cost of finite-shot training against an exact baseline.

    Every cell trains on the same pool of random graphs. The baseline is
    exact simulation at `baseline_alpha`; a grid cell with k = 0 (exact)
    and that same learning rate reuses the baseline runs verbatim, so its
    relative cost is zero by construction. Cell scores are
    (mean cost - baseline mean) / (random-guess mean - baseline mean),
    with means taken over the problem pool first.
    """
    if problems < 1:
        raise ValueError("problems must be positive")
    n_q = qubits_for(n_c)
    spec = AnsatzSpec(family="sequential", n_qubits=n_q, layers=layers)

    pool = []
    for p_idx in range(problems):
        p_seed = int(derive_seed(cfg.seed, 21, p_idx))
        q = graph_to_qubo(random_complete_graph(n_c, seed=p_seed))
        pool.append((p_idx, q))
    c_rand = float(np.mean([estimate_random_cost(q, seed=0) for _, q in pool]))

    def _cell(shots: int, alpha: float, tag: int) -> list[dict]:
        rows = []
        for p_idx, q in pool:
            r_seed = int(derive_seed(cfg.seed, tag, p_idx))
            rec = train(q, spec, replace(cfg, shots=shots, alpha=alpha, seed=r_seed))
            rows.append(
                {
                    "n_c": n_c,
                    "L": layers,
                    "k": shots,
                    "alpha": alpha,
                    "seed": r_seed,
                    "cost": rec.best_cost,
                    "iterations": len(rec.trace),
                    "wall_ms": rec.wall_ms,
                }
            )
        return rows

    baseline_rows = _cell(0, baseline_alpha, tag=22)
    c_inf = float(np.mean([r["cost"] for r in baseline_rows]))
    span = c_rand - c_inf

    all_rows: list[dict] = []
    cells = []
    for k_idx, k in enumerate(shot_grid):
        for a_idx, alpha in enumerate(alpha_grid):
            if k == 0 and alpha == baseline_alpha:
                rows = [dict(r) for r in baseline_rows]
            else:
                rows = _cell(k, alpha, tag=100 + k_idx * len(alpha_grid) + a_idx)
            mean_cost = float(np.mean([r["cost"] for r in rows]))
            relative = 0.0 if abs(span) <= 1e-12 else (mean_cost - c_inf) / span
            for r in rows:
                r["relative_cost"] = (
                    0.0 if abs(span) <= 1e-12 else (r["cost"] - c_inf) / span
                )
            all_rows.extend(rows)
            cells.append(
                {
                    "k": k,
                    "alpha": alpha,
                    "mean_cost": mean_cost,
                    "relative_cost": relative,
                }
            )
    return {
        "n_c": n_c,
        "layers": layers,
        "baseline_alpha": baseline_alpha,
        "c_infinity": c_inf,
        "c_random": c_rand,
        "cells": cells,
        "rows": all_rows,
    }
