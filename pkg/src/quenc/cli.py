"""Command-line front end.

Two subcommands: `solve` trains on a single problem file and writes
result.json / trace.csv / solution.txt, `experiment` runs one of the
batch studies from a JSON config and writes cells.csv / summary.csv /
manifest.json. Exit codes: 0 success, 2 bad input or config, 3
postselection made the run infeasible.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (fidelity_histogram, haar_bin_probabilities,
                       classical_expressibility, kl_divergence)
from .ansatz import FAMILIES, AnsatzSpec
from .constraints import constrained_train
from .hybrid import (REFINERS, ansatz_compare_experiment,
                     local_minima_experiment, shot_scaling_experiment)
from .io import (ParseError, parse_constraints_file, parse_graph_file,
                 parse_qubo_file, write_solution_file, write_trace_csv)
from .objective import qubits_for
from .problems import graph_to_qubo
from .records import RunRecord
from .rng import GENERATOR_NAME, derive_seed
from .training import TrainConfig, TrainingAborted, train

__all__ = ["main"]

MAX_QUBITS = 16
EXPERIMENT_NAMES = ("local-minima", "shots", "expressibility", "ansatz-compare")
CELL_COLUMNS = ("n_c", "L", "k", "alpha", "seed", "cost", "relative_cost",
                "iterations", "wall_ms")
DEFAULT_ALPHA_EXACT = 0.02
DEFAULT_ALPHA_SHOTS = 0.01
REFINE_BUDGET_PER_VAR = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quenc",
                                     description="Amplitude-encoded variational QUBO solver")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="train on one problem instance")
    solve.add_argument("--graph", help="MaxCut edge-list file")
    solve.add_argument("--qubo", help="upper-triangular QUBO file")
    solve.add_argument("--constraints", help="exclusivity pairs file (x_i + x_j = 1)")
    solve.add_argument("--layers", type=int, required=True, help="ansatz layer count")
    solve.add_argument("--ansatz", choices=("seq", "sim"), default="seq",
                       help="circuit family (ignored with --warmstart)")
    solve.add_argument("--shots", type=int, default=0, help="samples per evaluation; 0 = exact")
    solve.add_argument("--optimizer", choices=("gd", "adam"), default="adam")
    solve.add_argument("--alpha", type=float, default=None,
                       help=f"learning rate (default {DEFAULT_ALPHA_EXACT} exact, "
                            f"{DEFAULT_ALPHA_SHOTS} with shots)")
    solve.add_argument("--iters", type=int, default=200, help="maximum optimizer steps")
    solve.add_argument("--restarts", type=int, default=1)
    solve.add_argument("--warmstart", metavar="BITS|FILE",
                       help="starting assignment as a 0/1 string or a file holding one")
    solve.add_argument("--refine", choices=tuple(REFINERS), default=None,
                       help="classical refinement applied to the best assignment")
    solve.add_argument("--seed", type=int, required=True)
    solve.add_argument("--out", required=True, help="output directory")

    exp = sub.add_parser("experiment", help="run a batch study from a config file")
    exp.add_argument("name", help="one of: " + ", ".join(EXPERIMENT_NAMES))
    exp.add_argument("--config", required=True, help="JSON config file")
    exp.add_argument("--out", required=True, help="output directory")
    return parser


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _read_warmstart(value: str, n_c: int) -> str:
    text = value
    if set(value) - {"0", "1"}:
        path = Path(value)
        if not path.is_file():
            raise ValueError(f"--warmstart is neither a 0/1 string nor a file: {value!r}")
        text = path.read_text().strip()
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"warm-start assignment must be a 0/1 string, got {text!r}")
    if len(text) != n_c:
        raise ValueError(f"warm-start has {len(text)} bits, problem has {n_c} variables")
    return text


def _cmd_solve(args) -> int:
    if (args.graph is None) == (args.qubo is None):
        return _fail("exactly one of --graph or --qubo is required")
    if args.graph:
        q = graph_to_qubo(parse_graph_file(args.graph))
    else:
        q = parse_qubo_file(args.qubo)

    constraints = []
    if args.constraints:
        constraints = parse_constraints_file(args.constraints, n_c=q.n_c)

    total_qubits = qubits_for(q.n_c) + len(constraints)
    if total_qubits > MAX_QUBITS:
        return _fail(f"problem needs {total_qubits} qubits, limit is {MAX_QUBITS}")

    if args.layers < 1:
        return _fail("--layers must be at least 1")
    if args.restarts < 1:
        return _fail("--restarts must be at least 1")

    warm = None
    if args.warmstart is not None:
        warm = _read_warmstart(args.warmstart, q.n_c)
        if args.layers % 2:
            return _fail("warm starts need an even --layers count")
        family = "warmstart"
    else:
        family = {"seq": "sequential", "sim": "simultaneous"}[args.ansatz]

    alpha = args.alpha
    if alpha is None:
        alpha = DEFAULT_ALPHA_SHOTS if args.shots > 0 else DEFAULT_ALPHA_EXACT
    spec = AnsatzSpec(family=family, n_qubits=qubits_for(q.n_c), layers=args.layers)
    base_cfg = TrainConfig(alpha=alpha, optimizer=args.optimizer,
                           max_iters=args.iters, shots=args.shots, seed=args.seed)

    records: list[tuple[int, RunRecord]] = []
    restart_notes = []
    for r in range(args.restarts):
        seed_r = int(derive_seed(args.seed, r))
        cfg = replace(base_cfg, seed=seed_r)
        try:
            if constraints:
                rec = constrained_train(q, constraints, spec, cfg, initial=warm)
            else:
                rec = train(q, spec, cfg, initial=warm)
        except TrainingAborted as exc:
            restart_notes.append({"restart": r, "seed": seed_r, "status": "aborted",
                                  "survival": exc.survival, "iteration": exc.iteration})
            continue
        restart_notes.append({"restart": r, "seed": seed_r, "status": "ok",
                              "best_cost": rec.best_cost,
                              "iterations": len(rec.trace),
                              "stop_reason": rec.extras.get("stop_reason")})
        records.append((r, rec))

    if not records:
        print("error: every restart aborted under postselection", file=sys.stderr)
        return 3

    def _score(item):
        _, rec = item
        return np.inf if rec.best_cost is None else rec.best_cost

    win_r, best = min(records, key=_score)
    best.extras["restarts"] = restart_notes
    best.extras["winning_restart"] = win_r
    best.seeds["cli_master"] = args.seed

    solution = best.best_bitstring
    if args.refine is not None and best.best_cost is not None:
        refiner = REFINERS[args.refine]
        x0 = np.array([int(b) for b in solution], dtype=np.int8)
        budget = REFINE_BUDGET_PER_VAR * q.n_c
        x_ref, c_ref = refiner(q, x0, budget)
        feasible = all(int(x_ref[c.i]) + int(x_ref[c.j]) == 1 for c in constraints)
        accepted = feasible and c_ref < best.best_cost
        best.extras["refinement"] = {
            "method": args.refine, "budget": budget,
            "cost_before": best.best_cost, "cost_after": float(c_ref),
            "accepted": accepted,
        }
        if accepted:
            best.best_cost = float(c_ref)
            best.best_bitstring = "".join(str(int(b)) for b in x_ref)
            solution = best.best_bitstring

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    best.save(out / "result.json")
    write_trace_csv(out / "trace.csv", best.trace, best.extras.get("best_trace", []))
    write_solution_file(out / "solution.txt", solution)
    return 0


_REQUIRED = object()


def _cfg_value(cfg: dict, key: str, kinds, default=_REQUIRED):
    if key not in cfg:
        if default is _REQUIRED:
            raise ValueError(f"config is missing required key {key!r}")
        return default
    value = cfg[key]
    if not isinstance(value, kinds) or isinstance(value, bool) and kinds is not bool:
        raise ValueError(f"config key {key!r} has the wrong type")
    return value


def _int_list(cfg: dict, key: str, default=_REQUIRED) -> list[int]:
    value = _cfg_value(cfg, key, list, default)
    if value is default and default is not _REQUIRED:
        return value
    if not value or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ValueError(f"config key {key!r} must be a non-empty list of integers")
    return value


def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell_text(v) for v in row])


def _write_cells(path: Path, rows: list[dict]) -> None:
    _write_csv(path, CELL_COLUMNS,
               [[row.get(col) for col in CELL_COLUMNS] for row in rows])


def _write_manifest(path: Path, name: str, config: dict) -> None:
    manifest = {
        "experiment": name,
        "schema_version": 1,
        "package_version": __version__,
        "generator": GENERATOR_NAME,
        "config": config,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _train_config_from(cfg: dict, *, alpha: float, optimizer: str,
                       max_iters: int, shots: int = 0) -> TrainConfig:
    threshold = cfg.get("convergence_threshold", None)
    if threshold is not None and not isinstance(threshold, (int, float)):
        raise ValueError("config key 'convergence_threshold' must be a number or null")
    return TrainConfig(
        alpha=float(_cfg_value(cfg, "alpha", (int, float), alpha)),
        optimizer=_cfg_value(cfg, "optimizer", str, optimizer),
        max_iters=_cfg_value(cfg, "max_iters", int, max_iters),
        shots=_cfg_value(cfg, "shots", int, shots),
        seed=_cfg_value(cfg, "seed", int),
        convergence_window=_cfg_value(cfg, "convergence_window", int, 20),
        convergence_threshold=None if threshold is None else float(threshold),
    )


def _run_local_minima(cfg: dict, out: Path) -> None:
    n_c = _cfg_value(cfg, "n_c", int)
    layers = _int_list(cfg, "layers")
    runs = _cfg_value(cfg, "runs", int)
    family = _cfg_value(cfg, "family", str, "sequential")
    problems = _cfg_value(cfg, "problems", int, None)
    tc = _train_config_from(cfg, alpha=DEFAULT_ALPHA_EXACT, optimizer="gd", max_iters=400)
    res = local_minima_experiment(n_c, layers, runs, tc, family=family, problems=problems)
    _write_cells(out / "cells.csv", res["rows"])
    _write_csv(out / "summary.csv", ("L", "probability", "mean_relative_cost"),
               [[s["L"], s["probability"], s["mean_relative_cost"]] for s in res["summary"]])


def _run_shots(cfg: dict, out: Path) -> None:
    n_c = _cfg_value(cfg, "n_c", int)
    layers = _cfg_value(cfg, "layers", int)
    shot_grid = _int_list(cfg, "shots_grid")
    alpha_grid = _cfg_value(cfg, "alpha_grid", list)
    if not alpha_grid or not all(isinstance(a, (int, float)) for a in alpha_grid):
        raise ValueError("config key 'alpha_grid' must be a non-empty list of numbers")
    problems = _cfg_value(cfg, "problems", int)
    baseline_alpha = float(_cfg_value(cfg, "baseline_alpha", (int, float), DEFAULT_ALPHA_EXACT))
    tc = _train_config_from(cfg, alpha=baseline_alpha, optimizer="gd", max_iters=200)
    res = shot_scaling_experiment(n_c, shot_grid, [float(a) for a in alpha_grid],
                                  problems, layers, tc, baseline_alpha=baseline_alpha)
    _write_cells(out / "cells.csv", res["rows"])
    _write_csv(out / "summary.csv", ("k", "alpha", "mean_cost", "relative_cost"),
               [[c["k"], c["alpha"], c["mean_cost"], c["relative_cost"]]
                for c in res["cells"]])


def _run_expressibility(cfg: dict, out: Path) -> None:
    n_qubits = _cfg_value(cfg, "n_qubits", int)
    if not 2 <= n_qubits <= 12:
        raise ValueError("config key 'n_qubits' must lie in [2, 12]")
    families = _cfg_value(cfg, "families", list, list(FAMILIES[:2]))
    layers = _int_list(cfg, "layers")
    samples = _cfg_value(cfg, "samples", int, 2000)
    bins = _cfg_value(cfg, "bins", int, 75)
    seed = _cfg_value(cfg, "seed", int)
    classical_n_c = _cfg_value(cfg, "classical_n_c", int, None)
    for family in families:
        if family not in FAMILIES:
            raise ValueError(f"unknown ansatz family {family!r}")

    summary_rows = []
    for f_idx, family in enumerate(families):
        for L in layers:
            if family == "warmstart" and L % 2:
                raise ValueError("warmstart layers must be even")
            spec = AnsatzSpec(family=family, n_qubits=n_qubits, layers=L)
            pair_seed = int(derive_seed(seed, f_idx, L))
            hist = fidelity_histogram(spec, samples, bins=bins, seed=pair_seed)
            kl_q = kl_divergence(hist.probabilities(),
                                 haar_bin_probabilities(hist.edges, hist.dim))
            row = {"family": family, "L": L, "n_qubits": n_qubits,
                   "samples": samples, "kl_quantum": kl_q}
            if classical_n_c is not None:
                row["kl_classical"] = classical_expressibility(
                    spec, classical_n_c, samples=samples,
                    seed=int(derive_seed(seed, 7, f_idx, L)))
            summary_rows.append(row)
            _write_csv(out / f"hist_{family}_L{L}.csv",
                       ("bin_left", "bin_right", "count"),
                       [[float(hist.edges[b]), float(hist.edges[b + 1]), int(hist.counts[b])]
                        for b in range(len(hist.counts))])

    header = ["family", "L", "n_qubits", "samples", "kl_quantum"]
    if classical_n_c is not None:
        header.append("kl_classical")
    _write_csv(out / "summary.csv", header,
               [[row.get(h) for h in header] for row in summary_rows])
    (out / "summary.json").write_text(
        json.dumps(summary_rows, indent=2, sort_keys=True) + "\n")


def _run_ansatz_compare(cfg: dict, out: Path) -> None:
    n_c = _cfg_value(cfg, "n_c", int)
    layers = _int_list(cfg, "layers")
    runs = _cfg_value(cfg, "runs", int)
    families = tuple(_cfg_value(cfg, "families", list, ["sequential", "simultaneous"]))
    problems = _cfg_value(cfg, "problems", int, None)
    tc = _train_config_from(cfg, alpha=DEFAULT_ALPHA_EXACT, optimizer="gd", max_iters=400)
    res = ansatz_compare_experiment(n_c, layers, runs, tc, families=families,
                                    problems=problems)
    _write_cells(out / "cells.csv", res["rows"])
    _write_csv(out / "summary.csv",
               ("family", "L", "probability", "mean_relative_cost"),
               [[s["family"], s["L"], s["probability"], s["mean_relative_cost"]]
                for s in res["summary"]])


_EXPERIMENTS = {
    "local-minima": _run_local_minima,
    "shots": _run_shots,
    "expressibility": _run_expressibility,
    "ansatz-compare": _run_ansatz_compare,
}


def _cmd_experiment(args) -> int:
    if args.name not in _EXPERIMENTS:
        return _fail(f"unknown experiment name {args.name!r}; "
                     f"choose from {', '.join(EXPERIMENT_NAMES)}")
    try:
        config = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        return _fail(f"config is not valid JSON: {exc}")
    if not isinstance(config, dict):
        return _fail("config must be a JSON object")
    if config.get("schema_version") != 1:
        return _fail("config must declare schema_version 1")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _EXPERIMENTS[args.name](config, out)
    _write_manifest(out / "manifest.json", args.name, config)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        return _cmd_experiment(args)
    except ParseError as exc:
        return _fail(str(exc))
    except TrainingAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
