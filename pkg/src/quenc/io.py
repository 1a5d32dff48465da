"""Text formats for problems and run outputs.

Problem files are whitespace-separated: blank lines and lines starting
with '#' are skipped, the first data line carries the variable count,
and every following line is one entry. All parse failures raise
ParseError with the offending 1-based line number.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .constraints import Constraint
from .problems import MaxCutGraph, QuboProblem

__all__ = [
    "ParseError",
    "parse_graph",
    "parse_graph_file",
    "parse_qubo",
    "parse_qubo_file",
    "parse_constraints",
    "parse_constraints_file",
    "write_graph_file",
    "write_qubo_file",
    "write_trace_csv",
    "write_solution_file",
]


class ParseError(ValueError):
    """Input file rejected; message carries source and line number."""

    def __init__(self, source: str, line_no: int, message: str):
        self.source = source
        self.line_no = line_no
        super().__init__(f"{source}:{line_no}: {message}")


def _data_lines(text: str):
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield line_no, line.split()


def _parse_int(token: str, source: str, line_no: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(source, line_no, f"{what} must be an integer, got {token!r}") from None


def _parse_float(token: str, source: str, line_no: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(source, line_no, f"{what} must be a number, got {token!r}") from None
    if not math.isfinite(value):
        raise ParseError(source, line_no, f"{what} must be finite, got {token!r}")
    return value


def _parse_header(lines, source: str) -> tuple[int, int]:
    for line_no, tokens in lines:
        if len(tokens) != 1:
            raise ParseError(source, line_no, f"expected a single variable count, got {len(tokens)} tokens")
        n_c = _parse_int(tokens[0], source, line_no, "variable count")
        if n_c < 2:
            raise ParseError(source, line_no, f"variable count must be at least 2, got {n_c}")
        return n_c, line_no
    raise ParseError(source, 0, "empty file: missing variable count")


def parse_graph(text: str, source: str = "<graph>") -> MaxCutGraph:
    """Read an edge-weighted graph: header line n_c, then 'i j w' rows."""
    lines = _data_lines(text)
    n_c, _ = _parse_header(lines, source)
    edges = []
    seen: set[tuple[int, int]] = set()
    for line_no, tokens in lines:
        if len(tokens) != 3:
            raise ParseError(source, line_no, f"expected 'i j w', got {len(tokens)} tokens")
        i = _parse_int(tokens[0], source, line_no, "node index")
        j = _parse_int(tokens[1], source, line_no, "node index")
        w = _parse_float(tokens[2], source, line_no, "edge weight")
        for node in (i, j):
            if not 0 <= node < n_c:
                raise ParseError(source, line_no, f"node index {node} out of range [0, {n_c})")
        if i == j:
            raise ParseError(source, line_no, f"self-loop on node {i}")
        if w < 0:
            raise ParseError(source, line_no, f"edge weight must be non-negative, got {w}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(source, line_no, f"duplicate edge {key}")
        seen.add(key)
        edges.append((i, j, w))
    return MaxCutGraph(n_c=n_c, edges=tuple(edges))


def parse_graph_file(path: str | Path) -> MaxCutGraph:
    path = Path(path)
    return parse_graph(path.read_text(), source=str(path))


def parse_qubo(text: str, source: str = "<qubo>") -> QuboProblem:
    """Read an upper-triangular QUBO: header line n_c, then 'i j q' rows."""
    lines = _data_lines(text)
    n_c, _ = _parse_header(lines, source)
    Q = np.zeros((n_c, n_c))
    seen: set[tuple[int, int]] = set()
    for line_no, tokens in lines:
        if len(tokens) != 3:
            raise ParseError(source, line_no, f"expected 'i j q', got {len(tokens)} tokens")
        i = _parse_int(tokens[0], source, line_no, "variable index")
        j = _parse_int(tokens[1], source, line_no, "variable index")
        value = _parse_float(tokens[2], source, line_no, "coefficient")
        for idx in (i, j):
            if not 0 <= idx < n_c:
                raise ParseError(source, line_no, f"variable index {idx} out of range [0, {n_c})")
        if i > j:
            raise ParseError(source, line_no, f"entry ({i}, {j}) is below the diagonal; use i <= j")
        if (i, j) in seen:
            raise ParseError(source, line_no, f"duplicate entry ({i}, {j})")
        seen.add((i, j))
        Q[i, j] = value
    return QuboProblem(n_c=n_c, Q=Q)


def parse_qubo_file(path: str | Path) -> QuboProblem:
    path = Path(path)
    return parse_qubo(path.read_text(), source=str(path))


def parse_constraints(
    text: str, source: str = "<constraints>", n_c: int | None = None
) -> list[Constraint]:
    """Read exclusivity pairs, one 'i j' per line (x_i + x_j = 1 each)."""
    out: list[Constraint] = []
    seen: set[tuple[int, int]] = set()
    for line_no, tokens in _data_lines(text):
        if len(tokens) != 2:
            raise ParseError(source, line_no, f"expected 'i j', got {len(tokens)} tokens")
        i = _parse_int(tokens[0], source, line_no, "variable index")
        j = _parse_int(tokens[1], source, line_no, "variable index")
        if i == j:
            raise ParseError(source, line_no, f"constraint needs two distinct variables, got {i} twice")
        if i < 0 or j < 0:
            raise ParseError(source, line_no, "variable indices must be non-negative")
        if n_c is not None and (i >= n_c or j >= n_c):
            raise ParseError(source, line_no, f"variable index out of range [0, {n_c})")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(source, line_no, f"duplicate constraint {key}")
        seen.add(key)
        out.append(Constraint(i=i, j=j))
    return out


def parse_constraints_file(path: str | Path, n_c: int | None = None) -> list[Constraint]:
    path = Path(path)
    return parse_constraints(path.read_text(), source=str(path), n_c=n_c)


def write_graph_file(path: str | Path, graph: MaxCutGraph) -> None:
    lines = [f"{graph.n_c}"]
    # repr of a Python float round-trips exactly
    lines += [f"{i} {j} {float(w)!r}" for i, j, w in graph.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def write_qubo_file(path: str | Path, q: QuboProblem) -> None:
    lines = [f"{q.n_c}"]
    for i in range(q.n_c):
        for j in range(i, q.n_c):
            if q.Q[i, j] != 0.0:
                lines.append(f"{i} {j} {float(q.Q[i, j])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_trace_csv(path: str | Path, trace: list[float], best_trace: list) -> None:
    """Per-iteration CSV: surrogate cost and best decoded cost so far."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "cost", "best_cost"])
        for it, cost in enumerate(trace):
            best = best_trace[it] if it < len(best_trace) else None
            writer.writerow([it, repr(float(cost)),
                             "" if best is None else repr(float(best))])


def write_solution_file(path: str | Path, bitstring: str) -> None:
    Path(path).write_text(bitstring + "\n")
