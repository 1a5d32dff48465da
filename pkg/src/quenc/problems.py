"""MaxCut graphs, QUBO matrices, Ising models, and conversions between them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import make_rng

__all__ = [
    "MaxCutGraph",
    "QuboProblem",
    "IsingModel",
    "graph_to_qubo",
    "maxcut_energy",
    "qubo_cost",
    "qubo_cost_many",
    "ising_to_maxcut",
    "normalized_cost",
    "random_complete_graph",
    "star_graph",
    "estimate_random_cost",
]


@dataclass(frozen=True)
class MaxCutGraph:
    """Undirected weighted graph for MaxCut.

    Parameters
    ----------
    n_c : int
        Number of nodes.
    edges : tuple of (i, j, weight)
        One entry per unordered pair, indices in [0, n_c), weight >= 0.
    """

    n_c: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n_c < 1:
            raise ValueError("node count must be positive")
        canon = []
        seen = set()
        for i, j, w in self.edges:
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.n_c and 0 <= j < self.n_c):
                raise ValueError(f"edge ({i},{j}) out of range for {self.n_c} nodes")
            w = float(w)
            if not np.isfinite(w) or w < 0:
                raise ValueError(f"edge ({i},{j}) has invalid weight {w}")
            a, b = (i, j) if i < j else (j, i)
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a},{b})")
            seen.add((a, b))
            canon.append((a, b, w))
        object.__setattr__(self, "edges", tuple(canon))


@dataclass(frozen=True)
class QuboProblem:
    """QUBO instance: minimize x^T Q x over binary x, Q upper-triangular.

    Parameters
    ----------
    n_c : int
        Number of binary variables.
    Q : ndarray of shape (n_c, n_c)
        Cost matrix with Q[i, j] = 0 for i > j.
    known_optimum : float, optional
        Optimal cost when known; used for normalized-cost reporting.
    """

    n_c: int
    Q: np.ndarray
    known_optimum: float | None = None

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.shape != (self.n_c, self.n_c):
            raise ValueError(f"Q must be {self.n_c}x{self.n_c}, got {Q.shape}")
        if not np.isfinite(Q).all():
            raise ValueError("Q has non-finite entries")
        if np.any(np.tril(Q, -1) != 0):
            raise ValueError("Q must be upper-triangular (zeros below the diagonal)")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    def symmetric_offdiag(self) -> np.ndarray:
        """Off-diagonal part symmetrized, diagonal zeroed. Transient helper."""
        return self.Q + self.Q.T - 2.0 * np.diag(np.diag(self.Q))


@dataclass(frozen=True)
class IsingModel:
    """Ising Hamiltonian: sum_i h_i s_i + sum_{pairs} J_ij s_i s_j, spins s_i = +-1.

    J holds one entry per unordered pair (i, j) with i < j.
    """

    n_spins: int
    h: tuple[float, ...]
    J: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.h) != self.n_spins:
            raise ValueError("field vector length must equal spin count")
        for (i, j), v in self.J.items():
            if i == j:
                raise ValueError(f"self-coupling on spin {i}")
            if not (0 <= i < j < self.n_spins):
                raise ValueError(f"coupling ({i},{j}) not stored as i < j in range")
            if not np.isfinite(v):
                raise ValueError(f"coupling ({i},{j}) not finite")

    def energy(self, s) -> float:
        s = np.asarray(s)
        e = float(np.dot(self.h, s))
        for (i, j), v in self.J.items():
            e += v * s[i] * s[j]
        return e


def graph_to_qubo(g: MaxCutGraph) -> QuboProblem:
    """Build the QUBO whose minimum is the maximum cut of ``g``.

    Off-diagonal entries are twice the edge weight; each diagonal entry is
    minus the total weight incident to that node.  Minimizing x^T Q x then
    equals minimizing the (negated) cut value.
    """
    Q = np.zeros((g.n_c, g.n_c))
    for i, j, w in g.edges:
        Q[i, j] += 2.0 * w
        Q[i, i] -= w
        Q[j, j] -= w
    return QuboProblem(n_c=g.n_c, Q=Q)


def maxcut_energy(g: MaxCutGraph, x) -> float:
    """Negated cut value -sum_edges d_ij (x_i - x_j)^2 for bit vector ``x``."""
    x = np.asarray(x)
    if x.shape != (g.n_c,):
        raise ValueError(f"bitstring length {x.shape} does not match {g.n_c} nodes")
    e = 0.0
    for i, j, w in g.edges:
        e -= w * (int(x[i]) - int(x[j])) ** 2
    return e


def qubo_cost(q: QuboProblem, x) -> float:
    """Evaluate x^T Q x for a single bit vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (q.n_c,):
        raise ValueError(f"bitstring length {x.shape} does not match {q.n_c} variables")
    return float(x @ q.Q @ x)


def qubo_cost_many(q: QuboProblem, X: np.ndarray) -> np.ndarray:
    """Evaluate x^T Q x for each row of a (batch, n_c) bit matrix."""
    X = np.asarray(X, dtype=float)
    return np.einsum("bi,ij,bj->b", X, q.Q, X)


def ising_to_maxcut(m: IsingModel) -> tuple[QuboProblem, int]:
    """Lift an Ising model to a QUBO over one extra ancilla spin.

    The field term h_i s_i is replaced by a coupling h_i s_i s_a to a fresh
    ancilla spin; the purely quadratic result maps to binary variables via
    x = (s + 1) / 2, dropping the constant offset.  Each ground state s of the
    input yields exactly the two ground states (s, a=+1) and (-s, a=-1) of the
    output.

    Returns the QUBO over n_spins + 1 variables and the ancilla's index.
    """
    n = m.n_spins
    a = n
    Q = np.zeros((n + 1, n + 1))
    # pair term K s_p s_q becomes 4K x_p x_q - 2K x_p - 2K x_q (+ constant)
    couplings = dict(m.J)
    for i, hv in enumerate(m.h):
        if hv != 0.0:
            couplings[(i, a)] = couplings.get((i, a), 0.0) + hv
    for (p, qq), K in couplings.items():
        Q[p, qq] += 4.0 * K
        Q[p, p] -= 2.0 * K
        Q[qq, qq] -= 2.0 * K
    return QuboProblem(n_c=n + 1, Q=Q), a


def normalized_cost(c: float, c_glob: float, c_rand: float) -> float:
    """Rescale a cost so the global optimum maps to 0 and a random solution to 1."""
    denom = c_rand - c_glob
    if denom == 0:
        raise ValueError("degenerate normalization: c_rand equals c_glob")
    return (c - c_glob) / denom


def random_complete_graph(n_c: int, weight_range=(0.01, 1.0), seed: int = 0) -> MaxCutGraph:
    """Complete graph with i.i.d. uniform edge weights, deterministic per seed."""
    if n_c < 2:
        raise ValueError("need at least 2 nodes")
    lo, hi = weight_range
    if not (0 <= lo <= hi):
        raise ValueError(f"invalid weight range [{lo}, {hi}]")
    rng = make_rng(seed)
    edges = []
    for i in range(n_c):
        for j in range(i + 1, n_c):
            edges.append((i, j, float(rng.uniform(lo, hi))))
    return MaxCutGraph(n_c=n_c, edges=tuple(edges))


def star_graph(n_c: int, weight: float = 1.0) -> MaxCutGraph:
    """Star with node 0 at the center; optimal cut isolates the center."""
    if n_c < 2:
        raise ValueError("need at least 2 nodes")
    return MaxCutGraph(n_c=n_c, edges=tuple((0, j, weight) for j in range(1, n_c)))


def estimate_random_cost(q: QuboProblem, samples: int = 1000, seed: int = 0) -> float:
    """Mean cost of uniform-random bitstrings; the c_rand baseline."""
    rng = make_rng(seed)
    X = rng.integers(0, 2, size=(samples, q.n_c))
    return float(qubo_cost_many(q, X).mean())
