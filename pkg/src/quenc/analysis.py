"""Exact baselines and ansatz expressibility diagnostics.

Brute-force routines enumerate assignments in chunks so memory stays
bounded; the split variant covers problems up to 32 variables by meeting
two half-enumerations in a matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzSpec, build_circuit
from .objective import register_width
from .problems import QuboProblem
from .rng import make_rng
from .statevector import run_circuit_batch

__all__ = [
    "brute_force_optimum",
    "brute_force_min_cost",
    "FidelityHistogram",
    "fidelity_histogram",
    "quantum_expressibility",
    "classical_expressibility",
    "kl_divergence",
]

BRUTE_FORCE_MAX_VARS = 24
SPLIT_MIN_MAX_VARS = 32
DEFAULT_BINS = 75
KL_SMOOTHING = 1e-9

_CHUNK = 1 << 14


def _bit_columns(indices: np.ndarray, n_bits: int, msb_first: bool) -> np.ndarray:
    shifts = np.arange(n_bits)
    if msb_first:
        shifts = shifts[::-1]
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.float64)


def brute_force_optimum(q: QuboProblem) -> tuple[np.ndarray, float]:
    """Exhaustively minimize x^T Q x.

    Returns (x, cost) for the minimizing assignment; ties resolve to the
    lexicographically smallest bitstring. Limited to 24 variables.
    """
    n = q.n_c
    if n > BRUTE_FORCE_MAX_VARS:
        raise ValueError(f"brute_force_optimum supports up to {BRUTE_FORCE_MAX_VARS} variables, got {n}")
    total = 1 << n
    best_cost = np.inf
    best_code = 0
    # Enumeration treats x_0 as the most significant bit so the visit
    # order is lexicographic in the bitstring; keeping the first strict
    # improvement then realizes the tie-break for free.
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        X = _bit_columns(codes, n, msb_first=True)
        costs = np.einsum("bi,ij,bj->b", X, q.Q, X)
        k = int(np.argmin(costs))
        if costs[k] < best_cost:
            best_cost = float(costs[k])
            best_code = int(codes[k])
    bits = ((best_code >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)
    return bits, best_cost


def brute_force_min_cost(q: QuboProblem) -> float:
    """Exact minimum of x^T Q x without recovering the argmin.

    Splits the variables into two halves, enumerates each half once, and
    joins them through the coupling block with a matrix product. Covers
    up to 32 variables.
    """
    n = q.n_c
    if n > SPLIT_MIN_MAX_VARS:
        raise ValueError(f"brute_force_min_cost supports up to {SPLIT_MIN_MAX_VARS} variables, got {n}")
    if n <= BRUTE_FORCE_MAX_VARS:
        return brute_force_optimum(q)[1]
    lo = (n + 1) // 2
    hi = n - lo
    A = q.Q[:lo, :lo]
    B = q.Q[lo:, lo:]
    W = q.Q[:lo, lo:].T  # coupling: rows index high half, columns low half

    lo_codes = np.arange(1 << lo, dtype=np.int64)
    Xlo = _bit_columns(lo_codes, lo, msb_first=False)
    costs_lo = np.einsum("bi,ij,bj->b", Xlo, A, Xlo)
    cross_lo = W @ Xlo.T  # (hi, 2^lo)

    best = np.inf
    block = 512
    for start in range(0, 1 << hi, block):
        hi_codes = np.arange(start, min(start + block, 1 << hi), dtype=np.int64)
        Xhi = _bit_columns(hi_codes, hi, msb_first=False)
        costs_hi = np.einsum("bi,ij,bj->b", Xhi, B, Xhi)
        totals = Xhi @ cross_lo
        totals += costs_lo[None, :]
        totals += costs_hi[:, None]
        m = float(totals.min())
        if m < best:
            best = m
    return best


@dataclass(frozen=True)
class FidelityHistogram:
    """Binned pairwise state fidelities for one ansatz."""

    counts: np.ndarray
    edges: np.ndarray
    samples: int
    dim: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        edges = np.asarray(self.edges, dtype=np.float64)
        if counts.ndim != 1 or edges.shape != (counts.shape[0] + 1,):
            raise ValueError("edges must have one more entry than counts")
        if int(counts.sum()) != self.samples:
            raise ValueError("histogram counts must sum to the sample count")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "edges", edges)
        self.counts.setflags(write=False)
        self.edges.setflags(write=False)

    def probabilities(self) -> np.ndarray:
        return self.counts / max(self.samples, 1)


def kl_divergence(p: np.ndarray, reference: np.ndarray) -> float:
    """KL(p || reference) in nats with additive 1e-9 smoothing per bin."""
    p = np.asarray(p, dtype=np.float64) + KL_SMOOTHING
    ref = np.asarray(reference, dtype=np.float64) + KL_SMOOTHING
    p = p / p.sum()
    ref = ref / ref.sum()
    return float(np.sum(p * np.log(p / ref)))


def fidelity_histogram(
    spec: AnsatzSpec, samples: int, bins: int = DEFAULT_BINS, seed: int = 0
) -> FidelityHistogram:
    """Histogram of |<a|b>|^2 over random parameter pairs."""
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = make_rng(seed)
    circuit = build_circuit(spec)
    thetas_a = rng.uniform(0.0, 2.0 * np.pi, size=(samples, circuit.n_params))
    thetas_b = rng.uniform(0.0, 2.0 * np.pi, size=(samples, circuit.n_params))
    fid = np.empty(samples, dtype=np.float64)
    step = 2048
    for start in range(0, samples, step):
        states_a = run_circuit_batch(circuit, thetas_a[start : start + step])
        states_b = run_circuit_batch(circuit, thetas_b[start : start + step])
        fid[start : start + states_a.shape[0]] = (
            np.abs(np.einsum("bi,bi->b", states_a.conj(), states_b)) ** 2
        )
    counts, edges = np.histogram(fid, bins=bins, range=(0.0, 1.0))
    return FidelityHistogram(
        counts=counts.astype(np.int64),
        edges=edges,
        samples=samples,
        dim=1 << spec.n_qubits,
    )


def haar_bin_probabilities(edges: np.ndarray, dim: int) -> np.ndarray:
    """Probability a Haar-random pair fidelity lands in each bin.

    The fidelity CDF for dimension N is 1 - (1 - F)^(N - 1), so each bin
    integrates in closed form.
    """
    edges = np.asarray(edges, dtype=np.float64)
    upper = (1.0 - edges) ** (dim - 1)
    return upper[:-1] - upper[1:]


def quantum_expressibility(
    spec: AnsatzSpec, samples: int = 5000, bins: int = DEFAULT_BINS, seed: int = 0
) -> float:
    """KL divergence between sampled fidelities and the Haar baseline.

    Lower values mean the ansatz explores state space more uniformly.
    """
    hist = fidelity_histogram(spec, samples, bins=bins, seed=seed)
    return kl_divergence(hist.probabilities(), haar_bin_probabilities(hist.edges, hist.dim))


def classical_expressibility(
    spec: AnsatzSpec, n_c: int, samples: int = 5000, seed: int = 0
) -> float:
    """KL divergence of decoded bitstrings against the uniform distribution.

    Random parameter draws are pushed through the circuit, each state is
    decoded to a bitstring, and the resulting empirical distribution over
    all 2^n_c assignments is compared with uniform. A circuit that always
    decodes to one assignment scores about log(2^n_c).
    """
    if n_c < 2:
        raise ValueError("need at least two problem variables")
    if n_c > 20:
        raise ValueError("classical expressibility tabulates 2^n_c cells; n_c > 20 unsupported")
    n_r = register_width(n_c)
    if spec.n_qubits != n_r + 1:
        raise ValueError(f"ansatz must act on {n_r + 1} qubits for {n_c} variables")
    rng = make_rng(seed)
    circuit = build_circuit(spec)
    codes = np.empty(samples, dtype=np.int64)
    step = 2048
    weights = 1 << np.arange(n_c, dtype=np.int64)
    for start in range(0, samples, step):
        thetas = rng.uniform(0.0, 2.0 * np.pi, size=(min(step, samples - start), circuit.n_params))
        states = run_circuit_batch(circuit, thetas)
        probs = np.abs(states) ** 2
        pair = probs.reshape(probs.shape[0], 2, 1 << n_r)
        mass = pair.sum(axis=1)
        joint1 = pair[:, 1, :]
        safe = np.maximum(mass, 1e-12)
        p1 = np.where(mass <= 1e-12, 0.5, joint1 / safe)[:, :n_c]
        bits = (p1 > 0.5).astype(np.int64)
        codes[start : start + thetas.shape[0]] = bits @ weights
    counts = np.bincount(codes, minlength=1 << n_c).astype(np.float64)
    uniform = np.full(1 << n_c, 1.0 / (1 << n_c))
    return kl_divergence(counts / samples, uniform)
