"""Solution extraction from encoded states and the relaxed cost functional.

The encoding puts the n_c problem variables on the amplitudes of
ceil(log2 n_c) register qubits plus one ancilla: Pr(x_i = 1) is the
conditional probability of ancilla = 1 given register = i.  Register indices
at or above n_c (present when n_c is not a power of two) are ignored on
readout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import QuboProblem
from .statevector import StateVector

__all__ = [
    "SolutionDistribution",
    "register_width",
    "qubits_for",
    "extract_exact",
    "extract_shots",
    "quenc_cost",
    "decode",
    "EXACT_MASS_FLOOR",
]

# register mass at or below this counts as unsupported in exact mode
EXACT_MASS_FLOOR = 1e-12


@dataclass(frozen=True)
class SolutionDistribution:
    """Per-variable one-probabilities with support bookkeeping.

    p1[i] = Pr(x_i = 1).  Entries whose register index had (effectively) zero
    mass are set to the neutral 0.5 and marked in ``unsupported``; the trainer
    gives them zero gradient.  ``support`` holds per-index observation counts
    in shot mode, None in exact mode.
    """

    p1: np.ndarray
    unsupported: np.ndarray
    support: np.ndarray | None = None

    def __post_init__(self):
        p1 = np.asarray(self.p1, dtype=float)
        if np.any((p1 < 0) | (p1 > 1)):
            raise ValueError("p1 entries must lie in [0, 1]")
        p1.setflags(write=False)
        object.__setattr__(self, "p1", p1)


def register_width(n_c: int) -> int:
    """Register qubit count: ceil(log2 n_c), at least 1."""
    if n_c < 1:
        raise ValueError("need at least one variable")
    return max(1, int(np.ceil(np.log2(n_c))))


def qubits_for(n_c: int) -> int:
    """Total encoding qubits: register plus one ancilla."""
    return register_width(n_c) + 1


def _conditional(joint1: np.ndarray, mass: np.ndarray, floor, n_c: int,
                 support: np.ndarray | None) -> SolutionDistribution:
    unsupported = mass <= floor
    safe = np.where(unsupported, 1.0, mass)
    p1 = np.where(unsupported, 0.5, np.clip(joint1 / safe, 0.0, 1.0))
    return SolutionDistribution(
        p1=p1[:n_c],
        unsupported=unsupported[:n_c],
        support=None if support is None else support[:n_c],
    )


def extract_exact(state: StateVector, n_c: int) -> SolutionDistribution:
    """Conditional Pr(ancilla=1 | register=i) from exact amplitudes."""
    n_r = register_width(n_c)
    if state.n_qubits != n_r + 1:
        raise ValueError(
            f"state has {state.n_qubits} qubits, encoding needs {n_r + 1}"
        )
    probs = state.probabilities().reshape(2, 1 << n_r)
    mass = probs.sum(axis=0)
    return _conditional(probs[1], mass, EXACT_MASS_FLOOR, n_c, None)


def extract_shots(outcomes: np.ndarray, n_c: int, min_support: int = 1) -> SolutionDistribution:
    """Conditional probabilities estimated from measured counts.

    ``outcomes`` is the counts-per-basis-index array produced by sample().
    Register indices with fewer than ``min_support`` observations are flagged
    unsupported.
    """
    counts = np.asarray(outcomes)
    if counts.sum() < 1:
        raise ValueError("empty outcome set")
    n_r = register_width(n_c)
    if counts.shape != (1 << (n_r + 1),):
        raise ValueError(
            f"outcome array length {counts.shape} does not match {n_r + 1} qubits"
        )
    pair = counts.reshape(2, 1 << n_r).astype(float)
    support = pair.sum(axis=0)
    return _conditional(pair[1], support, min_support - 0.5, n_c,
                        support.astype(np.int64))


def quenc_cost(q: QuboProblem, dist: SolutionDistribution) -> float:
    """Relaxed cost: sum_{i<j} Q_ij p_i p_j + sum_i Q_ii p_i.

    Each stored off-diagonal entry enters once; at vertex distributions this
    equals the classical QUBO cost.
    """
    p = dist.p1
    if p.shape != (q.n_c,):
        raise ValueError(f"distribution length {p.shape} does not match {q.n_c}")
    diag = np.diag(q.Q)
    off = q.Q - np.diag(diag)
    return float(p @ (off @ p) + diag @ p)


def decode(dist: SolutionDistribution):
    """Most-probable bitstring: x_i = 1 iff p1[i] > 0.5 (ties decode to 0)."""
    return (dist.p1 > 0.5).astype(np.int8)
