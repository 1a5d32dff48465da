"""Dense state-vector simulator.

Qubit 0 is the least-significant bit of the basis index, so basis state
``|b_{n-1} ... b_1 b_0>`` lives at index ``sum b_q 2^q``.  Gates are applied
in place over the amplitude array (axis reshapes for single-qubit gates,
column swaps for the permutation gates); no gate unitary is ever
materialized.  All kernels accept a batch of states stacked as rows, which is
what makes parameter-shift sweeps cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import make_rng

__all__ = [
    "StateVector",
    "GateDescriptor",
    "Circuit",
    "PostselectionError",
    "apply",
    "run_circuit",
    "run_circuit_batch",
    "sample",
    "sample_with_rng",
    "postselect",
    "projector_expectation",
]

_PARAMETERIZED = {"RY", "RZ"}
_FIXED = {"H", "X", "SWAP", "CNOT", "MCX"}
_INV_SQRT2 = 1.0 / np.sqrt(2.0)

# cached basis-index arrays per qubit count
_IDX_CACHE: dict[int, np.ndarray] = {}


def _basis_indices(n_qubits: int) -> np.ndarray:
    idx = _IDX_CACHE.get(n_qubits)
    if idx is None:
        idx = np.arange(1 << n_qubits)
        idx.setflags(write=False)
        _IDX_CACHE[n_qubits] = idx
    return idx


class PostselectionError(RuntimeError):
    """Raised when a postselected branch has zero probability."""

    def __init__(self, qubit: int, value: int, prob: float):
        self.qubit = qubit
        self.value = value
        self.prob = prob
        super().__init__(
            f"postselecting qubit {qubit} = {value} has probability {prob:.3e}"
        )


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on ``n_qubits`` qubits (little-endian indexing)."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"amplitude array must have length {1 << self.n_qubits}, got {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state norm {norm} deviates from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class GateDescriptor:
    """One gate: kind, target qubits, control qubits, optional parameter slot."""

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    param_slot: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "controls", tuple(self.controls))
        if self.kind in _PARAMETERIZED:
            if self.param_slot is None:
                raise ValueError(f"{self.kind} gate needs a parameter slot")
            if len(self.targets) != 1 or self.controls:
                raise ValueError(f"{self.kind} acts on exactly one target")
        elif self.kind in _FIXED:
            if self.param_slot is not None:
                raise ValueError(f"{self.kind} takes no parameter")
            n_targets = 2 if self.kind == "SWAP" else 1
            if len(self.targets) != n_targets:
                raise ValueError(f"{self.kind} needs {n_targets} target(s)")
            if self.kind == "CNOT" and len(self.controls) != 1:
                raise ValueError("CNOT needs exactly one control")
            if self.kind in ("H", "X", "SWAP") and self.controls:
                raise ValueError(f"{self.kind} takes no controls")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"gate qubits must be distinct, got {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError("negative qubit index")

    def qubits(self) -> tuple[int, ...]:
        return self.targets + self.controls


# gates RY / RZ / CNOT / ... ; slots must be unique because the shift rule
# differentiates one gate per parameter
@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[GateDescriptor, ...]
    n_params: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        seen_slots = set()
        for g in self.gates:
            if any(q >= self.n_qubits for q in g.qubits()):
                raise ValueError(f"gate {g} out of range for {self.n_qubits} qubits")
            if g.param_slot is not None:
                if not (0 <= g.param_slot < self.n_params):
                    raise ValueError(f"param slot {g.param_slot} out of range")
                if g.param_slot in seen_slots:
                    raise ValueError(f"param slot {g.param_slot} used twice")
                seen_slots.add(g.param_slot)

    def slot_gates(self) -> dict[int, GateDescriptor]:
        return {g.param_slot: g for g in self.gates if g.param_slot is not None}


def _apply_gate_batch(amps: np.ndarray, n_qubits: int, gate: GateDescriptor,
                      thetas: np.ndarray | None) -> None:
    """Apply one gate in place to a (batch, 2^n) amplitude array."""
    kind = gate.kind
    if kind in _PARAMETERIZED:
        q = gate.targets[0]
        ang = 0.5 * thetas[:, gate.param_slot]
        view = amps.reshape(amps.shape[0], -1, 2, 1 << q)
        a0 = view[:, :, 0, :]
        a1 = view[:, :, 1, :]
        if kind == "RY":
            c = np.cos(ang)[:, None, None]
            s = np.sin(ang)[:, None, None]
            t0 = c * a0 - s * a1
            view[:, :, 1, :] = s * a0 + c * a1
            view[:, :, 0, :] = t0
        else:  # RZ
            phase = np.exp(1j * ang)[:, None, None]
            a0 *= phase.conj()
            a1 *= phase
        return
    if kind == "H":
        q = gate.targets[0]
        view = amps.reshape(amps.shape[0], -1, 2, 1 << q)
        a0 = view[:, :, 0, :]
        a1 = view[:, :, 1, :]
        t0 = (a0 + a1) * _INV_SQRT2
        view[:, :, 1, :] = (a0 - a1) * _INV_SQRT2
        view[:, :, 0, :] = t0
        return
    # permutation gates: swap the affected basis-index columns
    idx = _basis_indices(n_qubits)
    if kind == "SWAP":
        a, b = gate.targets
        bit_a = (idx >> a) & 1
        bit_b = (idx >> b) & 1
        cols0 = idx[(bit_a == 1) & (bit_b == 0)]
        cols1 = cols0 ^ ((1 << a) | (1 << b))
    else:  # X, CNOT, MCX: flip target where all controls are set
        t = gate.targets[0]
        sel = (idx >> t) & 1 == 0
        for c in gate.controls:
            sel &= (idx >> c) & 1 == 1
        cols0 = idx[sel]
        cols1 = cols0 | (1 << t)
    tmp = amps[:, cols0].copy()
    amps[:, cols0] = amps[:, cols1]
    amps[:, cols1] = tmp


def apply(state: StateVector, gate: GateDescriptor, theta=None) -> StateVector:
    """Apply one gate; ``theta`` is the full parameter vector when needed."""
    if any(q >= state.n_qubits for q in gate.qubits()):
        raise ValueError(f"gate {gate} out of range for {state.n_qubits} qubits")
    thetas = None
    if gate.param_slot is not None:
        if theta is None or gate.param_slot >= len(np.atleast_1d(theta)):
            raise ValueError(f"missing parameter for slot {gate.param_slot}")
        thetas = np.atleast_1d(np.asarray(theta, dtype=float))[None, :]
    amps = state.amplitudes.copy()[None, :]
    _apply_gate_batch(amps, state.n_qubits, gate, thetas)
    return StateVector(state.n_qubits, amps[0])


def run_circuit_batch(circuit: Circuit, thetas: np.ndarray,
                      initial: np.ndarray | None = None) -> np.ndarray:
    """Run the circuit for every parameter row; returns (batch, 2^n) amplitudes.

    ``initial`` may be a single amplitude vector shared by all rows or one row
    per parameter set; default is |0...0>.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[None, :]
    if thetas.shape[1] != circuit.n_params:
        raise ValueError(
            f"theta has {thetas.shape[1]} entries, circuit expects {circuit.n_params}"
        )
    batch = thetas.shape[0]
    dim = 1 << circuit.n_qubits
    if initial is None:
        amps = np.zeros((batch, dim), dtype=complex)
        amps[:, 0] = 1.0
    else:
        initial = np.asarray(initial, dtype=complex)
        if initial.ndim == 1:
            amps = np.broadcast_to(initial, (batch, dim)).copy()
        else:
            if initial.shape != (batch, dim):
                raise ValueError(f"initial batch shape {initial.shape} mismatch")
            amps = initial.copy()
    for gate in circuit.gates:
        _apply_gate_batch(amps, circuit.n_qubits, gate, thetas)
    return amps


def run_circuit(circuit: Circuit, theta=None,
                initial: StateVector | None = None) -> StateVector:
    """Apply all gates in order to ``initial`` (default |0...0>)."""
    theta = np.zeros(circuit.n_params) if theta is None else np.asarray(theta, float)
    init = None if initial is None else initial.amplitudes
    amps = run_circuit_batch(circuit, theta[None, :], init)
    return StateVector(circuit.n_qubits, amps[0])


def sample_with_rng(state: StateVector, k: int, rng: np.random.Generator) -> np.ndarray:
    """k measurement outcomes as counts per basis index (a multiset)."""
    if k < 1:
        raise ValueError("shot count must be at least 1")
    probs = state.probabilities()
    return rng.multinomial(k, probs / probs.sum())


def sample(state: StateVector, k: int, seed: int) -> np.ndarray:
    """Deterministic-per-seed measurement sample; counts per basis index."""
    return sample_with_rng(state, k, make_rng(seed))


def postselect(state: StateVector, qubit: int, value: int) -> tuple[StateVector, float]:
    """Project onto qubit = value and renormalize; returns the success probability."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    if value not in (0, 1):
        raise ValueError("postselected value must be 0 or 1")
    idx = _basis_indices(state.n_qubits)
    keep = ((idx >> qubit) & 1) == value
    amps = state.amplitudes.copy()
    prob = float(np.sum(np.abs(amps[keep]) ** 2))
    if prob < 1e-300:
        raise PostselectionError(qubit, value, prob)
    amps[~keep] = 0.0
    amps /= np.sqrt(prob)
    return StateVector(state.n_qubits, amps), prob


def projector_expectation(state: StateVector, ancilla_value: int, register_index: int,
                          n_register: int | None = None) -> float:
    """Probability mass on (ancilla = value, register = index).

    The register is qubits 0..n_register-1 and the ancilla is qubit
    n_register; any higher qubits are summed over.  Default register width is
    n_qubits - 1.
    """
    n_r = state.n_qubits - 1 if n_register is None else n_register
    if not 0 <= register_index < (1 << n_r):
        raise ValueError(f"register index {register_index} out of range")
    if ancilla_value not in (0, 1):
        raise ValueError("ancilla value must be 0 or 1")
    probs = state.probabilities().reshape(-1, 2, 1 << n_r)
    return float(probs[:, ancilla_value, register_index].sum())
