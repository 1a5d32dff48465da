"""Circuit-level x_i + x_j = 1 constraints via feasibility-detecting ancillas.

Each constraint compiles to a block appended after the ansatz: relabel the
pair (i, j) to register indices (0, 1), rotate the feasible plane onto the
computational basis, flip a fresh constraint ancilla on exactly the
unfeasible components, then undo the rotation and relabeling.  Postselecting
every constraint ancilla on 0 projects onto the feasible subspace.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ansatz import AnsatzSpec, build_circuit
from .objective import qubits_for, register_width
from .problems import QuboProblem
from .records import RunRecord
from .statevector import Circuit, GateDescriptor
from .training import TrainConfig, _finish_record, _train_loop

__all__ = [
    "Constraint",
    "ConstrainedCircuit",
    "build_A_block",
    "build_A_inverse",
    "remap_indices",
    "build_constraint_block",
    "build_constrained_circuit",
    "constrained_train",
]


@dataclass(frozen=True)
class Constraint:
    """One equality x_i + x_j = 1 between two distinct variables."""

    i: int
    j: int

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("constraint needs two distinct variables")
        if self.i < 0 or self.j < 0:
            raise ValueError("negative variable index")

    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)


def build_A_block(register_qubit: int, algorithm_ancilla: int) -> tuple[GateDescriptor, ...]:
    """Rotate the feasible/unfeasible plane basis onto computational states.

    Sends the two feasible basis states to (register_qubit = 0, ancilla = 0/1)
    and the two unfeasible ones to register_qubit = 1, up to a sign that
    cancels once the inverse block is applied.
    """
    if register_qubit == algorithm_ancilla:
        raise ValueError("register qubit and ancilla must differ")
    return (
        GateDescriptor("CNOT", (algorithm_ancilla,), controls=(register_qubit,)),
        GateDescriptor("H", (register_qubit,)),
    )


def build_A_inverse(register_qubit: int, algorithm_ancilla: int) -> tuple[GateDescriptor, ...]:
    """Adjoint of the A block (both gates are self-adjoint, reversed order)."""
    return tuple(reversed(build_A_block(register_qubit, algorithm_ancilla)))


def remap_indices(i: int, j: int, n_register_qubits: int):
    """Gate sequence relabeling register indices (i, j) -> (0, 1).

    Scan for the lowest differing bit d and swap it to position 0, clear i
    with X gates, then clear the remaining high bits of j with CNOTs off
    qubit 0.  Every gate is an involution, so the inverse is the reversed
    sequence.  Returns (sequence, inverse_sequence).
    """
    if i == j:
        raise ValueError("indices must differ")
    size = 1 << n_register_qubits
    if not (0 <= i < size and 0 <= j < size):
        raise ValueError(f"indices ({i}, {j}) out of range for {n_register_qubits} qubits")
    gates = []
    d = (i ^ j) & -(i ^ j)  # lowest differing bit, as a power of two
    d = d.bit_length() - 1
    if d != 0:
        gates.append(GateDescriptor("SWAP", (0, d)))
        i = _swap_bits(i, 0, d)
        j = _swap_bits(j, 0, d)
    for b in range(n_register_qubits):
        if (i >> b) & 1:
            gates.append(GateDescriptor("X", (b,)))
            j ^= 1 << b
    # i is now 0 and j has bit 0 set; clear j's remaining bits
    for b in range(1, n_register_qubits):
        if (j >> b) & 1:
            gates.append(GateDescriptor("CNOT", (b,), controls=(0,)))
    return tuple(gates), tuple(reversed(gates))


def _swap_bits(value: int, a: int, b: int) -> int:
    bit_a = (value >> a) & 1
    bit_b = (value >> b) & 1
    if bit_a == bit_b:
        return value
    return value ^ (1 << a) ^ (1 << b)


def build_constraint_block(c: Constraint, n_register: int, algorithm_ancilla: int,
                           constraint_ancilla: int) -> tuple[GateDescriptor, ...]:
    """Full detector for one constraint: flips ``constraint_ancilla`` exactly
    on the unfeasible components of the (i, j) pair subspace."""
    if len({algorithm_ancilla, constraint_ancilla} | set(range(n_register))) != n_register + 2:
        raise ValueError("layout qubits overlap")
    forward, backward = remap_indices(c.i, c.j, n_register)
    gates = list(forward)
    gates.extend(build_A_block(0, algorithm_ancilla))
    # unfeasible components now sit at register q0 = 1 with all higher
    # register bits 0; X-frame the higher bits so one MCX detects that
    frame = [GateDescriptor("X", (b,)) for b in range(1, n_register)]
    gates.extend(frame)
    gates.append(GateDescriptor("MCX", (constraint_ancilla,),
                                controls=tuple(range(n_register))))
    gates.extend(frame)
    gates.extend(build_A_inverse(0, algorithm_ancilla))
    gates.extend(backward)
    return tuple(gates)


@dataclass(frozen=True)
class ConstrainedCircuit:
    """Ansatz plus one detector block and ancilla per constraint."""

    base: Circuit
    constraints: tuple[Constraint, ...]
    n_register: int

    def __post_init__(self):
        if self.base.n_qubits != self.n_register + 1:
            raise ValueError("base circuit must cover register plus one ancilla")
        used: set[int] = set()
        for c in self.constraints:
            if c.i >= (1 << self.n_register) or c.j >= (1 << self.n_register):
                raise ValueError(f"constraint {c} outside the register range")
            if used & {c.i, c.j}:
                raise ValueError("constraints must not share variables")
            used |= {c.i, c.j}

    @property
    def n_qubits(self) -> int:
        return self.n_register + 1 + len(self.constraints)

    @property
    def constraint_ancillas(self) -> tuple[int, ...]:
        first = self.n_register + 1
        return tuple(range(first, first + len(self.constraints)))

    def blocks(self) -> tuple[tuple[GateDescriptor, ...], ...]:
        anc = self.n_register
        return tuple(
            build_constraint_block(c, self.n_register, anc, ca)
            for c, ca in zip(self.constraints, self.constraint_ancillas)
        )

    def full_circuit(self) -> Circuit:
        gates = list(self.base.gates)
        for block in self.blocks():
            gates.extend(block)
        return Circuit(self.n_qubits, tuple(gates), self.base.n_params)


def build_constrained_circuit(base: Circuit, constraints) -> ConstrainedCircuit:
    cs = tuple(c if isinstance(c, Constraint) else Constraint(*c) for c in constraints)
    return ConstrainedCircuit(base=base, constraints=cs,
                              n_register=base.n_qubits - 1)


def constrained_train(q: QuboProblem, constraints, ansatz_spec: AnsatzSpec,
                      cfg: TrainConfig, initial=None) -> RunRecord:
    """Train with every cost/gradient evaluation postselected on all
    constraint ancillas being 0.

    Exact mode projects and works with unrenormalized masses (the scale
    cancels in the conditional probabilities); shot mode discards violating
    shots and applies a per-index support floor of 10.  Raises
    TrainingAborted when survival drops below cfg.min_survival.
    """
    if ansatz_spec.n_qubits != qubits_for(q.n_c):
        raise ValueError(
            f"ansatz has {ansatz_spec.n_qubits} qubits, problem needs "
            f"{qubits_for(q.n_c)}")
    cs = tuple(c if isinstance(c, Constraint) else Constraint(*c) for c in constraints)
    for c in cs:
        if c.i >= q.n_c or c.j >= q.n_c:
            raise ValueError(f"constraint {c} references a missing variable")
    n_r = register_width(q.n_c)
    constrained = build_constrained_circuit(build_circuit(ansatz_spec), cs)
    assert constrained.n_qubits == n_r + 1 + len(cs)
    result = _train_loop(q, constrained.full_circuit(), cfg, initial=initial,
                         constraint_pairs=tuple(c.pair() for c in cs))
    return _finish_record(q, ansatz_spec, cfg, result,
                          constraint_pairs=tuple(c.pair() for c in cs))
