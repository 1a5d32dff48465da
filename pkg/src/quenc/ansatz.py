"""Variational circuit builders and warm-start state preparation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objective import register_width
from .statevector import Circuit, GateDescriptor, StateVector

__all__ = [
    "AnsatzSpec",
    "build_sequential",
    "build_simultaneous",
    "build_warmstart",
    "build_circuit",
    "prepare_warmstart_state",
]

FAMILIES = ("sequential", "simultaneous", "warmstart")


@dataclass(frozen=True)
class AnsatzSpec:
    """Which circuit family to build, on how many qubits, with how many layers."""

    family: str
    n_qubits: int
    layers: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown ansatz family {self.family!r}")
        if self.layers < 1:
            raise ValueError("need at least one layer")
        if self.n_qubits < 2:
            raise ValueError("need at least two qubits (register + ancilla)")
        if self.family == "warmstart" and self.layers % 2 != 0:
            raise ValueError("warm-start ansatz needs an even layer count")


def build_sequential(n_qubits: int, layers: int) -> Circuit:
    """Hadamard wall, then per layer one RY per qubit and a CNOT chain.

    Parameter slot for layer l, qubit q is l * n_qubits + q; n_params is
    layers * n_qubits.
    """
    if n_qubits < 2:
        raise ValueError("need at least two qubits")
    gates = [GateDescriptor("H", (q,)) for q in range(n_qubits)]
    for l in range(layers):
        for q in range(n_qubits):
            gates.append(GateDescriptor("RY", (q,), param_slot=l * n_qubits + q))
        for j in range(n_qubits - 1):
            gates.append(GateDescriptor("CNOT", (j + 1,), controls=(j,)))
    return Circuit(n_qubits, tuple(gates), n_params=layers * n_qubits)


def build_simultaneous(n_qubits: int, layers: int) -> Circuit:
    """Alternating RY/RZ rotation layers with brick-pattern CNOTs.

    Odd layers rotate with RY, even with RZ; each layer then applies CNOTs on
    even pairs (0,1),(2,3),... followed by odd pairs (1,2),(3,4),..., so the
    two-qubit depth per layer is constant in n.
    """
    if n_qubits < 2:
        raise ValueError("need at least two qubits")
    gates = []
    for l in range(1, layers + 1):
        kind = "RY" if l % 2 == 1 else "RZ"
        base = (l - 1) * n_qubits
        for q in range(n_qubits):
            gates.append(GateDescriptor(kind, (q,), param_slot=base + q))
        for j in range(0, n_qubits - 1, 2):
            gates.append(GateDescriptor("CNOT", (j + 1,), controls=(j,)))
        for j in range(1, n_qubits - 1, 2):
            gates.append(GateDescriptor("CNOT", (j + 1,), controls=(j,)))
    return Circuit(n_qubits, tuple(gates), n_params=layers * n_qubits)


def build_warmstart(n_qubits: int, layers: int) -> Circuit:
    """No Hadamards; CNOT chains of adjacent layers reversed so that the
    whole circuit is the identity at theta = 0."""
    if n_qubits < 2:
        raise ValueError("need at least two qubits")
    if layers % 2 != 0:
        raise ValueError("warm-start circuit needs an even layer count")
    gates = []
    chain = [GateDescriptor("CNOT", (j + 1,), controls=(j,)) for j in range(n_qubits - 1)]
    for l in range(1, layers + 1):
        base = (l - 1) * n_qubits
        for q in range(n_qubits):
            gates.append(GateDescriptor("RY", (q,), param_slot=base + q))
        gates.extend(chain if l % 2 == 1 else reversed(chain))
    return Circuit(n_qubits, tuple(gates), n_params=layers * n_qubits)


def build_circuit(spec: AnsatzSpec) -> Circuit:
    if spec.family == "sequential":
        return build_sequential(spec.n_qubits, spec.layers)
    if spec.family == "simultaneous":
        return build_simultaneous(spec.n_qubits, spec.layers)
    return build_warmstart(spec.n_qubits, spec.layers)


def prepare_warmstart_state(x) -> StateVector:
    """State with uniform register weight and the ancilla encoding bit x_i.

    Amplitude 1/sqrt(n_c) sits on each basis state |x_i>_a |i>_r for real
    indices i; padding indices get zero amplitude.
    """
    x = np.asarray(x).astype(np.int8)
    if x.ndim != 1 or np.any((x != 0) & (x != 1)):
        raise ValueError("warm-start input must be a flat 0/1 vector")
    n_c = len(x)
    n_r = register_width(n_c)
    amps = np.zeros(1 << (n_r + 1), dtype=complex)
    amps[np.arange(n_c) + (x.astype(np.int64) << n_r)] = 1.0 / np.sqrt(n_c)
    return StateVector(n_r + 1, amps)
