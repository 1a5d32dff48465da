"""Parameter-shift gradients and the gradient-descent / ADAM training loop.

The gradient of the relaxed cost with respect to one angle needs, for every
register index, the shift-rule derivative of both the joint projector
expectation P(ancilla=1, register=i) and the register mass P(register=i);
the chain rule then combines them through the quotient
d|b_i|^2 = dJ/m - J dm/m^2.  One full-state run yields every projector
expectation at once, so a whole gradient costs 2 * n_params circuit runs,
which this module evaluates as a single batch of parameter rows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .ansatz import AnsatzSpec, build_circuit, prepare_warmstart_state
from .objective import (EXACT_MASS_FLOOR, SolutionDistribution, decode,
                        qubits_for, quenc_cost, register_width)
from .problems import (QuboProblem, estimate_random_cost, normalized_cost,
                       qubo_cost)
from .records import RunRecord, problem_descriptor
from .rng import GENERATOR_NAME, make_rng
from .statevector import Circuit, StateVector, run_circuit, run_circuit_batch

__all__ = [
    "TrainConfig",
    "TrainState",
    "TrainingAborted",
    "shift_derivative",
    "cost_gradient",
    "gd_step",
    "adam_step",
    "train",
]

# shot-mode support floors before an index falls back to the neutral 0.5
MIN_SUPPORT_PLAIN = 1
MIN_SUPPORT_POSTSELECTED = 10


class TrainingAborted(RuntimeError):
    """Training stopped because postselection survival fell below the floor."""

    def __init__(self, survival: float, floor: float, iteration: int):
        self.survival = survival
        self.floor = floor
        self.iteration = iteration
        super().__init__(
            f"postselection survival {survival:.3e} below floor {floor:.3e} "
            f"at iteration {iteration}"
        )


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    shots = 0 means exact expectations.  convergence_threshold = None disables
    the plateau stop (the run then ends at max_iters or at target_cost).
    """

    alpha: float = 0.02
    optimizer: str = "adam"
    max_iters: int = 200
    convergence_window: int = 20
    convergence_threshold: float | None = 1e-4
    shots: int = 0
    seed: int = 0
    target_cost: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    min_survival: float = 1e-9

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("learning rate must be positive")
        if self.optimizer not in ("gd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("moment decay rates must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.shots < 0:
            raise ValueError("shot count must be non-negative")
        if self.convergence_window < 1:
            raise ValueError("convergence window must be positive")


@dataclass(frozen=True)
class TrainState:
    """Optimizer state: parameters, ADAM moments, step counter."""

    theta: np.ndarray
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def fresh(cls, theta: np.ndarray) -> "TrainState":
        theta = np.asarray(theta, dtype=float)
        return cls(theta=theta, m=np.zeros_like(theta), v=np.zeros_like(theta))


def gd_step(state: TrainState, grad: np.ndarray, cfg: TrainConfig) -> TrainState:
    """Plain descent: theta <- theta - alpha * grad."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.theta.shape:
        raise ValueError("gradient size mismatch")
    return replace(state, theta=state.theta - cfg.alpha * grad, t=state.t + 1)


def adam_step(state: TrainState, grad: np.ndarray, cfg: TrainConfig) -> TrainState:
    """ADAM update with bias-corrected first and second moments."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.theta.shape:
        raise ValueError("gradient size mismatch")
    t = state.t + 1
    m = cfg.beta1 * state.m + (1 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1 - cfg.beta2) * grad**2
    m_hat = m / (1 - cfg.beta1**t)
    v_hat = v / (1 - cfg.beta2**t)
    theta = state.theta - cfg.alpha * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return TrainState(theta=theta, m=m, v=v, t=t)


def shift_derivative(circuit: Circuit, theta, slot: int, observable,
                     initial: StateVector | None = None) -> float:
    """Exact derivative of an expectation via two half-pi-shifted evaluations.

    ``observable`` maps a StateVector to a real expectation value.
    """
    theta = np.asarray(theta, dtype=float)
    if not 0 <= slot < circuit.n_params:
        raise ValueError(f"slot {slot} out of range")
    plus = theta.copy()
    plus[slot] += np.pi / 2
    minus = theta.copy()
    minus[slot] -= np.pi / 2
    f_plus = observable(run_circuit(circuit, plus, initial))
    f_minus = observable(run_circuit(circuit, minus, initial))
    return 0.5 * (f_plus - f_minus)


def _shift_rows(theta: np.ndarray) -> np.ndarray:
    """Rows [theta, theta + s e_0, theta - s e_0, theta + s e_1, ...]."""
    p = len(theta)
    rows = np.tile(theta, (2 * p + 1, 1))
    for j in range(p):
        rows[1 + 2 * j, j] += np.pi / 2
        rows[2 + 2 * j, j] -= np.pi / 2
    return rows


def _joint_and_mass(circuit: Circuit, rows: np.ndarray, initial, n_register: int,
                    postselected: bool, shots: int,
                    rng: np.random.Generator | None):
    """Per-row joint (ancilla=1) and total register masses, plus survival.

    In postselected mode the tables are raw (unrenormalized) masses restricted
    to all-constraint-ancillas-zero; the common scale cancels in the quotient
    rule.  Shot mode returns counts in place of masses.
    """
    amps = run_circuit_batch(circuit, rows, initial)
    masses = np.abs(amps) ** 2
    if shots:
        counts = np.empty_like(masses)
        for b in range(masses.shape[0]):
            counts[b] = rng.multinomial(shots, masses[b] / masses[b].sum())
        masses = counts
    total = masses.sum(axis=1)
    if postselected:
        masses = masses[:, : 1 << (n_register + 1)]
    survival = masses.sum(axis=1) / np.maximum(total, 1e-300)
    pair = masses.reshape(masses.shape[0], 2, 1 << n_register)
    return pair[:, 1, :], pair.sum(axis=1), survival


def _distribution(joint: np.ndarray, mass: np.ndarray, floor: float, n_c: int,
                  shots: bool) -> SolutionDistribution:
    flagged = mass <= floor
    safe = np.where(flagged, 1.0, mass)
    p1 = np.where(flagged, 0.5, np.clip(joint / safe, 0.0, 1.0))
    support = mass.astype(np.int64) if shots else None
    return SolutionDistribution(
        p1=p1[:n_c], unsupported=flagged[:n_c],
        support=None if support is None else support[:n_c])


def _mass_floor(shots: int, postselected: bool) -> float:
    if shots == 0:
        return EXACT_MASS_FLOOR
    floor = MIN_SUPPORT_POSTSELECTED if postselected else MIN_SUPPORT_PLAIN
    return floor - 0.5


def _assemble_gradient(q: QuboProblem, joint: np.ndarray, mass: np.ndarray,
                       floor: float, n_c: int, dist: SolutionDistribution) -> np.ndarray:
    """Chain rule: grad_j = sum_i d|b_i|^2/dtheta_j * dC/d|b_i|^2."""
    joint0, mass0 = joint[0], mass[0]
    d_joint = 0.5 * (joint[1::2] - joint[2::2])
    d_mass = 0.5 * (mass[1::2] - mass[2::2])
    flagged = mass0 <= floor
    safe = np.where(flagged, 1.0, mass0)
    d_b2 = (d_joint * safe - joint0 * d_mass) / safe**2
    d_b2[:, flagged] = 0.0
    weights = q.symmetric_offdiag() @ dist.p1 + np.diag(q.Q)
    return d_b2[:, :n_c] @ weights


def cost_gradient(q: QuboProblem, circuit: Circuit, theta, shots: int = 0,
                  seed: int = 0, initial: np.ndarray | None = None,
                  postselected: bool = False) -> np.ndarray:
    """Gradient of the relaxed cost at ``theta``; shots > 0 samples instead of
    using exact expectations."""
    theta = np.asarray(theta, dtype=float)
    n_r = register_width(q.n_c)
    rng = make_rng(seed) if shots else None
    rows = _shift_rows(theta)
    joint, mass, _ = _joint_and_mass(circuit, rows, initial, n_r, postselected,
                                     shots, rng)
    floor = _mass_floor(shots, postselected)
    dist = _distribution(joint[0], mass[0], floor, q.n_c, shots > 0)
    return _assemble_gradient(q, joint, mass, floor, q.n_c, dist)


def _initial_parameters(circuit: Circuit, initial, rng: np.random.Generator):
    """Random angles, or zeros plus the injected state for a warm start."""
    if initial is None:
        return rng.uniform(0.0, 2 * np.pi, circuit.n_params), None
    if isinstance(initial, str):
        if not initial or set(initial) - {"0", "1"}:
            raise ValueError(f"warm-start bitstring must be over 0/1, got {initial!r}")
        initial = [int(c) for c in initial]
    x = np.asarray(initial)
    state = prepare_warmstart_state(x)
    if state.n_qubits > circuit.n_qubits:
        raise ValueError("warm-start state does not fit the circuit")
    if state.n_qubits < circuit.n_qubits:
        # constraint ancillas start in |0>: embed into the wider space
        amps = np.zeros(1 << circuit.n_qubits, dtype=complex)
        amps[: len(state.amplitudes)] = state.amplitudes
    else:
        amps = state.amplitudes
    return np.zeros(circuit.n_params), amps


def _plateaued(trace: list[float], cfg: TrainConfig) -> bool:
    if cfg.convergence_threshold is None:
        return False
    w = cfg.convergence_window
    if len(trace) <= w:
        return False
    prev, now = trace[-w - 1], trace[-1]
    return (prev - now) / max(abs(prev), 1e-12) < cfg.convergence_threshold


def _train_loop(q: QuboProblem, circuit: Circuit, cfg: TrainConfig,
                initial=None, constraint_pairs: tuple = ()) -> dict:
    """Shared loop for plain and postselected training; returns raw results."""
    n_c = q.n_c
    n_r = register_width(n_c)
    postselected = bool(constraint_pairs)
    rng = make_rng(cfg.seed)
    theta0, initial_amps = _initial_parameters(circuit, initial, rng)
    state = TrainState.fresh(theta0)
    step = adam_step if cfg.optimizer == "adam" else gd_step
    floor = _mass_floor(cfg.shots, postselected)

    trace: list[float] = []
    best_trace: list[float | None] = []
    best_cost = np.inf
    best_x = np.zeros(n_c, dtype=np.int8)
    survivals: list[float] = []
    stop_reason = "max_iters"
    t0 = time.perf_counter()

    for it in range(cfg.max_iters + 1):
        need_grad = it < cfg.max_iters
        rows = _shift_rows(state.theta) if need_grad else state.theta[None, :]
        joint, mass, survival = _joint_and_mass(
            circuit, rows, initial_amps, n_r, postselected, cfg.shots, rng)
        if postselected:
            survivals.append(float(survival[0]))
            if survival[0] < cfg.min_survival:
                raise TrainingAborted(float(survival[0]), cfg.min_survival, it)
        dist = _distribution(joint[0], mass[0], floor, n_c, cfg.shots > 0)
        trace.append(quenc_cost(q, dist))

        x = decode(dist)
        feasible = all(int(x[i]) + int(x[j]) == 1 for i, j in constraint_pairs)
        if feasible:
            c_x = qubo_cost(q, x)
            if c_x < best_cost:
                best_cost, best_x = c_x, x
        best_trace.append(float(best_cost) if np.isfinite(best_cost) else None)
        if cfg.target_cost is not None and best_cost <= cfg.target_cost + 1e-9:
            stop_reason = "target"
            break
        if _plateaued(trace, cfg):
            stop_reason = "plateau"
            break
        if not need_grad:
            break
        grad = _assemble_gradient(q, joint, mass, floor, n_c, dist)
        state = step(state, grad, cfg)

    return {
        "trace": trace,
        "best_trace": best_trace,
        "best_cost": float(best_cost) if np.isfinite(best_cost) else None,
        "best_x": best_x,
        "stop_reason": stop_reason,
        "survivals": survivals,
        "wall_ms": (time.perf_counter() - t0) * 1e3,
        "theta": state.theta,
    }


def _finish_record(q: QuboProblem, spec: AnsatzSpec, cfg: TrainConfig,
                   result: dict, constraint_pairs: tuple = ()) -> RunRecord:
    best_cost = result["best_cost"]
    c_norm = None
    if q.known_optimum is not None and best_cost is not None:
        try:
            c_norm = normalized_cost(best_cost, q.known_optimum,
                                     estimate_random_cost(q, seed=0))
        except ValueError:
            c_norm = None
    postsel = None
    if result["survivals"]:
        postsel = {"survival_min": min(result["survivals"]),
                   "survival_mean": float(np.mean(result["survivals"]))}
    return RunRecord(
        problem=problem_descriptor(q),
        ansatz={"family": spec.family, "n_qubits": spec.n_qubits,
                "layers": spec.layers},
        optimizer={"name": cfg.optimizer, "alpha": cfg.alpha,
                   "beta1": cfg.beta1, "beta2": cfg.beta2, "eps": cfg.eps,
                   "max_iters": cfg.max_iters, "shots": cfg.shots,
                   "convergence_window": cfg.convergence_window,
                   "convergence_threshold": cfg.convergence_threshold,
                   "target_cost": cfg.target_cost},
        seeds={"master": cfg.seed, "generator": GENERATOR_NAME},
        trace=[float(c) for c in result["trace"]],
        best_bitstring="" if best_cost is None else
        "".join(str(int(b)) for b in result["best_x"]),
        best_cost=best_cost,
        c_norm=c_norm,
        constraints=[[int(i), int(j)] for i, j in constraint_pairs],
        postselection=postsel,
        extras={"stop_reason": result["stop_reason"],
                "best_trace": result["best_trace"],
                "final_theta": [float(t) for t in result["theta"]]},
        wall_ms=result["wall_ms"],
    )


def train(q: QuboProblem, ansatz_spec: AnsatzSpec, cfg: TrainConfig,
          initial=None) -> RunRecord:
    """Train the encoding circuit on a QUBO; returns the full run record.

    ``initial`` is None for random-angle initialization or a bitstring for a
    warm start (requires the warm-start ansatz family, which is the identity
    at zero angles).
    """
    if ansatz_spec.n_qubits != qubits_for(q.n_c):
        raise ValueError(
            f"ansatz has {ansatz_spec.n_qubits} qubits, problem needs "
            f"{qubits_for(q.n_c)}")
    if initial is not None and ansatz_spec.family != "warmstart":
        raise ValueError("warm starts require the warm-start ansatz family")
    circuit = build_circuit(ansatz_spec)
    result = _train_loop(q, circuit, cfg, initial=initial)
    return _finish_record(q, ansatz_spec, cfg, result)
