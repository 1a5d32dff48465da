"""End-to-end behavior gates with pinned seeds, tolerances, and wall budgets.

Every test here runs the full stack the way a user would and checks an
externally meaningful outcome: agreement with exhaustive classical search,
gradient exactness against finite differences, optimization success rates,
constraint feasibility of sampled solutions, depth/expressibility trends,
pipeline quality, and byte-level reproducibility. Budgets are asserted so
regressions in speed fail loudly too.
"""

import itertools
import json
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from quenc.analysis import brute_force_optimum, quantum_expressibility
from quenc.ansatz import AnsatzSpec, build_circuit
from quenc.cli import main
from quenc.constraints import Constraint, build_constrained_circuit, constrained_train
from quenc.hybrid import (LocalSearchStage, PipelineSpec, QuencStage,
                          global_opt_probability, local_minima_experiment,
                          run_pipeline, shot_scaling_experiment)
from quenc.objective import (SolutionDistribution, decode, extract_exact,
                             extract_shots,
                             quenc_cost, qubits_for)
from quenc.problems import (IsingModel, QuboProblem, graph_to_qubo,
                            ising_to_maxcut, qubo_cost_many,
                            random_complete_graph, star_graph)
from quenc.rng import derive_seed
from quenc.statevector import StateVector, run_circuit, sample
from quenc.training import TrainConfig, train

from conftest import random_qubo


def all_bitstrings(n: int) -> np.ndarray:
    codes = np.arange(1 << n)
    return ((codes[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int8)


class TestVertexCostsMatchExhaustiveSearch:
    """The relaxed cost, scanned over all vertex distributions, finds the
    same minimum as direct enumeration."""

    def test_one_hundred_random_problems(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(101)
        for _ in range(100):
            n_c = int(rng.integers(2, 13))
            q = random_qubo(n_c, rng)
            _, exact = brute_force_optimum(q)
            vertices = all_bitstrings(n_c)
            best = min(
                quenc_cost(q, SolutionDistribution(
                    p1=v.astype(float),
                    unsupported=np.zeros(n_c, dtype=bool)))
                for v in vertices
            )
            assert abs(best - exact) < 1e-9
        assert time.perf_counter() - t0 < 60.0


class TestGradientsMatchFiniteDifferences:
    def test_fifty_random_problem_parameter_pairs(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(202)
        families = ("sequential", "simultaneous")
        for trial in range(50):
            n_c = int(rng.integers(2, 17))
            raw = random_qubo(n_c, rng)
            # the gradient is linear in the cost matrix, so scale carries no
            # information; normalizing costs to O(1) keeps the central
            # finite-difference oracle's truncation error far below the
            # comparison tolerance
            q = QuboProblem(n_c=n_c, Q=raw.Q / n_c**2)
            circuit = build_circuit(AnsatzSpec(
                families[trial % 2], n_qubits=qubits_for(n_c),
                layers=int(rng.integers(1, 5))))
            theta = rng.uniform(0, 2 * np.pi, circuit.n_params)
            grad = np.asarray(_cost_gradient(q, circuit, theta))
            h = 1e-5
            for slot in range(circuit.n_params):
                up = theta.copy()
                up[slot] += h
                dn = theta.copy()
                dn[slot] -= h
                fd = (_relaxed(q, circuit, up) - _relaxed(q, circuit, dn)) / (2 * h)
                assert abs(grad[slot] - fd) < 1e-6
        assert time.perf_counter() - t0 < 120.0


def _relaxed(q, circuit, theta):
    from quenc.objective import extract_exact
    return quenc_cost(q, extract_exact(run_circuit(circuit, theta), q.n_c))


def _cost_gradient(q, circuit, theta):
    from quenc.training import cost_gradient
    return cost_gradient(q, circuit, theta)


class TestLargeStarRestartsFindOptimum:
    """On the 64-node star (optimum: isolate the hub, cost -63), at least
    half of 20 seeded restarts must decode the optimum within 500 steps."""

    def test_success_rate(self):
        t0 = time.perf_counter()
        q = graph_to_qubo(star_graph(64))
        spec = AnsatzSpec("sequential", 7, 4)
        hits = 0
        for r in range(20):
            cfg = TrainConfig(alpha=0.1, optimizer="adam", max_iters=500,
                              convergence_threshold=None, target_cost=-63.0,
                              seed=int(derive_seed(42, r)))
            rec = train(q, spec, cfg)
            if rec.best_cost is not None and rec.best_cost <= -63.0 + 1e-9:
                hits += 1
        assert hits >= 10
        assert time.perf_counter() - t0 < 300.0


class TestWorkedFiveNodeGraph:
    """The 5-node demonstration instance: unconstrained optimum -5;
    forcing x0 + x2 = 1 lowers the best reachable cut to -4 and every
    returned solution respects the constraint."""

    def test_unconstrained_and_constrained_rates(self, five_node_qubo):
        t0 = time.perf_counter()
        spec = AnsatzSpec("sequential", 4, 4)
        free_hits = 0
        for r in range(10):
            cfg = TrainConfig(alpha=0.1, optimizer="adam", max_iters=200,
                              convergence_threshold=None,
                              seed=int(derive_seed(7, r)))
            rec = train(five_node_qubo, spec, cfg)
            if rec.best_cost is not None and rec.best_cost <= -5.0 + 1e-9:
                free_hits += 1
        assert free_hits >= 8

        bound_hits = 0
        for r in range(10):
            cfg = TrainConfig(alpha=0.1, optimizer="adam", max_iters=200,
                              convergence_threshold=None,
                              seed=int(derive_seed(7, r)))
            rec = constrained_train(five_node_qubo, [(0, 2)], spec, cfg)
            bits = [int(b) for b in rec.best_bitstring]
            # feasibility must hold for every restart's answer, hit or not
            assert bits[0] + bits[2] == 1
            if rec.best_cost <= -4.0 + 1e-9:
                bound_hits += 1
        assert bound_hits >= 8
        assert time.perf_counter() - t0 < 120.0


class TestPostselectedSamplesNeverViolate:
    """Measured, postselected solutions from trained constrained circuits
    satisfy their constraint in every decoded batch; disjoint detector
    blocks commute to numerical precision."""

    def test_fifty_problems_zero_violations(self):
        # Two claims per trained instance. First, the exact postselected
        # conditionals of the constrained pair must sum to one, always.
        # Second, whenever the finite-shot readout can resolve the pair at
        # all, the decoded bits must split it one-and-zero, with no
        # violations ever. Resolution is a property of the state, not of the
        # sample outcome: a pair whose register mass training drained below
        # the support threshold, or whose conditional sits within 0.1 of the
        # decode boundary, gives the sampler nothing to resolve even though
        # the state itself is exactly feasible. Those instances still face
        # the first claim; a floor on the resolved count keeps the second
        # claim from going vacuous.
        t0 = time.perf_counter()
        rng = np.random.default_rng(505)
        total_samples = 0
        resolved = 0
        spec = AnsatzSpec("sequential", 5, 3)
        low = 1 << 5  # register plus algorithm ancilla
        for p in range(50):
            g = random_complete_graph(16, seed=int(derive_seed(505, 0, p)))
            q = graph_to_qubo(g)
            i = int(rng.integers(0, 16))
            j = int(rng.integers(0, 16))
            while j == i:
                j = int(rng.integers(0, 16))
            cfg = TrainConfig(alpha=0.1, optimizer="adam", max_iters=25,
                              convergence_threshold=None,
                              seed=int(derive_seed(505, 1, p)))
            rec = constrained_train(q, [(i, j)], spec, cfg)
            theta = np.array(rec.extras["final_theta"])
            full = build_constrained_circuit(
                build_circuit(spec), [(i, j)]).full_circuit()
            state = run_circuit(full, theta)
            block = state.amplitudes[:low]
            exact = extract_exact(
                StateVector(5, block / np.linalg.norm(block)), 16)
            assert abs(exact.p1[i] + exact.p1[j] - 1.0) < 1e-9
            margin = min(abs(exact.p1[i] - 0.5), abs(exact.p1[j] - 0.5))
            kept = np.zeros(low, dtype=np.int64)
            for b in range(4):
                counts = sample(state, 512, seed=int(derive_seed(505, 2, p, b)))
                assert counts[:low].sum() > 0
                kept += counts[:low]
            dist = extract_shots(kept, 16, min_support=10)
            if margin >= 0.1 and not (dist.unsupported[i]
                                      or dist.unsupported[j]):
                resolved += 1
                total_samples += int(kept.sum())
                x = decode(dist)
                assert int(x[i]) + int(x[j]) == 1
        assert resolved >= 35
        assert total_samples >= 10_000
        assert time.perf_counter() - t0 < 180.0

    def test_disjoint_detectors_commute(self):
        from quenc.constraints import build_constraint_block
        from quenc.statevector import Circuit, run_circuit_batch
        rng = np.random.default_rng(506)
        n_r = 4  # 16 solution variables
        for pairs in [((0, 9), (3, 12)), ((0, 9), (3, 12), (5, 14))]:
            m = len(pairs)
            n_q = n_r + 1 + m
            low = rng.normal(size=1 << (n_r + 1)) + 1j * rng.normal(size=1 << (n_r + 1))
            low = low / np.linalg.norm(low)
            state = np.zeros(1 << n_q, dtype=complex)
            state[: 1 << (n_r + 1)] = low
            outs = []
            for order in itertools.permutations(range(m)):
                gates = []
                for which in order:
                    gates.extend(build_constraint_block(
                        Constraint(*pairs[which]), n_r, n_r, n_r + 1 + which))
                circuit = Circuit(n_q, tuple(gates), 0)
                outs.append(run_circuit_batch(
                    circuit, np.zeros((1, 0)), state[None, :])[0])
            for other in outs[1:]:
                assert np.linalg.norm(other - outs[0]) < 1e-9


class TestDepthScanProbability:
    """Success probability grows with circuit depth until it saturates, and
    the pinned 32-variable working point lands in its expected band."""

    def test_sixteen_variable_scan_then_thirty_two_variable_point(self):
        t0 = time.perf_counter()
        cfg16 = TrainConfig(alpha=0.02, optimizer="gd", max_iters=300,
                            convergence_threshold=1e-4, convergence_window=20,
                            seed=61)
        out = local_minima_experiment(16, [2, 4, 6, 8, 10, 12], runs=200,
                                      cfg=cfg16, problems=20)
        probs = [s["probability"] for s in out["summary"]]
        peak = int(np.argmax(probs))
        assert peak >= 2, f"no growth segment in {probs}"
        segment = probs[: peak + 1]
        rho, _ = spearmanr(range(len(segment)), segment)
        assert rho > 0.7, f"depth trend too weak: {probs} (rho={rho})"

        spec = AnsatzSpec("sequential", 6, 11)
        cfg32 = TrainConfig(alpha=0.07, optimizer="adam", max_iters=300,
                            convergence_threshold=1e-4, convergence_window=20,
                            seed=62)
        p = global_opt_probability(32, spec, 1000, cfg32, problems=25)
        assert 0.03 <= p <= 0.15, f"32-variable success rate {p} out of band"
        assert time.perf_counter() - t0 < 1800.0


class TestFiniteShotTrainingTracksExact:
    """Training from 64-sample estimates with a halved learning rate stays
    within 10% of the exact-simulation baseline on the relative-cost scale."""

    def test_mean_relative_cost(self):
        t0 = time.perf_counter()
        cfg = TrainConfig(alpha=0.02, optimizer="gd", max_iters=400,
                          convergence_threshold=None, seed=71)
        out = shot_scaling_experiment(16, [64], [0.01], problems=50, layers=5,
                                      cfg=cfg, baseline_alpha=0.02)
        (cell,) = out["cells"]
        assert cell["k"] == 64 and cell["alpha"] == 0.01
        assert cell["relative_cost"] <= 0.1, f"relative cost {cell['relative_cost']}"
        assert time.perf_counter() - t0 < 1200.0


class TestFieldLiftGroundStates:
    """Lifting linear field terms onto an ancilla spin preserves the ground
    set exactly: each original ground state appears as its two mirrored
    lifted configurations, and nothing else."""

    def test_one_hundred_random_models(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(808)
        for _ in range(100):
            n = int(rng.integers(2, 11))
            h = tuple(float(v) for v in rng.uniform(-1, 1, n))
            J = {(i, j): float(rng.uniform(-1, 1))
                 for i in range(n) for j in range(i + 1, n)
                 if rng.random() < 0.7}
            model = IsingModel(n_spins=n, h=h, J=J)
            q, ancilla = ising_to_maxcut(model)
            assert q.n_c == n + 1

            spins = 1 - 2 * all_bitstrings(n).astype(float)  # rows in {+1,-1}
            Jm = np.zeros((n, n))
            for (i, j), v in J.items():
                Jm[i, j] = v
            energies = spins @ np.asarray(h) + np.einsum(
                "bi,ij,bj->b", spins, Jm, spins)
            e_min = energies.min()
            ground = spins[energies <= e_min + 1e-9]

            expected = set()
            for s in ground:
                x_pos = tuple(int(v) for v in ((s + 1) // 2).astype(int)) + (1,)
                x_neg = tuple(int(v) for v in ((1 - s) // 2).astype(int)) + (0,)
                expected.add(x_pos)
                expected.add(x_neg)

            X = all_bitstrings(n + 1)
            costs = qubo_cost_many(q, X)
            c_min = costs.min()
            found = {tuple(int(b) for b in row)
                     for row in X[costs <= c_min + 1e-9]}
            assert found == expected
        assert time.perf_counter() - t0 < 60.0


class TestLayeredFamiliesExpressibility:
    """The all-qubits-per-layer family explores state space more uniformly
    than the single-chain family at matched depth."""

    @pytest.mark.parametrize("n_qubits", [5, 9])
    def test_family_ordering_across_depths(self, n_qubits):
        t0 = time.perf_counter()
        wins = 0
        depths = (1, 2, 3, 4, 5)
        for L in depths:
            kl = {}
            for f_idx, family in enumerate(("sequential", "simultaneous")):
                spec = AnsatzSpec(family, n_qubits, L)
                kl[family] = quantum_expressibility(
                    spec, samples=10_000, bins=75,
                    seed=int(derive_seed(909, f_idx, n_qubits, L)))
            if kl["simultaneous"] < kl["sequential"]:
                wins += 1
        assert wins >= 4, f"simultaneous won only {wins}/5 depths at {n_qubits} qubits"
        assert time.perf_counter() - t0 < 600.0


class TestPipelineBeatsPlainLocalSearch:
    """Seeding local search from a trained circuit must match or beat local
    search from a random assignment on most 256-node instances, at equal
    flip budgets."""

    def test_thirty_seeded_graphs(self):
        t0 = time.perf_counter()
        # a quarter-sweep of the variables: steepest descent fully converges
        # from any 256-bit start within ~128 flips, at which point both arms
        # just report independent local optima and the comparison reads basin
        # luck; the budget must leave refinement genuinely scarce for the
        # warm start to be the thing under test
        budget = 64
        stage = QuencStage(
            ansatz=AnsatzSpec("sequential", 9, 6),
            config=TrainConfig(alpha=0.05, optimizer="adam", max_iters=150,
                               convergence_threshold=None),
        )
        wins = 0
        for g in range(30):
            q = graph_to_qubo(random_complete_graph(256, seed=int(derive_seed(1010, g))))
            seed = int(derive_seed(1010, 7, g))
            warm = run_pipeline(q, PipelineSpec(
                stages=(stage, LocalSearchStage(budget)), restarts=1, seed=seed))
            cold = run_pipeline(q, PipelineSpec(
                stages=(LocalSearchStage(budget),), restarts=1, seed=seed))
            if warm.best_cost <= cold.best_cost + 1e-12:
                wins += 1
        assert wins >= 18, f"warm start won only {wins}/30"
        assert time.perf_counter() - t0 < 1800.0


class TestReproducibleArtifacts:
    """One master seed pins every output byte, time stamps aside."""

    def test_solver_outputs_identical(self, tmp_path):
        graph = tmp_path / "g.txt"
        graph.write_text("5\n0 1 1.0\n1 2 1.0\n1 3 1.0\n2 4 1.0\n3 4 1.0\n")
        blobs = []
        for name in ("first", "second"):
            out = tmp_path / name
            code = main(["solve", "--graph", str(graph), "--layers", "3",
                         "--iters", "60", "--restarts", "2", "--seed", "11",
                         "--out", str(out)])
            assert code == 0
            record = json.loads((out / "result.json").read_text())
            record.pop("timestamp")
            blobs.append((json.dumps(record, sort_keys=True),
                          (out / "trace.csv").read_bytes(),
                          (out / "solution.txt").read_bytes()))
        assert blobs[0] == blobs[1]

    def test_experiment_outputs_identical(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "schema_version": 1, "n_c": 4, "layers": [1, 2], "runs": 4,
            "problems": 2, "optimizer": "adam", "alpha": 0.1,
            "max_iters": 20, "seed": 11,
        }))
        blobs = []
        for name in ("first", "second"):
            out = tmp_path / name
            assert main(["experiment", "local-minima", "--config", str(cfg),
                         "--out", str(out)]) == 0
            rows = (out / "cells.csv").read_text().splitlines()
            w = rows[0].split(",").index("wall_ms")
            masked = [",".join(v for c, v in enumerate(r.split(",")) if c != w)
                      for r in rows]
            blobs.append((masked,
                          (out / "summary.csv").read_bytes(),
                          (out / "manifest.json").read_bytes()))
        assert blobs[0] == blobs[1]
