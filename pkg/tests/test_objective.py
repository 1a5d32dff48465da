import numpy as np
import pytest

from quenc.objective import (EXACT_MASS_FLOOR, SolutionDistribution, decode,
                             extract_exact, extract_shots, qubits_for,
                             quenc_cost, register_width)
from quenc.problems import qubo_cost
from quenc.statevector import StateVector, run_circuit, sample
from quenc.ansatz import build_sequential, prepare_warmstart_state

from conftest import random_qubo


class TestRegisterWidth:
    @pytest.mark.parametrize("n_c,width", [
        (2, 1), (3, 2), (4, 2), (5, 3), (8, 3), (9, 4), (16, 4), (17, 5),
        (64, 6), (256, 8)])
    def test_widths(self, n_c, width):
        assert register_width(n_c) == width
        assert qubits_for(n_c) == width + 1

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            register_width(0)


class TestSolutionDistribution:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SolutionDistribution(p1=np.array([0.2, 1.4]),
                                 unsupported=np.zeros(2, bool))

    def test_read_only(self):
        d = SolutionDistribution(p1=np.array([0.2, 0.8]),
                                 unsupported=np.zeros(2, bool))
        with pytest.raises(ValueError):
            d.p1[0] = 0.9


class TestExtractExact:
    def test_known_state(self):
        # amplitudes chosen by hand on 1 register qubit + ancilla:
        # index layout a*2 + r
        amps = np.array([np.sqrt(0.1), np.sqrt(0.2), np.sqrt(0.3), np.sqrt(0.4)])
        st = StateVector(2, amps)
        d = extract_exact(st, 2)
        assert d.p1[0] == pytest.approx(0.3 / 0.4)
        assert d.p1[1] == pytest.approx(0.4 / 0.6)

    def test_warmstart_roundtrip_is_exact(self):
        x = np.array([1, 0, 0, 1, 1, 0, 1])
        d = extract_exact(prepare_warmstart_state(x), 7)
        assert np.allclose(d.p1, x)
        assert not d.unsupported.any()

    def test_zero_mass_index_neutral(self):
        # all mass on register index 0: index 1 has no support
        st = StateVector(2, np.array([1.0, 0.0, 0.0, 0.0]))
        d = extract_exact(st, 2)
        assert d.p1[0] == 0.0
        assert d.p1[1] == 0.5
        assert d.unsupported[1]

    def test_padding_ignored(self):
        # n_c = 3 on a 4-index register: p1 has exactly 3 entries
        st = prepare_warmstart_state(np.array([1, 1, 0]))
        d = extract_exact(st, 3)
        assert d.p1.shape == (3,)

    def test_wrong_qubit_count_rejected(self):
        with pytest.raises(ValueError):
            extract_exact(StateVector.zero(4), 3)


class TestExtractShots:
    def test_counts_conditional(self):
        counts = np.array([10, 30, 90, 70])  # layout a*2 + r
        d = extract_shots(counts, 2)
        assert d.p1[0] == pytest.approx(90 / 100)
        assert d.p1[1] == pytest.approx(70 / 100)
        assert np.array_equal(d.support, [100, 100])

    def test_min_support_flags(self):
        counts = np.array([0, 5, 2, 5])
        d = extract_shots(counts, 2, min_support=3)
        # index 0 has support 2 < 3 -> flagged and neutral
        assert d.unsupported[0]
        assert d.p1[0] == 0.5
        d1 = extract_shots(counts, 2, min_support=1)
        assert not d1.unsupported[0]
        assert d1.p1[0] == 1.0  # both observations saw ancilla = 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            extract_shots(np.zeros(4, dtype=int), 2)

    def test_agrees_with_exact_in_the_limit(self):
        circuit = build_sequential(3, 2)
        rng = np.random.default_rng(0)
        theta = rng.uniform(0, 2 * np.pi, circuit.n_params)
        st = run_circuit(circuit, theta)
        exact = extract_exact(st, 4)
        counts = sample(st, 400000, seed=9)
        shot = extract_shots(counts, 4)
        assert np.allclose(shot.p1, exact.p1, atol=5e-3)


class TestQuencCost:
    def test_vertex_values_equal_classical_cost(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n_c = int(rng.integers(2, 10))
            q = random_qubo(n_c, rng)
            x = rng.integers(0, 2, n_c)
            d = SolutionDistribution(p1=x.astype(float),
                                     unsupported=np.zeros(n_c, bool))
            assert quenc_cost(q, d) == pytest.approx(qubo_cost(q, x), abs=1e-12)

    def test_formula_on_interior_point(self):
        q = random_qubo(3, np.random.default_rng(1))
        p = np.array([0.2, 0.7, 0.4])
        d = SolutionDistribution(p1=p, unsupported=np.zeros(3, bool))
        want = (q.Q[0, 1] * p[0] * p[1] + q.Q[0, 2] * p[0] * p[2]
                + q.Q[1, 2] * p[1] * p[2] + np.diag(q.Q) @ p)
        assert quenc_cost(q, d) == pytest.approx(want)

    def test_length_mismatch_rejected(self, triangle_qubo):
        d = SolutionDistribution(p1=np.array([0.5, 0.5]),
                                 unsupported=np.zeros(2, bool))
        with pytest.raises(ValueError):
            quenc_cost(triangle_qubo, d)


class TestDecode:
    def test_threshold_and_ties(self):
        d = SolutionDistribution(p1=np.array([0.49, 0.5, 0.51, 1.0, 0.0]),
                                 unsupported=np.zeros(5, bool))
        assert decode(d).tolist() == [0, 0, 1, 1, 0]

    def test_floor_constant(self):
        assert EXACT_MASS_FLOOR == 1e-12
