import numpy as np
import pytest

from quenc import MaxCutGraph, QuboProblem, graph_to_qubo


@pytest.fixture
def triangle_qubo() -> QuboProblem:
    """Fully connected 3-node unit graph; optimum cost -2 (any proper cut)."""
    Q = np.array([[-2.0, 2.0, 2.0], [0.0, -2.0, 2.0], [0.0, 0.0, -2.0]])
    return QuboProblem(n_c=3, Q=Q)


@pytest.fixture
def five_node_graph() -> MaxCutGraph:
    """Unit-weight 5-node graph whose best cut has value 5.

    With the x_0 + x_2 = 1 exclusivity constraint the best attainable
    value drops to 4.
    """
    edges = ((0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 4, 1.0), (3, 4, 1.0))
    return MaxCutGraph(n_c=5, edges=edges)


@pytest.fixture
def five_node_qubo(five_node_graph) -> QuboProblem:
    return graph_to_qubo(five_node_graph)


def random_qubo(n_c: int, rng: np.random.Generator) -> QuboProblem:
    """Dense random upper-triangular QUBO with entries in [-1, 1]."""
    Q = np.triu(rng.uniform(-1.0, 1.0, size=(n_c, n_c)))
    return QuboProblem(n_c=n_c, Q=Q)
