"""
Shared fixtures for the qnn-graphlearn test suite.

Every fixture that draws random numbers takes an explicit seed so failures
reproduce exactly.
"""

from collections.abc import Callable

import numpy as np
import pytest

from qnn_graphlearn.graph_data import (
    GraphDataset,
    SupervisionMask,
    dataset_random,
    select_supervised,
)
from qnn_graphlearn.linalg import PAULI_MATRICES, HermitianOperator
from qnn_graphlearn.network import NetworkState, NetworkTopology, init_network

Instance = tuple[GraphDataset, SupervisionMask, NetworkState]


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: minutes-scale replication runs")
    config.addinivalue_line("markers", "acceptance: pins a numbered acceptance criterion")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def paulis() -> dict[str, np.ndarray]:
    return dict(PAULI_MATRICES)


@pytest.fixture
def make_instance() -> Callable[..., Instance]:
    """Factory: random dataset, mask and network for a topology."""

    def _make(
        widths: tuple[int, ...],
        num_vertices: int = 3,
        supervised: int = 1,
        seed: int = 0,
        edge_probability: float = 1.0,
    ) -> Instance:
        gen = np.random.default_rng(seed)
        dataset = dataset_random(
            gen,
            num_vertices=num_vertices,
            input_qubits=widths[0],
            output_qubits=widths[-1],
            edge_probability=edge_probability,
        )
        mask = select_supervised(num_vertices, supervised, gen)
        network = init_network(NetworkTopology(tuple(widths)), gen)
        return dataset, mask, network

    return _make


@pytest.fixture
def random_hermitian() -> Callable[[int, np.random.Generator], HermitianOperator]:
    def _make(num_qubits: int, gen: np.random.Generator) -> HermitianOperator:
        dim = 2**num_qubits
        a = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
        return HermitianOperator(0.5 * (a + a.conj().T))

    return _make
