"""
Tests for qnn_graphlearn.losses.

1. Supervised and testing fidelities on hand-computed outputs
2. Graph loss counts every ordered pair
3. Combined loss recomposes from its parts
4. LossRecord fields for the S = 0 and S = N boundaries
"""

import numpy as np
import pytest

from qnn_graphlearn.errors import DimensionMismatchError, TrainingSignalError
from qnn_graphlearn.graph_data import SupervisionMask, dataset_connected_clusters
from qnn_graphlearn.linalg import PureState, maximally_mixed
from qnn_graphlearn.losses import (
    evaluate_losses,
    loss_combined,
    loss_graph,
    loss_supervised,
    loss_testing,
    loss_training_all,
)
from qnn_graphlearn.network import NetworkTopology, init_network, network_output

ZERO = PureState.basis(0, 1)
ONE = PureState.basis(1, 1)


def projectors(states):
    return [s.to_density_matrix() for s in states]


class TestSupervised:
    def test_perfect_outputs(self) -> None:
        targets = [ZERO, ONE, ZERO]
        mask = SupervisionMask.from_supervised([0, 1], 3)
        assert loss_supervised(projectors(targets), targets, mask) == pytest.approx(1.0)

    def test_maximally_mixed_outputs(self) -> None:
        targets = [ZERO, ONE]
        outputs = [maximally_mixed(1)] * 2
        mask = SupervisionMask.from_supervised([0, 1], 2)
        assert loss_supervised(outputs, targets, mask) == pytest.approx(0.5)

    def test_line_coefficient(self) -> None:
        target = PureState(np.array([0.78, 0.62]) / np.hypot(0.78, 0.62))
        mask = SupervisionMask.from_supervised([0], 1)
        value = loss_supervised(projectors([ZERO]), [target], mask)
        assert value == pytest.approx(0.78**2 / (0.78**2 + 0.62**2), abs=1e-12)

    def test_only_supervised_vertices_count(self) -> None:
        targets = [ZERO, ONE]
        outputs = projectors([ZERO, ZERO])
        mask = SupervisionMask.from_supervised([0], 2)
        assert loss_supervised(outputs, targets, mask) == pytest.approx(1.0)
        assert loss_testing(outputs, targets, mask) == pytest.approx(0.0)
        assert loss_training_all(outputs, targets) == pytest.approx(0.5)

    def test_no_supervised_vertices(self) -> None:
        mask = SupervisionMask.from_supervised([], 2)
        with pytest.raises(TrainingSignalError):
            loss_supervised(projectors([ZERO, ONE]), [ZERO, ONE], mask)


class TestTesting:
    def test_single_unsupervised_mixed(self) -> None:
        mask = SupervisionMask.from_supervised([0], 2)
        outputs = [ZERO.to_density_matrix(), maximally_mixed(1)]
        assert loss_testing(outputs, [ZERO, ONE], mask) == pytest.approx(0.5)

    def test_every_vertex_supervised(self) -> None:
        mask = SupervisionMask.from_supervised([0, 1], 2)
        with pytest.raises(TrainingSignalError):
            loss_testing(projectors([ZERO, ONE]), [ZERO, ONE], mask)


class TestGraph:
    def test_identical_outputs(self) -> None:
        adjacency = np.ones((3, 3)) - np.eye(3)
        assert loss_graph(projectors([ONE] * 3), adjacency) == 0.0

    def test_ordered_pairs_counted_twice(self) -> None:
        adjacency = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert loss_graph(projectors([ZERO, ONE]), adjacency) == pytest.approx(4.0)

    def test_weights_scale(self) -> None:
        adjacency = np.array([[0.0, 0.5], [0.5, 0.0]])
        assert loss_graph(projectors([ZERO, ONE]), adjacency) == pytest.approx(2.0)

    def test_zero_adjacency(self, rng) -> None:
        outputs = [maximally_mixed(1), ZERO.to_density_matrix()]
        assert loss_graph(outputs, np.zeros((2, 2))) == 0.0

    def test_dimension_mismatch(self) -> None:
        with pytest.raises(DimensionMismatchError):
            loss_graph(projectors([ZERO, ONE]), np.zeros((3, 3)))


class TestCombined:
    def test_gamma_zero_equals_supervised(self) -> None:
        targets = [ZERO, ONE]
        outputs = [maximally_mixed(1), ZERO.to_density_matrix()]
        mask = SupervisionMask.from_supervised([0, 1], 2)
        adjacency = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert loss_combined(outputs, targets, mask, adjacency, 0.0) == loss_supervised(
            outputs, targets, mask
        )

    def test_perfect_network_on_constant_targets(self) -> None:
        targets = [ONE] * 3
        mask = SupervisionMask.from_supervised([0], 3)
        adjacency = np.ones((3, 3)) - np.eye(3)
        assert loss_combined(projectors(targets), targets, mask, adjacency, -1.0) == 1.0

    def test_recomposes_on_clusters(self, rng) -> None:
        ds = dataset_connected_clusters(rng)
        net = init_network(NetworkTopology((3, 1)), rng)
        outputs = [network_output(net, rho) for rho in ds.inputs]
        mask = SupervisionMask.from_supervised([0, 4, 7], ds.num_vertices)
        expected = loss_supervised(outputs, ds.targets, mask) - 0.5 * loss_graph(
            outputs, ds.adjacency
        )
        value = loss_combined(outputs, ds.targets, mask, ds.adjacency, -0.5)
        assert value == pytest.approx(expected, abs=1e-12)

    def test_graph_only_without_supervision(self) -> None:
        mask = SupervisionMask.from_supervised([], 2)
        adjacency = np.array([[0.0, 1.0], [1.0, 0.0]])
        value = loss_combined(projectors([ZERO, ONE]), [ZERO, ONE], mask, adjacency, -1.0)
        assert value == pytest.approx(-4.0)


class TestLossRecord:
    def test_fields_and_invariants(self, make_instance) -> None:
        ds, mask, net = make_instance((2, 1), num_vertices=4, supervised=2)
        outputs = [network_output(net, rho) for rho in ds.inputs]
        record = evaluate_losses(outputs, ds, mask, -0.5, step_index=7)
        assert record.step_index == 7
        assert 0.0 <= record.l_sv <= 1.0
        assert 0.0 <= record.l_usv <= 1.0
        assert record.l_graph >= 0.0
        assert record.l_combined == pytest.approx(record.l_sv - 0.5 * record.l_graph, abs=1e-12)

    def test_boundaries_leave_fields_empty(self, make_instance) -> None:
        ds, _, net = make_instance((2, 1), num_vertices=3)
        outputs = [network_output(net, rho) for rho in ds.inputs]
        unsupervised = evaluate_losses(outputs, ds, SupervisionMask.from_supervised([], 3), -1.0)
        everyone = SupervisionMask.from_supervised([0, 1, 2], 3)
        supervised = evaluate_losses(outputs, ds, everyone, 0.0)
        assert unsupervised.l_sv is None
        assert unsupervised.l_usv == pytest.approx(unsupervised.l_all)
        assert supervised.l_usv is None
        assert supervised.l_sv == pytest.approx(supervised.l_all)
