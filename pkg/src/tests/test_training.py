"""
Tests for qnn_graphlearn.training.

1. Hyperparameter validation
2. Training traces: record counts, determinism, plateau stop
3. Reductions: gamma = 0 and S = 0 match dedicated single-loss trainers
4. Graph-only training does not increase the graph loss
5. Shot seeding and supervised-count sweeps
"""

from functools import partial

import numpy as np
import pytest

from qnn_graphlearn.errors import ConfigError, TrainingSignalError
from qnn_graphlearn.graph_data import GraphDataset, SupervisionMask, dataset_random
from qnn_graphlearn.linalg import HermitianOperator, random_pure_state
from qnn_graphlearn.network import NetworkTopology, init_network
from qnn_graphlearn.training import (
    Hyperparams,
    ShotTask,
    prepare_shot,
    resolve_jobs,
    run_shot,
    shot_streams,
    sweep_supervised,
    train,
    train_paired,
)
from qnn_graphlearn.updates import LossGradient, apply_update, k_scale

SMALL_BUILDER = partial(
    dataset_random, num_vertices=3, input_qubits=2, output_qubits=1, edge_probability=1.0
)


def assert_same_network(a, b) -> None:
    for (idx, u), (_, v) in zip(a.items(), b.items(), strict=True):
        assert np.array_equal(u, v), f"perceptron {idx} differs"


class TestHyperparams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"epsilon": 0.0},
            {"eta": -1.0},
            {"gamma_graph": 0.5},
            {"rounds": -1},
            {"shots": 0},
            {"seed": -3},
            {"m_method": "fast"},
        ],
    )
    def test_rejected(self, kwargs) -> None:
        with pytest.raises(ConfigError):
            Hyperparams(**kwargs)

    def test_with_gamma(self) -> None:
        hyper = Hyperparams(gamma_graph=-1.0, rounds=5)
        assert hyper.with_gamma(0.0) == Hyperparams(gamma_graph=0.0, rounds=5)


class TestTrain:
    def test_zero_rounds(self, make_instance) -> None:
        ds, mask, net = make_instance((2, 1))
        trace = train(net, ds, mask, Hyperparams(rounds=0))
        assert len(trace.records) == 1
        assert trace.network is net

    def test_record_count(self, make_instance) -> None:
        ds, mask, net = make_instance((2, 1))
        trace = train(net, ds, mask, Hyperparams(rounds=4, gamma_graph=-0.5))
        assert [r.step_index for r in trace.records] == [0, 1, 2, 3, 4]
        assert trace.initial.step_index == 0
        assert trace.final.step_index == 4

    def test_deterministic(self, make_instance) -> None:
        ds, mask, net = make_instance((2, 1), supervised=2)
        hyper = Hyperparams(rounds=3, gamma_graph=-0.5)
        a, b = train(net, ds, mask, hyper), train(net, ds, mask, hyper)
        assert a.records == b.records
        assert_same_network(a.network, b.network)

    def test_no_training_signal(self, make_instance) -> None:
        ds, _, net = make_instance((2, 1))
        mask = SupervisionMask.from_supervised([], ds.num_vertices)
        with pytest.raises(TrainingSignalError):
            train(net, ds, mask, Hyperparams(rounds=1))

    def test_plateau_stops_stationary_run(self) -> None:
        gen = np.random.default_rng(2)
        phi = random_pure_state(1, gen)
        ds = GraphDataset.from_states([phi], [phi], np.zeros((1, 1)))
        swap = np.eye(4)[[0, 2, 1, 3]]
        net = init_network(NetworkTopology((1, 1)), gen).with_perceptrons({(1, 0): swap})
        hyper = Hyperparams(rounds=100, stop_on_plateau=True, plateau_window=5)
        trace = train(net, ds, SupervisionMask.from_supervised([0], 1), hyper)
        assert trace.stopped_early
        assert len(trace.records) < 101

    def test_single_pair_converges(self) -> None:
        gen = np.random.default_rng(8)
        ds = dataset_random(gen, num_vertices=1, input_qubits=2, output_qubits=1)
        net = init_network(NetworkTopology((2, 1)), gen)
        trace = train(net, ds, SupervisionMask.from_supervised([0], 1), Hyperparams(rounds=1000))
        assert trace.final.l_sv > 0.95, f"final l_sv {trace.final.l_sv}"

    def test_series(self, make_instance) -> None:
        ds, mask, net = make_instance((2, 1))
        trace = train(net, ds, mask, Hyperparams(rounds=2))
        assert trace.series("l_sv") == [r.l_sv for r in trace.records]


class TestReductions:
    def test_gamma_zero_matches_supervised_trainer(self, make_instance) -> None:
        ds, mask, net = make_instance((1, 2, 1), num_vertices=4, supervised=2, seed=41)
        hyper = Hyperparams(rounds=3, epsilon=0.05)
        manual = net
        for _ in range(hyper.rounds):
            gradient = LossGradient(manual, ds, mask)
            ks = {
                (layer, j): HermitianOperator(
                    k_scale(manual.topology, layer, hyper.eta) * gradient.supervised(layer, j)
                )
                for layer, j in manual.topology.perceptron_indices()
            }
            manual = apply_update(manual, ks, hyper.epsilon)
        assert_same_network(train(net, ds, mask, hyper).network, manual)

    def test_graph_only_matches_graph_trainer(self, make_instance) -> None:
        ds, _, net = make_instance((2, 1), num_vertices=3, seed=42)
        mask = SupervisionMask.from_supervised([], 3)
        hyper = Hyperparams(rounds=3, epsilon=0.05, gamma_graph=-1.0)
        manual = net
        for _ in range(hyper.rounds):
            gradient = LossGradient(manual, ds, mask)
            ks = {
                (layer, j): HermitianOperator(
                    k_scale(manual.topology, layer, hyper.eta)
                    * (hyper.gamma_graph * gradient.graph(layer, j))
                )
                for layer, j in manual.topology.perceptron_indices()
            }
            manual = apply_update(manual, ks, hyper.epsilon)
        assert_same_network(train(net, ds, mask, hyper).network, manual)

    def test_graph_loss_non_increasing_without_supervision(self, make_instance) -> None:
        ds, _, net = make_instance((2, 1), num_vertices=4, seed=43)
        mask = SupervisionMask.from_supervised([], 4)
        trace = train(net, ds, mask, Hyperparams(rounds=20, epsilon=1e-3, gamma_graph=-1.0))
        graph = trace.series("l_graph")
        for step, (before, after) in enumerate(zip(graph, graph[1:])):
            assert after <= before + 1e-6, f"step {step}: {before} -> {after}"

    def test_paired_arms_share_start(self, make_instance) -> None:
        ds, mask, net = make_instance((2, 1), supervised=2)
        paired = train_paired(ds, mask, net, Hyperparams(rounds=2, gamma_graph=-1.0))
        assert paired.supervised.hyperparams.gamma_graph == 0.0
        assert paired.graph.hyperparams.gamma_graph == -1.0
        assert paired.supervised.initial.l_sv == paired.graph.initial.l_sv


class TestShots:
    def test_streams_are_keyed(self) -> None:
        a = shot_streams(7, (3, 0))
        b = shot_streams(7, (3, 0))
        c = shot_streams(7, (3, 1))
        draw_a, draw_b, draw_c = (s.network.random(4) for s in (a, b, c))
        assert np.array_equal(draw_a, draw_b)
        assert not np.array_equal(draw_a, draw_c)

    def test_streams_are_independent(self) -> None:
        streams = shot_streams(7, (3, 0))
        assert not np.array_equal(streams.inputs.random(4), streams.mask.random(4))

    def test_prepare_shot_is_reproducible(self) -> None:
        topo = NetworkTopology((2, 1))
        ds_a, mask_a, net_a = prepare_shot(SMALL_BUILDER, topo, 5, 1, 0)
        ds_b, mask_b, net_b = prepare_shot(SMALL_BUILDER, topo, 5, 1, 0)
        assert mask_a == mask_b
        assert np.array_equal(ds_a.adjacency, ds_b.adjacency)
        assert_same_network(net_a, net_b)

    def test_run_shot_trains_both_arms(self) -> None:
        hyper = Hyperparams(rounds=2, shots=1, gamma_graph=-0.5, seed=3)
        result = run_shot(ShotTask(SMALL_BUILDER, NetworkTopology((2, 1)), hyper, 1, 0))
        assert (result.s, result.shot) == (1, 0)
        assert result.supervised_final.step_index == 2
        assert result.graph_final.l_usv is not None


class TestSweep:
    hyper = Hyperparams(rounds=2, shots=2, gamma_graph=-0.5, seed=9)
    topology = NetworkTopology((2, 1))

    def test_shapes_match(self) -> None:
        table = sweep_supervised(SMALL_BUILDER, self.topology, self.hyper, [1, 2])
        assert table.s_values == (1, 2)
        assert len(table.supervised.testing_mean) == len(table.graph.testing_mean) == 2
        assert [row[0] for row in table.rows()] == [1, 2]
        assert len(table.shots) == 4

    def test_single_shot_means_are_run_values(self) -> None:
        hyper = Hyperparams(rounds=2, shots=1, gamma_graph=-0.5, seed=9)
        table = sweep_supervised(SMALL_BUILDER, self.topology, hyper, [2])
        result = run_shot(ShotTask(SMALL_BUILDER, self.topology, hyper, 2, 0))
        assert table.graph.testing_mean[0] == result.graph_final.l_usv
        assert table.supervised.training_mean[0] == result.supervised_final.l_sv

    def test_parallel_matches_serial(self) -> None:
        serial = sweep_supervised(SMALL_BUILDER, self.topology, self.hyper, [1, 2], jobs=1)
        parallel = sweep_supervised(SMALL_BUILDER, self.topology, self.hyper, [1, 2], jobs=2)
        assert serial.rows() == parallel.rows()

    def test_progress_callback(self) -> None:
        seen = []
        sweep_supervised(
            SMALL_BUILDER,
            self.topology,
            self.hyper,
            [1],
            progress=lambda result, done, total: seen.append((done, total)),
        )
        assert seen == [(1, 2), (2, 2)]

    @pytest.mark.parametrize("s_values", [[], [0], [3]])
    def test_invalid_s_values(self, s_values) -> None:
        with pytest.raises(ConfigError):
            sweep_supervised(SMALL_BUILDER, self.topology, self.hyper, s_values)

    def test_resolve_jobs(self) -> None:
        assert resolve_jobs(3) == 3
        assert resolve_jobs(None) >= 1
        with pytest.raises(ConfigError):
            resolve_jobs(0)
