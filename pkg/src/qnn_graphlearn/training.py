"""
Training loop, paired supervised / supervised+graph arms and supervised-count
sweeps.

Seeding: every shot derives three independent generators (inputs, mask,
network) from ``SeedSequence(seed, spawn_key=(S, shot))``. Both arms of a
shot share them, and a ``train`` run with S supervised vertices sees exactly
the data, mask and initial network of shot 0 of sweep row S. Results do not
depend on how shots are distributed over worker processes.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace

import numpy as np

from qnn_graphlearn.errors import ConfigError, DatasetError, TrainingSignalError
from qnn_graphlearn.graph_data import (
    DatasetBuilder,
    GraphDataset,
    SupervisionMask,
    select_supervised,
)
from qnn_graphlearn.losses import LossRecord, evaluate_losses
from qnn_graphlearn.network import NetworkState, NetworkTopology, init_network
from qnn_graphlearn.updates import M_METHODS, forward_traces, update_step

logger = logging.getLogger(__name__)

__all__ = [
    "ArmSummary",
    "Hyperparams",
    "LossRecord",
    "PairedTraining",
    "ShotResult",
    "ShotStreams",
    "ShotTask",
    "SweepTable",
    "TrainingTrace",
    "prepare_shot",
    "run_shot",
    "shot_streams",
    "sweep_supervised",
    "train",
    "train_paired",
]


@dataclass(frozen=True)
class Hyperparams:
    """Training hyperparameters.

    ``eta`` scales every update matrix; ``gamma_graph`` <= 0 weights the graph
    loss in L_SV+G = L_SV + gamma * L_G.
    """

    epsilon: float = 0.01
    eta: float = 1.0
    gamma_graph: float = 0.0
    rounds: int = 1000
    shots: int = 30
    seed: int = 0
    m_method: str = "reduced"
    stop_on_plateau: bool = False
    plateau_window: int = 50
    plateau_rel_tol: float = 1e-7

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.eta > 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}")
        if not self.gamma_graph <= 0:
            raise ConfigError(f"gamma_graph must be <= 0, got {self.gamma_graph}")
        if self.rounds < 0:
            raise ConfigError(f"rounds must be >= 0, got {self.rounds}")
        if self.shots < 1:
            raise ConfigError(f"shots must be >= 1, got {self.shots}")
        if self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")
        if self.m_method not in M_METHODS:
            raise ConfigError(f"m_method must be one of {M_METHODS}, got {self.m_method!r}")
        if self.plateau_window < 1:
            raise ConfigError(f"plateau_window must be >= 1, got {self.plateau_window}")

    def with_gamma(self, gamma_graph: float) -> Hyperparams:
        return replace(self, gamma_graph=gamma_graph)


@dataclass
class TrainingTrace:
    hyperparams: Hyperparams
    mask: SupervisionMask
    records: list[LossRecord]
    network: NetworkState
    stopped_early: bool = False

    @property
    def initial(self) -> LossRecord:
        return self.records[0]

    @property
    def final(self) -> LossRecord:
        return self.records[-1]

    def series(self, name: str) -> list[float | None]:
        """One LossRecord attribute over all rounds."""
        return [getattr(record, name) for record in self.records]


def _plateaued(records: Sequence[LossRecord], hyper: Hyperparams) -> bool:
    if len(records) <= hyper.plateau_window:
        return False
    old = records[-hyper.plateau_window - 1].l_combined
    new = records[-1].l_combined
    return (new - old) / max(abs(old), 1e-300) < hyper.plateau_rel_tol


def train(
    network: NetworkState,
    dataset: GraphDataset,
    mask: SupervisionMask,
    hyper: Hyperparams,
) -> TrainingTrace:
    """Run ``hyper.rounds`` synchronous updates.

    The trace holds the losses before the first update and after every update
    (rounds + 1 records unless the plateau detector stops the run early).
    """
    if mask.num_vertices != dataset.num_vertices:
        raise DatasetError(
            f"mask covers {mask.num_vertices} vertices, dataset has {dataset.num_vertices}"
        )
    if mask.num_supervised == 0 and hyper.gamma_graph == 0:
        raise TrainingSignalError("S = 0 and gamma_graph = 0: no training signal")

    records: list[LossRecord] = []
    stopped_early = False
    for step in range(hyper.rounds):
        network, record = update_step(network, dataset, mask, hyper, step_index=step)
        records.append(record)
        logger.debug(
            "step %d: l_sv=%s l_graph=%.6g l_usv=%s",
            step,
            record.l_sv,
            record.l_graph,
            record.l_usv,
        )
        if hyper.stop_on_plateau and _plateaued(records, hyper):
            logger.info("plateau reached after %d rounds", step + 1)
            stopped_early = True
            break

    outputs = [trace.output for trace in forward_traces(network, dataset)]
    records.append(
        evaluate_losses(outputs, dataset, mask, hyper.gamma_graph, step_index=len(records))
    )
    return TrainingTrace(hyper, mask, records, network, stopped_early)


@dataclass
class PairedTraining:
    """Supervised-only arm (gamma = 0) and graph arm from the same start."""

    supervised: TrainingTrace
    graph: TrainingTrace


def train_paired(
    dataset: GraphDataset,
    mask: SupervisionMask,
    network: NetworkState,
    hyper: Hyperparams,
) -> PairedTraining:
    supervised = train(network, dataset, mask, hyper.with_gamma(0.0))
    graph = train(network, dataset, mask, hyper)
    return PairedTraining(supervised=supervised, graph=graph)


# =============================================================================
# Shots and sweeps
# =============================================================================


@dataclass(frozen=True)
class ShotStreams:
    inputs: np.random.Generator
    mask: np.random.Generator
    network: np.random.Generator


def shot_streams(seed: int, key: Sequence[int]) -> ShotStreams:
    """Independent generators for one shot, keyed by e.g. (S, shot)."""
    children = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)).spawn(3)
    inputs, mask, network = (np.random.default_rng(child) for child in children)
    return ShotStreams(inputs=inputs, mask=mask, network=network)


def prepare_shot(
    builder: DatasetBuilder,
    topology: NetworkTopology,
    seed: int,
    s: int,
    shot: int,
) -> tuple[GraphDataset, SupervisionMask, NetworkState]:
    """Dataset (fresh inputs), mask and initial network of one shot."""
    streams = shot_streams(seed, (s, shot))
    dataset = builder(streams.inputs)
    mask = select_supervised(dataset.num_vertices, s, streams.mask)
    network = init_network(topology, streams.network)
    return dataset, mask, network


@dataclass(frozen=True)
class ShotTask:
    builder: DatasetBuilder
    topology: NetworkTopology
    hyper: Hyperparams
    s: int
    shot: int


@dataclass(frozen=True)
class ShotResult:
    s: int
    shot: int
    supervised_final: LossRecord
    graph_final: LossRecord


def run_shot(task: ShotTask) -> ShotResult:
    """Train both arms of one shot; module-level so worker processes can run it."""
    dataset, mask, network = prepare_shot(
        task.builder, task.topology, task.hyper.seed, task.s, task.shot
    )
    paired = train_paired(dataset, mask, network, task.hyper)
    return ShotResult(
        s=task.s,
        shot=task.shot,
        supervised_final=paired.supervised.final,
        graph_final=paired.graph.final,
    )


@dataclass(frozen=True)
class ArmSummary:
    """Per-S means of the final losses of one arm."""

    gamma_graph: float
    training_mean: tuple[float, ...]
    testing_mean: tuple[float, ...]


@dataclass
class SweepTable:
    s_values: tuple[int, ...]
    supervised: ArmSummary
    graph: ArmSummary
    shots: tuple[ShotResult, ...] = field(default_factory=tuple)

    def rows(self) -> list[tuple[int, float, float, float, float]]:
        """(S, sv train, graph train, sv test, graph test) per S."""
        return [
            (
                s,
                self.supervised.training_mean[i],
                self.graph.training_mean[i],
                self.supervised.testing_mean[i],
                self.graph.testing_mean[i],
            )
            for i, s in enumerate(self.s_values)
        ]


def resolve_jobs(jobs: int | None) -> int:
    """``None`` means available parallelism."""
    if jobs is None:
        return os.cpu_count() or 1
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    return jobs


def _summarize(
    results: dict[tuple[int, int], ShotResult],
    s_values: Sequence[int],
    shots: int,
    arm: str,
    gamma_graph: float,
) -> ArmSummary:
    training, testing = [], []
    for s in s_values:
        finals = [getattr(results[(s, shot)], arm) for shot in range(shots)]
        training.append(float(np.mean([rec.l_sv for rec in finals])))
        testing.append(float(np.mean([rec.l_usv for rec in finals])))
    return ArmSummary(gamma_graph, tuple(training), tuple(testing))


def sweep_supervised(
    dataset_builder: DatasetBuilder,
    topology: NetworkTopology,
    hyper: Hyperparams,
    s_values: Sequence[int],
    *,
    jobs: int | None = 1,
    progress: Callable[[ShotResult, int, int], None] | None = None,
) -> SweepTable:
    """Mean final losses of both arms for every S over ``hyper.shots`` shots.

    Shots run in a process pool when ``jobs`` > 1. Each shot fills its own
    (S, shot) slot, and means are taken in shot order.

    Raises:
        ConfigError: if ``s_values`` is empty or an S is outside 1..N-1
    """
    if not s_values:
        raise ConfigError("s_values must not be empty")
    s_values = tuple(int(s) for s in s_values)
    workers = resolve_jobs(jobs)
    tasks = [
        ShotTask(dataset_builder, topology, hyper, s, shot)
        for s in s_values
        for shot in range(hyper.shots)
    ]
    probe = dataset_builder(np.random.default_rng(hyper.seed))
    for s in s_values:
        if not 1 <= s <= probe.num_vertices - 1:
            raise ConfigError(
                f"sweep needs 1 <= S <= N-1 = {probe.num_vertices - 1}, got S={s}"
            )

    results: dict[tuple[int, int], ShotResult] = {}
    if workers == 1:
        for task in tasks:
            result = run_shot(task)
            results[(result.s, result.shot)] = result
            if progress:
                progress(result, len(results), len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_shot, task) for task in tasks]
            for future in as_completed(futures):
                result = future.result()
                results[(result.s, result.shot)] = result
                if progress:
                    progress(result, len(results), len(tasks))
    logger.info("sweep finished: %d shots over S=%s", len(results), list(s_values))

    return SweepTable(
        s_values=s_values,
        supervised=_summarize(results, s_values, hyper.shots, "supervised_final", 0.0),
        graph=_summarize(results, s_values, hyper.shots, "graph_final", hyper.gamma_graph),
        shots=tuple(results[(task.s, task.shot)] for task in tasks),
    )
