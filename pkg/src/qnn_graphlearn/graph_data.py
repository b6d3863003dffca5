"""
Vertex-indexed quantum datasets.

A GraphDataset pairs every vertex with an input state (a density matrix on the
network's input register) and a pure target state (on the output register),
plus a symmetric, non-negative, zero-diagonal weighted adjacency matrix.

Vertices are 0-based in code: ``v_1`` of the experiment figures is vertex 0.

Usage:
    from qnn_graphlearn.graph_data import get_dataset_builder, select_supervised

    builder = get_dataset_builder("line")
    dataset = builder(rng)
    mask = select_supervised(dataset.num_vertices, 5, rng)
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import InitVar, dataclass, field
from functools import partial
from typing import Any

import numpy as np
import numpy.typing as npt

from qnn_graphlearn.errors import ConfigError, DatasetError
from qnn_graphlearn.linalg import (
    DEFAULT_ATOL,
    PSD_ATOL,
    DensityMatrix,
    PureState,
    hermiticity_error,
    random_pure_state,
)

logger = logging.getLogger(__name__)

DatasetBuilder = Callable[[np.random.Generator], "GraphDataset"]

INPUT_QUBITS = 3

# Printed target coefficients (a|0> + b|1>), three decimal places, v_1 first.
CLUSTERS_TARGET_COEFFICIENTS: tuple[tuple[float, float], ...] = (
    (1.0, 0.0),
    (0.997, 0.071),
    (0.988, 0.152),
    (0.97, 0.243),
    (0.152, 0.988),
    (0.071, 0.997),
    (0.0, 1.0),
    (0.659, 0.753),
)

LINE_TARGET_COEFFICIENTS: tuple[tuple[float, float], ...] = (
    (1.0, 0.0),
    (0.99, 0.21),
    (0.96, 0.28),
    (0.89, 0.45),
    (0.78, 0.62),
    (0.62, 0.78),
    (0.45, 0.89),
    (0.27, 0.96),
    (0.12, 0.99),
    (0.0, 1.0),
)

# 0.65 reproduces the drawn 11-edge two-cluster graph. The line pairs
# v_2-v_4 (0.9344) and v_5-v_6 (0.9491) bracket the path: any threshold in
# (0.9344, 0.9491] yields exactly the 9 path edges.
CLUSTERS_THRESHOLD = 0.65
LINE_THRESHOLD = 0.94


# =============================================================================
# Types
# =============================================================================


@dataclass(frozen=True)
class SupervisionMask:
    """Split of the vertices into supervised and unsupervised index lists."""

    supervised: tuple[int, ...]
    unsupervised: tuple[int, ...]

    def __post_init__(self) -> None:
        sup, unsup = set(self.supervised), set(self.unsupervised)
        if len(sup) != len(self.supervised) or len(unsup) != len(self.unsupervised):
            raise DatasetError("supervision mask contains duplicate vertices")
        if sup & unsup:
            raise DatasetError(f"vertices both supervised and unsupervised: {sorted(sup & unsup)}")
        if sup | unsup != set(range(self.num_vertices)):
            raise DatasetError("supervision mask does not cover vertices 0..N-1")

    @classmethod
    def from_supervised(cls, supervised: Sequence[int], num_vertices: int) -> SupervisionMask:
        chosen = sorted(int(v) for v in supervised)
        if any(not 0 <= v < num_vertices for v in chosen):
            raise DatasetError(f"supervised vertices {chosen} out of range for N={num_vertices}")
        rest = tuple(v for v in range(num_vertices) if v not in set(chosen))
        return cls(tuple(chosen), rest)

    @property
    def num_vertices(self) -> int:
        return len(self.supervised) + len(self.unsupervised)

    @property
    def num_supervised(self) -> int:
        return len(self.supervised)


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple[int, ...]
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, indices: Sequence[int], message: str) -> None:
        self.violations.append(Violation(kind, tuple(int(i) for i in indices), message))

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def summary(self) -> str:
        if self.ok:
            return "dataset OK"
        return "; ".join(f"{v.kind}{list(v.indices)}: {v.message}" for v in self.violations)


@dataclass(frozen=True, eq=False)
class GraphDataset:
    """Inputs, targets and adjacency for N vertices.

    ``input_states`` keeps the amplitude vectors when every input is pure, so
    the dataset can be written back out as amplitudes.
    """

    inputs: tuple[DensityMatrix, ...]
    targets: tuple[PureState, ...]
    adjacency: npt.NDArray[np.float64]
    input_states: tuple[PureState, ...] | None = None
    name: str = "custom"
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        adjacency = np.array(self.adjacency, dtype=np.float64)
        adjacency.setflags(write=False)
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.input_states is not None:
            object.__setattr__(self, "input_states", tuple(self.input_states))
        if check:
            report = validate_dataset(self)
            if not report.ok:
                raise DatasetError(f"invalid dataset: {report.summary()}")

    @classmethod
    def from_states(
        cls,
        inputs: Sequence[PureState | DensityMatrix],
        targets: Sequence[PureState],
        adjacency: Any,
        name: str = "custom",
    ) -> GraphDataset:
        """Promote pure inputs to projectors and build a validated dataset."""
        all_pure = all(isinstance(x, PureState) for x in inputs)
        densities = tuple(
            x.to_density_matrix() if isinstance(x, PureState) else x for x in inputs
        )
        pure_inputs = tuple(x for x in inputs if isinstance(x, PureState)) if all_pure else None
        return cls(densities, tuple(targets), np.asarray(adjacency), pure_inputs, name)

    @property
    def num_vertices(self) -> int:
        return len(self.targets)

    @property
    def input_qubits(self) -> int:
        return self.inputs[0].num_qubits

    @property
    def output_qubits(self) -> int:
        return self.targets[0].num_qubits

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges (v, w) with v < w and nonzero weight."""
        n = self.num_vertices
        return [(v, w) for v in range(n) for w in range(v + 1, n) if self.adjacency[v, w] > 0]

    @property
    def num_edges(self) -> int:
        return len(self.edges())


# =============================================================================
# Validation
# =============================================================================


def validate_dataset(ds: GraphDataset, atol: float = DEFAULT_ATOL) -> ValidationReport:
    """Check every GraphDataset invariant; never raises for a violation."""
    report = ValidationReport()
    n_targets = len(ds.targets)
    if n_targets == 0:
        report.add("empty", [], "dataset has no vertices")
        return report
    if len(ds.inputs) != n_targets:
        report.add(
            "length_mismatch", [], f"{len(ds.inputs)} inputs but {n_targets} targets"
        )

    adjacency = ds.adjacency
    if adjacency.shape != (n_targets, n_targets):
        report.add(
            "adjacency_shape",
            [],
            f"adjacency has shape {adjacency.shape}, expected {(n_targets, n_targets)}",
        )
    else:
        if not np.all(np.isfinite(adjacency)):
            report.add("adjacency_not_finite", [], "adjacency contains NaN or Inf")
        for v in range(n_targets):
            if abs(adjacency[v, v]) > atol:
                report.add("nonzero_diagonal", [v], f"A[{v},{v}] = {adjacency[v, v]}")
            for w in range(v + 1, n_targets):
                if abs(adjacency[v, w] - adjacency[w, v]) > atol:
                    report.add(
                        "asymmetric_adjacency",
                        [v, w],
                        f"A[{v},{w}] = {adjacency[v, w]} but A[{w},{v}] = {adjacency[w, v]}",
                    )
        for v, w in zip(*np.nonzero(adjacency < 0), strict=True):
            report.add("negative_weight", [v, w], f"A[{v},{w}] = {adjacency[v, w]}")

    target_qubits = {t.num_qubits for t in ds.targets}
    if len(target_qubits) > 1:
        report.add("target_qubits", [], f"targets mix qubit counts {sorted(target_qubits)}")
    for v, target in enumerate(ds.targets):
        if abs(target.norm - 1.0) > atol:
            report.add("target_not_normalized", [v], f"target norm is {target.norm:.12g}")

    input_qubits = {x.num_qubits for x in ds.inputs}
    if len(input_qubits) > 1:
        report.add("input_qubits", [], f"inputs mix qubit counts {sorted(input_qubits)}")
    for v, rho in enumerate(ds.inputs):
        if hermiticity_error(rho.matrix) > atol:
            report.add("input_not_hermitian", [v], "input density matrix is not Hermitian")
        if abs(rho.trace() - 1.0) > atol:
            report.add("input_trace", [v], f"input trace is {rho.trace():.12g}")
        elif rho.min_eigenvalue() < -PSD_ATOL:
            report.add("input_not_psd", [v], f"min eigenvalue {rho.min_eigenvalue():.3e}")

    return report


# =============================================================================
# Adjacency and builders
# =============================================================================


def overlap_matrix(targets: Sequence[PureState]) -> npt.NDArray[np.float64]:
    """|<phi_v|phi_w>|^2 for all ordered pairs."""
    amplitudes = np.array([t.amplitudes for t in targets])
    return np.abs(amplitudes.conj() @ amplitudes.T) ** 2


def build_adjacency_by_fidelity(
    targets: Sequence[PureState], threshold: float, weight: float = 1.0
) -> npt.NDArray[np.float64]:
    """Connect v != w whenever |<phi_v|phi_w>|^2 >= threshold.

    Raises:
        DatasetError: if ``targets`` is empty
        ConfigError: if threshold is outside (0, 1] or weight is not positive
    """
    if not targets:
        raise DatasetError("cannot build an adjacency matrix from an empty target list")
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"fidelity threshold must be in (0, 1], got {threshold}")
    if weight <= 0:
        raise ConfigError(f"edge weight must be positive, got {weight}")
    overlaps = overlap_matrix(targets)
    adjacency = np.where(overlaps >= threshold, float(weight), 0.0)
    np.fill_diagonal(adjacency, 0.0)
    # symmetric by construction, but floating-point overlaps may differ in the last bit
    return np.maximum(adjacency, adjacency.T)


def _printed_dataset(
    name: str,
    coefficients: Sequence[tuple[float, float]],
    rng: np.random.Generator,
    threshold: float,
    weight: float,
) -> GraphDataset:
    targets = [PureState.from_coefficients(c) for c in coefficients]
    inputs = [random_pure_state(INPUT_QUBITS, rng) for _ in targets]
    adjacency = build_adjacency_by_fidelity(targets, threshold, weight)
    dataset = GraphDataset.from_states(inputs, targets, adjacency, name=name)
    logger.debug("built %s dataset: %d vertices, %d edges", name, len(targets), dataset.num_edges)
    return dataset


def dataset_connected_clusters(
    rng: np.random.Generator, *, threshold: float = CLUSTERS_THRESHOLD, weight: float = 1.0
) -> GraphDataset:
    """Two clusters (v_1..v_4 and v_5..v_7) bridged by v_8; random 3-qubit inputs."""
    return _printed_dataset("clusters", CLUSTERS_TARGET_COEFFICIENTS, rng, threshold, weight)


def dataset_line(
    rng: np.random.Generator, *, threshold: float = LINE_THRESHOLD, weight: float = 1.0
) -> GraphDataset:
    """Ten targets from |0> to |1> forming a path; random 3-qubit inputs."""
    return _printed_dataset("line", LINE_TARGET_COEFFICIENTS, rng, threshold, weight)


def dataset_random(
    rng: np.random.Generator,
    *,
    num_vertices: int,
    input_qubits: int,
    output_qubits: int,
    edge_probability: float = 0.5,
) -> GraphDataset:
    """Random pure inputs and targets with Bernoulli edges of weight 1."""
    inputs = [random_pure_state(input_qubits, rng) for _ in range(num_vertices)]
    targets = [random_pure_state(output_qubits, rng) for _ in range(num_vertices)]
    upper = np.triu(rng.random((num_vertices, num_vertices)) < edge_probability, k=1)
    adjacency = (upper | upper.T).astype(np.float64)
    return GraphDataset.from_states(inputs, targets, adjacency, name="random")


def select_supervised(n_total: int, s: int, rng: np.random.Generator) -> SupervisionMask:
    """Uniformly random size-``s`` subset of the vertices."""
    if not 0 <= s <= n_total:
        raise DatasetError(f"cannot supervise {s} of {n_total} vertices")
    chosen = rng.choice(n_total, size=s, replace=False) if s else []
    return SupervisionMask.from_supervised(chosen, n_total)


# =============================================================================
# Registry
# =============================================================================

# Builtin datasets - maps short names to builders and their defaults
DATASET_REGISTRY: dict[str, dict[str, Any]] = {
    "clusters": {
        "name": "Connected clusters",
        "num_vertices": len(CLUSTERS_TARGET_COEFFICIENTS),
        "builder": dataset_connected_clusters,
        "threshold": CLUSTERS_THRESHOLD,
    },
    "line": {
        "name": "Line graph",
        "num_vertices": len(LINE_TARGET_COEFFICIENTS),
        "builder": dataset_line,
        "threshold": LINE_THRESHOLD,
    },
}


def list_datasets() -> list[str]:
    """List builtin dataset names."""
    return list(DATASET_REGISTRY.keys())


def get_dataset_config(name: str) -> dict[str, Any]:
    """Registry entry for a builtin dataset, or ConfigError naming the options."""
    config = DATASET_REGISTRY.get(name)
    if config is None:
        raise ConfigError(
            f"unknown builtin dataset {name!r}; valid options: {', '.join(list_datasets())}"
        )
    return config


def get_dataset_builder(name: str, threshold: float | None = None) -> DatasetBuilder:
    """Picklable builder for a builtin dataset, optionally with another threshold."""
    builder = get_dataset_config(name)["builder"]
    if threshold is None:
        return builder
    return partial(builder, threshold=threshold)
