"""
Loss functions on network outputs.

All losses take the list of current network outputs (one DensityMatrix per
vertex, in vertex order), so a single feedforward pass per vertex serves every
loss and every update matrix of a training step.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from qnn_graphlearn.errors import DimensionMismatchError, TrainingSignalError
from qnn_graphlearn.graph_data import GraphDataset, SupervisionMask
from qnn_graphlearn.linalg import DensityMatrix, PureState, fidelity_pure, hs_distance


@dataclass(frozen=True)
class LossRecord:
    """Losses of one network state.

    ``l_sv`` is None without supervised vertices, ``l_usv`` is None when every
    vertex is supervised. ``l_all`` is the mean fidelity over all vertices.
    """

    step_index: int
    l_sv: float | None
    l_graph: float
    l_combined: float
    l_usv: float | None
    l_all: float


def _mean_fidelity(
    outputs: Sequence[DensityMatrix], targets: Sequence[PureState], vertices: Sequence[int]
) -> float:
    return float(np.mean([fidelity_pure(targets[v], outputs[v]) for v in vertices]))


def loss_supervised(
    outputs: Sequence[DensityMatrix], targets: Sequence[PureState], mask: SupervisionMask
) -> float:
    """Mean fidelity of the supervised outputs with their targets."""
    if mask.num_supervised == 0:
        raise TrainingSignalError("supervised loss is undefined without supervised vertices")
    return _mean_fidelity(outputs, targets, mask.supervised)


def loss_testing(
    outputs: Sequence[DensityMatrix], targets: Sequence[PureState], mask: SupervisionMask
) -> float:
    """Mean fidelity over the unsupervised vertices."""
    if not mask.unsupervised:
        raise TrainingSignalError("testing loss is undefined when every vertex is supervised")
    return _mean_fidelity(outputs, targets, mask.unsupervised)


def loss_training_all(outputs: Sequence[DensityMatrix], targets: Sequence[PureState]) -> float:
    """Mean fidelity over every vertex, supervised or not."""
    return _mean_fidelity(outputs, targets, range(len(targets)))


def loss_graph(outputs: Sequence[DensityMatrix], adjacency: npt.ArrayLike) -> float:
    """sum over ordered pairs (v, w) of A[v, w] * d_HS(rho_v, rho_w)."""
    weights = np.asarray(adjacency, dtype=np.float64)
    if weights.shape != (len(outputs), len(outputs)):
        raise DimensionMismatchError(
            f"adjacency of shape {weights.shape} does not match {len(outputs)} outputs"
        )
    total = 0.0
    for v, w in zip(*np.nonzero(weights), strict=True):
        total += weights[v, w] * hs_distance(outputs[v], outputs[w])
    return float(total)


def loss_combined(
    outputs: Sequence[DensityMatrix],
    targets: Sequence[PureState],
    mask: SupervisionMask,
    adjacency: npt.ArrayLike,
    gamma_graph: float,
) -> float:
    """L_SV + gamma * L_G; the supervised part counts as 0 when S = 0."""
    l_sv = loss_supervised(outputs, targets, mask) if mask.num_supervised else 0.0
    if gamma_graph == 0:
        return l_sv
    return l_sv + gamma_graph * loss_graph(outputs, adjacency)


def evaluate_losses(
    outputs: Sequence[DensityMatrix],
    dataset: GraphDataset,
    mask: SupervisionMask,
    gamma_graph: float,
    step_index: int = 0,
) -> LossRecord:
    targets = dataset.targets
    l_sv = loss_supervised(outputs, targets, mask) if mask.num_supervised else None
    l_usv = loss_testing(outputs, targets, mask) if mask.unsupervised else None
    l_graph = loss_graph(outputs, dataset.adjacency)
    l_combined = (l_sv or 0.0) + gamma_graph * l_graph
    return LossRecord(
        step_index=step_index,
        l_sv=l_sv,
        l_graph=l_graph,
        l_combined=l_combined,
        l_usv=l_usv,
        l_all=loss_training_all(outputs, targets),
    )
