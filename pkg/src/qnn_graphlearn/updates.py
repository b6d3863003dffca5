"""
Update matrices and the synchronous update step.

Under U^l_j -> exp(i eps K^l_j) U^l_j the first-order change of the losses is

    dL_SV/ds = sum_lj tr(G_SV^lj K^lj),   G_SV = (i/S) sum_u tr_rest M_u
    dL_G/ds  = sum_lj tr(G_G^lj K^lj),    G_G  = 2i sum_{v,w} A_vw tr_rest M_vw

where M = [F, B] is the commutator of the input propagated forward through
every perceptron up to and including (l, j) with the target operator
conjugated backwards through every later perceptron. The update matrix is

    K^l_j = eta * 2^{m_{l-1}} * (G_SV + gamma * G_G)

so dL_SV+G/ds = eta * 2^{m_{l-1}} * ||G_SV + gamma G_G||_F^2 >= 0.

Two interchangeable evaluation paths produce tr_rest M:

- "full": M built on the whole network register (``m_matrix_supervised``,
  ``m_matrix_graph``) and reduced with ``trace_rest``. Exponential in the
  total qubit count; kept as the reference.
- "reduced": only layers l-1 and l are ever materialised. The forward part is
  the stored layer state rho^{l-1}; the backward part is the target pulled
  back through the adjoint layer channels of layers > l.

Since M_wv == M_vw, the graph sum runs over unordered pairs with weight
A_vw + A_wv.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from qnn_graphlearn.errors import ConfigError, DatasetError, TrainingSignalError
from qnn_graphlearn.graph_data import GraphDataset, SupervisionMask
from qnn_graphlearn.linalg import (
    ComplexMatrix,
    DensityMatrix,
    HermitianOperator,
    PureState,
    commutator,
    herm_expm_unitary,
    partial_trace_operator,
    zero_projector,
)
from qnn_graphlearn.losses import LossRecord, evaluate_losses
from qnn_graphlearn.network import (
    ForwardTrace,
    NetworkState,
    NetworkTopology,
    PerceptronIndex,
    adjoint_apply_layer_unitary,
    compose_unitaries,
    feedforward,
    full_space_unitaries,
)

if TYPE_CHECKING:
    from qnn_graphlearn.training import Hyperparams

logger = logging.getLogger(__name__)

M_METHODS = ("reduced", "full")


def forward_traces(network: NetworkState, dataset: GraphDataset) -> tuple[ForwardTrace, ...]:
    """Feedforward every vertex input through the network."""
    if dataset.input_qubits != network.topology.input_width:
        raise DatasetError(
            f"dataset inputs have {dataset.input_qubits} qubits, network expects "
            f"{network.topology.input_width}"
        )
    if dataset.output_qubits != network.topology.output_width:
        raise DatasetError(
            f"dataset targets have {dataset.output_qubits} qubits, network outputs "
            f"{network.topology.output_width}"
        )
    return tuple(feedforward(network, rho) for rho in dataset.inputs)


# =============================================================================
# Full-space path
# =============================================================================


def _full_space_commutator(
    network: NetworkState, x_in: ComplexMatrix, y_out: ComplexMatrix, layer: int, j: int
) -> ComplexMatrix:
    topo = network.topology
    topo.check_index(layer, j)
    n = topo.total_qubits
    dim = 2**n
    unitaries = full_space_unitaries(network)
    split = [idx for idx, _ in unitaries].index((layer, j)) + 1
    before = compose_unitaries([u for _, u in unitaries[:split]], dim)
    after = compose_unitaries([u for _, u in unitaries[split:]], dim)

    x_tilde = np.kron(x_in, zero_projector(n - topo.input_width))
    forward = before @ x_tilde @ before.conj().T
    y_lifted = np.kron(np.eye(2 ** (n - topo.output_width), dtype=np.complex128), y_out)
    backward = after.conj().T @ y_lifted @ after
    return commutator(forward, backward)


def m_matrix_supervised(
    network: NetworkState, rho_in: DensityMatrix, target: PureState, layer: int, j: int
) -> ComplexMatrix:
    """M for one supervised pair on the full network register."""
    return _full_space_commutator(network, rho_in.matrix, target.projector(), layer, j)


def m_matrix_graph(
    network: NetworkState,
    rho_in_v: DensityMatrix,
    rho_in_w: DensityMatrix,
    rho_out_v: DensityMatrix,
    rho_out_w: DensityMatrix,
    layer: int,
    j: int,
) -> ComplexMatrix:
    """M for the vertex pair (v, w) on the full network register.

    ``rho_out_v``/``rho_out_w`` are the current network outputs of v and w.
    """
    return _full_space_commutator(
        network,
        rho_in_v.matrix - rho_in_w.matrix,
        rho_out_v.matrix - rho_out_w.matrix,
        layer,
        j,
    )


def trace_rest(m: ComplexMatrix, topology: NetworkTopology, layer: int, j: int) -> ComplexMatrix:
    """Keep layer l-1 and output qubit j of layer l (in that order)."""
    topology.check_index(layer, j)
    return partial_trace_operator(m, topology.total_qubits, topology.global_targets(layer, j))


# =============================================================================
# Reduced two-layer path
# =============================================================================


def backward_operators(network: NetworkState, y_out: ComplexMatrix) -> dict[int, ComplexMatrix]:
    """sigma^l for l = L+1 .. 1: ``y_out`` pulled back to the qubits of layer l."""
    widths = network.topology.widths
    last = network.topology.num_layers
    sigmas = {last: np.asarray(y_out, dtype=np.complex128)}
    for layer in range(last, 1, -1):
        sigmas[layer - 1] = adjoint_apply_layer_unitary(
            sigmas[layer], network.layer_unitary(layer), widths[layer - 1], widths[layer]
        )
    return sigmas


def reduced_traced_commutator(
    network: NetworkState,
    x_prev: ComplexMatrix,
    sigma: ComplexMatrix,
    layer: int,
    j: int,
) -> ComplexMatrix:
    """tr_rest M evaluated on the two-layer space of ``layer``.

    Args:
        network: Frozen network
        x_prev: Forward operator on layer l-1 (a layer state or a difference)
        sigma: Backward operator on layer l (see ``backward_operators``)
        layer: Perceptron layer l
        j: Perceptron index within the layer
    """
    topo = network.topology
    topo.check_index(layer, j)
    forward = _two_layer_forward(network, x_prev, layer, j)
    backward = _two_layer_backward(network, sigma, layer, j)
    n = topo.widths[layer - 1] + topo.widths[layer]
    return partial_trace_operator(
        forward @ backward - backward @ forward, n, topo.local_targets(layer, j)
    )


def _two_layer_forward(
    network: NetworkState, x_prev: ComplexMatrix, layer: int, j: int
) -> ComplexMatrix:
    embedded = network.embedded_perceptrons(layer)
    dim = embedded[0].shape[0]
    before = compose_unitaries(embedded[: j + 1], dim)
    extended = np.kron(x_prev, zero_projector(network.topology.widths[layer]))
    return before @ extended @ before.conj().T


def _two_layer_backward(
    network: NetworkState, sigma: ComplexMatrix, layer: int, j: int
) -> ComplexMatrix:
    embedded = network.embedded_perceptrons(layer)
    dim = embedded[0].shape[0]
    after = compose_unitaries(embedded[j + 1 :], dim)
    prev_dim = 2 ** network.topology.widths[layer - 1]
    lifted = np.kron(np.eye(prev_dim, dtype=np.complex128), sigma)
    return after.conj().T @ lifted @ after


# =============================================================================
# Gradient operators
# =============================================================================


def _hermitian_part(matrix: ComplexMatrix) -> ComplexMatrix:
    return 0.5 * (matrix + matrix.conj().T)


class LossGradient:
    """Gradient operators G_SV and G_G of a frozen network.

    Forward states, backward operators and per-layer forward operators are
    computed once and shared by every (l, j).
    """

    def __init__(
        self,
        network: NetworkState,
        dataset: GraphDataset,
        mask: SupervisionMask,
        traces: Sequence[ForwardTrace] | None = None,
        method: str = "reduced",
    ) -> None:
        if method not in M_METHODS:
            raise ConfigError(f"unknown M-matrix method {method!r}, expected one of {M_METHODS}")
        if mask.num_vertices != dataset.num_vertices:
            raise DatasetError(
                f"mask covers {mask.num_vertices} vertices, dataset has {dataset.num_vertices}"
            )
        self.network = network
        self.dataset = dataset
        self.mask = mask
        self.method = method
        self.traces = tuple(traces) if traces is not None else forward_traces(network, dataset)

    @cached_property
    def pair_weights(self) -> list[tuple[tuple[int, int], float]]:
        """Unordered pairs v < w with their symmetrised weight A_vw + A_wv."""
        a = self.dataset.adjacency
        n = self.dataset.num_vertices
        pairs = []
        for v in range(n):
            for w in range(v + 1, n):
                weight = float(a[v, w] + a[w, v])
                if weight != 0.0:
                    pairs.append(((v, w), weight))
        return pairs

    @cached_property
    def _supervised_sigmas(self) -> dict[int, dict[int, ComplexMatrix]]:
        return {
            u: backward_operators(self.network, self.dataset.targets[u].projector())
            for u in self.mask.supervised
        }

    @cached_property
    def _pair_sigmas(self) -> dict[tuple[int, int], dict[int, ComplexMatrix]]:
        outputs = [trace.output.matrix for trace in self.traces]
        return {
            (v, w): backward_operators(self.network, outputs[v] - outputs[w])
            for (v, w), _ in self.pair_weights
        }

    def traced_m_supervised(self, u: int, layer: int, j: int) -> ComplexMatrix:
        """tr_rest M for supervised vertex ``u``."""
        if self.method == "full":
            m = m_matrix_supervised(
                self.network, self.dataset.inputs[u], self.dataset.targets[u], layer, j
            )
            return trace_rest(m, self.network.topology, layer, j)
        x_prev = self.traces[u].layer(layer - 1).matrix
        sigma = self._supervised_sigmas[u][layer]
        return reduced_traced_commutator(self.network, x_prev, sigma, layer, j)

    def traced_m_graph(self, v: int, w: int, layer: int, j: int) -> ComplexMatrix:
        """tr_rest M for the vertex pair (v, w)."""
        if self.method == "full":
            m = m_matrix_graph(
                self.network,
                self.dataset.inputs[v],
                self.dataset.inputs[w],
                self.traces[v].output,
                self.traces[w].output,
                layer,
                j,
            )
            return trace_rest(m, self.network.topology, layer, j)
        x_prev = self.traces[v].layer(layer - 1).matrix - self.traces[w].layer(layer - 1).matrix
        key = (v, w) if v < w else (w, v)
        if key in self._pair_sigmas:
            sigma = self._pair_sigmas[key][layer]
            if v > w:
                sigma = -sigma
        else:
            outputs = (self.traces[v].output.matrix, self.traces[w].output.matrix)
            sigma = backward_operators(self.network, outputs[0] - outputs[1])[layer]
        return reduced_traced_commutator(self.network, x_prev, sigma, layer, j)

    def supervised(self, layer: int, j: int) -> ComplexMatrix:
        """G_SV^{lj} = (i/S) sum_u tr_rest M_u (Hermitian)."""
        if self.mask.num_supervised == 0:
            raise TrainingSignalError("no supervised vertices")
        total = sum(self.traced_m_supervised(u, layer, j) for u in self.mask.supervised)
        return _hermitian_part((1j / self.mask.num_supervised) * total)

    def graph(self, layer: int, j: int) -> ComplexMatrix:
        """G_G^{lj} = 2i sum_{v,w} A_vw tr_rest M_vw (Hermitian)."""
        dim = 2 ** self.network.topology.perceptron_qubits(layer)
        total = np.zeros((dim, dim), dtype=np.complex128)
        for (v, w), weight in self.pair_weights:
            total += weight * self.traced_m_graph(v, w, layer, j)
        return _hermitian_part(2j * total)


def loss_gradient_operator(
    gradient: LossGradient, gamma_graph: float, layer: int, j: int
) -> HermitianOperator:
    """G^{lj} with dL_SV+G/ds = sum_lj tr(G^{lj} K^{lj}).

    The supervised term is dropped when S = 0, the graph term when gamma = 0.
    """
    has_supervised = gradient.mask.num_supervised > 0
    if not has_supervised and gamma_graph == 0:
        raise TrainingSignalError("S = 0 and gamma_graph = 0: no training signal")
    total = gradient.supervised(layer, j) if has_supervised else None
    if gamma_graph != 0:
        graph_term = gamma_graph * gradient.graph(layer, j)
        total = graph_term if total is None else total + graph_term
    return HermitianOperator(total)


def k_scale(topology: NetworkTopology, layer: int, eta: float) -> float:
    """eta * 2^{m_{l-1}}."""
    return eta * 2.0 ** topology.widths[layer - 1]


def k_matrix(
    network: NetworkState,
    dataset: GraphDataset,
    mask: SupervisionMask,
    traces: Sequence[ForwardTrace] | None,
    hyper: Hyperparams,
    layer: int,
    j: int,
) -> HermitianOperator:
    """Update matrix K^l_j on the m_{l-1}+1 qubits of perceptron (l, j)."""
    gradient = LossGradient(network, dataset, mask, traces, method=hyper.m_method)
    return _k_from_gradient(gradient, hyper, layer, j)


def _k_from_gradient(
    gradient: LossGradient, hyper: Hyperparams, layer: int, j: int
) -> HermitianOperator:
    g = loss_gradient_operator(gradient, hyper.gamma_graph, layer, j)
    return HermitianOperator(k_scale(gradient.network.topology, layer, hyper.eta) * g.matrix)


def k_matrices(
    network: NetworkState,
    dataset: GraphDataset,
    mask: SupervisionMask,
    hyper: Hyperparams,
    traces: Sequence[ForwardTrace] | None = None,
    order: Sequence[PerceptronIndex] | None = None,
) -> dict[PerceptronIndex, HermitianOperator]:
    """Every K^l_j of the frozen network, returned in (l, j) order.

    ``order`` only changes the evaluation order; every K reads the same
    pre-update network.
    """
    indices = network.topology.perceptron_indices()
    if order is not None and sorted(order) != sorted(indices):
        raise ConfigError("order must be a permutation of the network's perceptron indices")
    gradient = LossGradient(network, dataset, mask, traces, method=hyper.m_method)
    computed = {idx: _k_from_gradient(gradient, hyper, *idx) for idx in (order or indices)}
    return {idx: computed[idx] for idx in indices}


def apply_update(
    network: NetworkState, ks: dict[PerceptronIndex, HermitianOperator], epsilon: float
) -> NetworkState:
    """U -> exp(i eps K) U for every perceptron at once."""
    return network.with_perceptrons(
        {idx: herm_expm_unitary(k, epsilon) @ network.perceptron(*idx) for idx, k in ks.items()}
    )


def update_step(
    network: NetworkState,
    dataset: GraphDataset,
    mask: SupervisionMask,
    hyper: Hyperparams,
    *,
    step_index: int = 0,
    order: Sequence[PerceptronIndex] | None = None,
) -> tuple[NetworkState, LossRecord]:
    """One synchronous update; the LossRecord holds the pre-update losses."""
    traces = forward_traces(network, dataset)
    record = evaluate_losses(
        [trace.output for trace in traces], dataset, mask, hyper.gamma_graph, step_index
    )
    ks = k_matrices(network, dataset, mask, hyper, traces=traces, order=order)
    return apply_update(network, ks, hyper.epsilon), record
