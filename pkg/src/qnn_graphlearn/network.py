"""
Dissipative quantum neural network: topology, perceptron unitaries and the
layer-to-layer channels.

Layer l (1 <= l <= L+1) holds ``widths[l]`` perceptrons. Perceptron (l, j)
acts on every qubit of layer l-1 plus output qubit j of layer l, with the
output qubit as its last tensor factor. Within a layer the perceptrons are
applied in index order, so the layer unitary is U^l = U^l_{m} ... U^l_1.

Production code only ever works on the (m_{l-1} + m_l)-qubit two-layer space.
``global_output`` and ``full_space_unitaries`` build the same network on the
whole register and exist as an oracle for tests and for the full-space update
path.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from qnn_graphlearn.errors import (
    ConfigError,
    DimensionMismatchError,
    NotUnitaryError,
    PerceptronIndexError,
)
from qnn_graphlearn.linalg import (
    UNITARY_ATOL,
    ComplexMatrix,
    DensityMatrix,
    embed_operator,
    haar_random_unitary,
    num_qubits_for_dim,
    partial_trace_operator,
    unitarity_error,
    zero_projector,
)

PerceptronIndex = tuple[int, int]


@dataclass(frozen=True)
class NetworkTopology:
    """Qubit widths per layer: [m_in, m_1, ..., m_L, m_out]."""

    widths: tuple[int, ...]

    def __post_init__(self) -> None:
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2:
            raise ConfigError(f"topology needs an input and an output layer, got {list(widths)}")
        if any(w < 1 for w in widths):
            raise ConfigError(f"every layer needs at least one qubit, got {list(widths)}")
        object.__setattr__(self, "widths", widths)

    @property
    def num_layers(self) -> int:
        """Number of perceptron layers (hidden layers + output layer)."""
        return len(self.widths) - 1

    @property
    def input_width(self) -> int:
        return self.widths[0]

    @property
    def output_width(self) -> int:
        return self.widths[-1]

    @property
    def total_qubits(self) -> int:
        return sum(self.widths)

    def layer_offset(self, layer: int) -> int:
        """Index of the first qubit of ``layer`` in the full network register."""
        return sum(self.widths[:layer])

    def check_index(self, layer: int, j: int) -> None:
        if not 1 <= layer <= self.num_layers:
            raise PerceptronIndexError(
                f"layer {layer} out of range 1..{self.num_layers} for widths {list(self.widths)}"
            )
        if not 0 <= j < self.widths[layer]:
            raise PerceptronIndexError(
                f"perceptron {j} out of range 0..{self.widths[layer] - 1} in layer {layer}"
            )

    def perceptron_indices(self) -> list[PerceptronIndex]:
        """All (layer, j) in application order."""
        return [
            (layer, j) for layer in range(1, self.num_layers + 1) for j in range(self.widths[layer])
        ]

    def perceptron_qubits(self, layer: int) -> int:
        """Qubits a perceptron of ``layer`` acts on: m_{l-1} + 1."""
        return self.widths[layer - 1] + 1

    def local_targets(self, layer: int, j: int) -> list[int]:
        """Perceptron (layer, j) qubits inside the two-layer space."""
        prev = self.widths[layer - 1]
        return list(range(prev)) + [prev + j]

    def global_targets(self, layer: int, j: int) -> list[int]:
        """Perceptron (layer, j) qubits inside the full network register."""
        start = self.layer_offset(layer - 1)
        return list(range(start, start + self.widths[layer - 1])) + [self.layer_offset(layer) + j]

    def output_qubits(self) -> list[int]:
        start = self.layer_offset(self.num_layers)
        return list(range(start, start + self.output_width))


@dataclass(frozen=True, eq=False)
class NetworkState:
    """Topology plus the perceptron unitaries, ``perceptrons[l - 1][j]``."""

    topology: NetworkTopology
    perceptrons: tuple[tuple[ComplexMatrix, ...], ...]

    def __post_init__(self) -> None:
        topo = self.topology
        if len(self.perceptrons) != topo.num_layers:
            raise DimensionMismatchError(
                f"expected {topo.num_layers} perceptron layers, got {len(self.perceptrons)}"
            )
        frozen_layers = []
        for layer, unitaries in enumerate(self.perceptrons, start=1):
            if len(unitaries) != topo.widths[layer]:
                raise DimensionMismatchError(
                    f"layer {layer} needs {topo.widths[layer]} perceptrons, got {len(unitaries)}"
                )
            dim = 2 ** topo.perceptron_qubits(layer)
            frozen = []
            for j, u in enumerate(unitaries):
                matrix = np.array(u, dtype=np.complex128)
                if matrix.shape != (dim, dim):
                    raise DimensionMismatchError(
                        f"perceptron ({layer}, {j}) has shape {matrix.shape}, expected {(dim, dim)}"
                    )
                err = unitarity_error(matrix)
                if err > UNITARY_ATOL:
                    raise NotUnitaryError(f"perceptron ({layer}, {j}) unitarity error {err:.3e}")
                matrix.setflags(write=False)
                frozen.append(matrix)
            frozen_layers.append(tuple(frozen))
        object.__setattr__(self, "perceptrons", tuple(frozen_layers))

    def perceptron(self, layer: int, j: int) -> ComplexMatrix:
        self.topology.check_index(layer, j)
        return self.perceptrons[layer - 1][j]

    def items(self) -> Iterator[tuple[PerceptronIndex, ComplexMatrix]]:
        for layer, j in self.topology.perceptron_indices():
            yield (layer, j), self.perceptrons[layer - 1][j]

    def with_perceptrons(self, updated: dict[PerceptronIndex, ComplexMatrix]) -> NetworkState:
        """New state with the given perceptrons replaced."""
        layers = [list(unitaries) for unitaries in self.perceptrons]
        for (layer, j), u in updated.items():
            self.topology.check_index(layer, j)
            layers[layer - 1][j] = u
        return NetworkState(self.topology, tuple(tuple(us) for us in layers))

    def max_unitarity_error(self) -> float:
        return max(unitarity_error(u) for _, u in self.items())

    @cached_property
    def _embedded(self) -> tuple[tuple[ComplexMatrix, ...], ...]:
        layers = []
        for layer, unitaries in enumerate(self.perceptrons, start=1):
            n = self.topology.widths[layer - 1] + self.topology.widths[layer]
            layers.append(
                tuple(
                    embed_operator(u, n, self.topology.local_targets(layer, j))
                    for j, u in enumerate(unitaries)
                )
            )
        return tuple(layers)

    @cached_property
    def _layer_unitaries(self) -> tuple[ComplexMatrix, ...]:
        return tuple(
            compose_unitaries(embedded, embedded[0].shape[0]) for embedded in self._embedded
        )

    def embedded_perceptrons(self, layer: int) -> tuple[ComplexMatrix, ...]:
        """Perceptrons of ``layer`` embedded in the two-layer space, application order."""
        self.topology.check_index(layer, 0)
        return self._embedded[layer - 1]

    def layer_unitary(self, layer: int) -> ComplexMatrix:
        """U^l on the two-layer space."""
        self.topology.check_index(layer, 0)
        return self._layer_unitaries[layer - 1]


@dataclass(frozen=True)
class ForwardTrace:
    """States rho^0 (input) ... rho^{L+1} (output) of one feedforward pass."""

    states: tuple[DensityMatrix, ...]

    @property
    def input(self) -> DensityMatrix:
        return self.states[0]

    @property
    def output(self) -> DensityMatrix:
        return self.states[-1]

    def layer(self, layer: int) -> DensityMatrix:
        return self.states[layer]

    def __len__(self) -> int:
        return len(self.states)


def compose_unitaries(embedded: Sequence[ComplexMatrix], dim: int) -> ComplexMatrix:
    """E_m ... E_1 for embedded perceptrons listed in application order."""
    result = np.eye(dim, dtype=np.complex128)
    for e in embedded:
        result = e @ result
    return result


def init_network(topology: NetworkTopology, rng: np.random.Generator) -> NetworkState:
    """Haar-random perceptrons, drawn in application order."""
    layers = []
    for layer in range(1, topology.num_layers + 1):
        dim = 2 ** topology.perceptron_qubits(layer)
        layers.append(tuple(haar_random_unitary(dim, rng) for _ in range(topology.widths[layer])))
    return NetworkState(topology, tuple(layers))


def apply_layer_unitary(
    x: ComplexMatrix, layer_unitary: ComplexMatrix, prev_qubits: int, out_qubits: int
) -> ComplexMatrix:
    """tr_{l-1}(U (X (x) |0..0><0..0|) U^dagger) for any operator X on layer l-1.

    Linear in X, so it also propagates differences of states.
    """
    extended = np.kron(x, zero_projector(out_qubits))
    evolved = layer_unitary @ extended @ layer_unitary.conj().T
    keep = list(range(prev_qubits, prev_qubits + out_qubits))
    return partial_trace_operator(evolved, prev_qubits + out_qubits, keep)


def adjoint_apply_layer_unitary(
    y: ComplexMatrix, layer_unitary: ComplexMatrix, prev_qubits: int, out_qubits: int
) -> ComplexMatrix:
    """<0..0|_l U^dagger (I (x) Y) U |0..0>_l, the dual of ``apply_layer_unitary``."""
    d_prev, d_out = 2**prev_qubits, 2**out_qubits
    lifted = np.kron(np.eye(d_prev, dtype=np.complex128), y)
    conjugated = layer_unitary.conj().T @ lifted @ layer_unitary
    return conjugated.reshape(d_prev, d_out, d_prev, d_out)[:, 0, :, 0]


def _layer_shape(layer: Sequence[Any]) -> tuple[int, int]:
    if not layer:
        raise DimensionMismatchError("a layer needs at least one perceptron")
    dims = {np.asarray(u).shape[0] for u in layer}
    if len(dims) != 1:
        raise DimensionMismatchError(f"perceptrons of one layer differ in dimension: {dims}")
    prev_qubits = num_qubits_for_dim(dims.pop()) - 1
    return prev_qubits, len(layer)


def _layer_unitary_from_perceptrons(layer: Sequence[Any]) -> ComplexMatrix:
    prev_qubits, out_qubits = _layer_shape(layer)
    n = prev_qubits + out_qubits
    embedded = [
        embed_operator(u, n, list(range(prev_qubits)) + [prev_qubits + j])
        for j, u in enumerate(layer)
    ]
    return compose_unitaries(embedded, 2**n)


def layer_channel(state_prev: DensityMatrix, layer: Sequence[ComplexMatrix]) -> DensityMatrix:
    """Apply one layer channel E^l to a state of layer l-1.

    Args:
        state_prev: State of the m_{l-1} qubits of layer l-1
        layer: Perceptrons U^l_1 ... U^l_{m_l}, each on m_{l-1}+1 qubits

    Returns:
        The state of the m_l qubits of layer l

    Raises:
        DimensionMismatchError: If the state does not fit the perceptrons
    """
    prev_qubits, out_qubits = _layer_shape(layer)
    if state_prev.num_qubits != prev_qubits:
        raise DimensionMismatchError(
            f"layer expects {prev_qubits} input qubits, state has {state_prev.num_qubits}"
        )
    unitary = _layer_unitary_from_perceptrons(layer)
    return DensityMatrix(apply_layer_unitary(state_prev.matrix, unitary, prev_qubits, out_qubits))


def adjoint_layer_channel(y: Any, layer: Sequence[ComplexMatrix]) -> ComplexMatrix:
    """Heisenberg-picture dual E^{l*}: tr(E(X) Y) == tr(X E*(Y))."""
    prev_qubits, out_qubits = _layer_shape(layer)
    y_mat = np.asarray(getattr(y, "matrix", y), dtype=np.complex128)
    if y_mat.shape != (2**out_qubits, 2**out_qubits):
        raise DimensionMismatchError(
            f"operator of shape {y_mat.shape} does not act on the {out_qubits} layer qubits"
        )
    unitary = _layer_unitary_from_perceptrons(layer)
    return adjoint_apply_layer_unitary(y_mat, unitary, prev_qubits, out_qubits)


def feedforward(network: NetworkState, rho_in: DensityMatrix) -> ForwardTrace:
    """Propagate ``rho_in`` layer by layer, keeping every intermediate state."""
    widths = network.topology.widths
    if rho_in.num_qubits != widths[0]:
        raise DimensionMismatchError(
            f"network expects {widths[0]} input qubits, got a {rho_in.num_qubits}-qubit state"
        )
    states = [rho_in]
    for layer in range(1, network.topology.num_layers + 1):
        matrix = apply_layer_unitary(
            states[-1].matrix, network.layer_unitary(layer), widths[layer - 1], widths[layer]
        )
        states.append(DensityMatrix(matrix))
    return ForwardTrace(tuple(states))


def network_output(network: NetworkState, rho_in: DensityMatrix) -> DensityMatrix:
    return feedforward(network, rho_in).output


# =============================================================================
# Full-space oracle
# =============================================================================


def full_space_unitaries(network: NetworkState) -> list[tuple[PerceptronIndex, ComplexMatrix]]:
    """Every perceptron embedded in the full register, application order."""
    topo = network.topology
    n = topo.total_qubits
    return [
        ((layer, j), embed_operator(u, n, topo.global_targets(layer, j)))
        for (layer, j), u in network.items()
    ]


def global_output(network: NetworkState, rho_in: DensityMatrix) -> DensityMatrix:
    """Network output from one unitary on the full in+hidden+out register."""
    topo = network.topology
    if rho_in.num_qubits != topo.input_width:
        raise DimensionMismatchError(
            f"network expects {topo.input_width} input qubits, got {rho_in.num_qubits}"
        )
    rho_tilde = np.kron(rho_in.matrix, zero_projector(topo.total_qubits - topo.input_width))
    total = compose_unitaries(
        [u for _, u in full_space_unitaries(network)], 2**topo.total_qubits
    )
    evolved = total @ rho_tilde @ total.conj().T
    return DensityMatrix(
        partial_trace_operator(evolved, topo.total_qubits, topo.output_qubits())
    )
