"""
Dense complex linear algebra on multi-qubit registers.

Conventions used throughout the package:

- Qubit 0 is the leftmost (slowest-varying) tensor factor.
- Operators are plain ``numpy`` complex arrays; states carry their invariants
  in the small frozen value types below (PureState, DensityMatrix,
  HermitianOperator, PauliCoefficients).
- Every tolerance is a keyword parameter with a module-level default.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import InitVar, dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np
import numpy.typing as npt

from qnn_graphlearn.errors import (
    DimensionMismatchError,
    InvalidStateError,
    NotHermitianError,
    NotUnitaryError,
)

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]

DEFAULT_ATOL = 1e-10
UNITARY_ATOL = 1e-8
PSD_ATOL = 1e-9
RENORMALIZE_ATOL = 1e-12

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI_MATRICES = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


# =============================================================================
# Small helpers
# =============================================================================


def num_qubits_for_dim(dim: int) -> int:
    """Return n with 2**n == dim, or raise DimensionMismatchError."""
    if dim < 1 or dim & (dim - 1):
        raise DimensionMismatchError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def _as_matrix(value: Any) -> ComplexMatrix:
    if isinstance(value, DensityMatrix | HermitianOperator):
        return value.matrix
    if isinstance(value, PureState):
        return value.amplitudes
    return np.asarray(value, dtype=np.complex128)


def _square(value: Any, what: str) -> ComplexMatrix:
    matrix = _as_matrix(value)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"{what} must be a square matrix, got shape {matrix.shape}")
    return matrix


def unitarity_error(u: Any) -> float:
    """max |(U^dagger U - I)_ij|."""
    matrix = _square(u, "unitary")
    gram = matrix.conj().T @ matrix
    return float(np.max(np.abs(gram - np.eye(matrix.shape[0]))))


def is_unitary(u: Any, atol: float = UNITARY_ATOL) -> bool:
    return unitarity_error(u) <= atol


def hermiticity_error(h: Any) -> float:
    matrix = _square(h, "operator")
    return float(np.max(np.abs(matrix - matrix.conj().T)))


# =============================================================================
# Value types
# =============================================================================


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector on ``num_qubits`` qubits.

    Pass ``check=False`` to hold an unnormalized vector (used when a
    malformed dataset has to be reported rather than rejected).
    """

    amplitudes: ComplexMatrix
    check: InitVar[bool] = True
    atol: float = field(default=DEFAULT_ATOL, repr=False)

    def __post_init__(self, check: bool) -> None:
        amplitudes = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        num_qubits_for_dim(amplitudes.shape[0])
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)
        if check and abs(self.norm - 1.0) > self.atol:
            raise InvalidStateError(f"state norm is {self.norm:.12g}, expected 1")

    @classmethod
    def from_coefficients(cls, coefficients: Any) -> PureState:
        """Build a state from printed (possibly rounded) coefficients, renormalizing."""
        vector = np.asarray(coefficients, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise InvalidStateError("cannot normalize the zero vector")
        return cls(vector / norm)

    @classmethod
    def basis(cls, index: int, num_qubits: int) -> PureState:
        vector = np.zeros(2**num_qubits, dtype=np.complex128)
        vector[index] = 1.0
        return cls(vector)

    @property
    def num_qubits(self) -> int:
        return num_qubits_for_dim(self.amplitudes.shape[0])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def projector(self) -> ComplexMatrix:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_density_matrix(self) -> DensityMatrix:
        return DensityMatrix(self.projector())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix on ``num_qubits`` qubits.

    Construction validates the invariants. A trace drift above
    RENORMALIZE_ATOL (but within ``atol``) is divided out; eigenvalues are
    never clipped.
    """

    matrix: ComplexMatrix
    check: InitVar[bool] = True
    atol: float = field(default=DEFAULT_ATOL, repr=False)
    psd_atol: float = field(default=PSD_ATOL, repr=False)

    def __post_init__(self, check: bool) -> None:
        matrix = np.array(self.matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(
                f"density matrix must be square, got shape {matrix.shape}"
            )
        num_qubits_for_dim(matrix.shape[0])
        if check:
            herm_err = hermiticity_error(matrix)
            if herm_err > self.atol:
                raise InvalidStateError(f"density matrix is not Hermitian (error {herm_err:.3e})")
            matrix = 0.5 * (matrix + matrix.conj().T)
            trace = float(np.trace(matrix).real)
            drift = abs(trace - 1.0)
            if drift > self.atol:
                raise InvalidStateError(f"density matrix trace is {trace:.12g}, expected 1")
            if drift > RENORMALIZE_ATOL:
                logger.debug("renormalizing density matrix, trace drift %.3e", drift)
                matrix = matrix / trace
            min_eig = float(np.linalg.eigvalsh(matrix)[0])
            if min_eig < -self.psd_atol:
                raise InvalidStateError(
                    f"density matrix has negative eigenvalue {min_eig:.3e}"
                )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_pure(cls, state: PureState) -> DensityMatrix:
        return cls(state.projector())

    @property
    def num_qubits(self) -> int:
        return num_qubits_for_dim(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    matrix: ComplexMatrix
    check: InitVar[bool] = True
    atol: float = field(default=DEFAULT_ATOL, repr=False)

    def __post_init__(self, check: bool) -> None:
        matrix = np.array(_square(self.matrix, "Hermitian operator"), dtype=np.complex128)
        num_qubits_for_dim(matrix.shape[0])
        if check:
            err = hermiticity_error(matrix)
            if err > self.atol:
                raise NotHermitianError(f"operator is not Hermitian (error {err:.3e})")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def num_qubits(self) -> int:
        return num_qubits_for_dim(self.matrix.shape[0])

    def norm(self) -> float:
        """Spectral norm."""
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))


@dataclass(frozen=True, eq=False)
class PauliCoefficients:
    """Real coefficients over the Pauli words of ``num_qubits`` qubits.

    Words are ordered like ``itertools.product("IXYZ", repeat=n)``, the first
    letter belonging to qubit 0.
    """

    num_qubits: int
    coefficients: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        coefficients = np.array(self.coefficients, dtype=np.float64).reshape(-1)
        if coefficients.shape[0] != 4**self.num_qubits:
            raise DimensionMismatchError(
                f"expected {4**self.num_qubits} coefficients, got {coefficients.shape[0]}"
            )
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    def words(self) -> tuple[str, ...]:
        return pauli_words(self.num_qubits)

    def as_dict(self, atol: float = 0.0) -> dict[str, float]:
        """Word -> coefficient, dropping entries with magnitude <= atol."""
        return {
            word: float(value)
            for word, value in zip(self.words(), self.coefficients, strict=True)
            if abs(value) > atol
        }


# =============================================================================
# States and operators
# =============================================================================


def zero_projector(num_qubits: int) -> ComplexMatrix:
    """|0...0><0...0| on ``num_qubits`` qubits."""
    dim = 2**num_qubits
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    matrix[0, 0] = 1.0
    return matrix


def maximally_mixed(num_qubits: int) -> DensityMatrix:
    dim = 2**num_qubits
    return DensityMatrix(np.eye(dim, dtype=np.complex128) / dim)


def tensor_product(a: Any, b: Any, *more: Any) -> ComplexMatrix:
    """Kronecker product, left operand varying slowest.

    Works for vectors (amplitudes) as well as matrices.
    """
    result = np.kron(_as_matrix(a), _as_matrix(b))
    for extra in more:
        result = np.kron(result, _as_matrix(extra))
    return result


def commutator(a: Any, b: Any) -> ComplexMatrix:
    a_mat, b_mat = _square(a, "commutator operand"), _square(b, "commutator operand")
    if a_mat.shape != b_mat.shape:
        raise DimensionMismatchError(
            f"commutator operands differ in shape: {a_mat.shape} vs {b_mat.shape}"
        )
    return a_mat @ b_mat - b_mat @ a_mat


def _check_qubit_indices(indices: list[int], num_qubits: int, what: str) -> None:
    if len(set(indices)) != len(indices):
        raise DimensionMismatchError(f"duplicate {what} qubit indices: {indices}")
    for q in indices:
        if not 0 <= q < num_qubits:
            raise DimensionMismatchError(
                f"{what} qubit index {q} out of range for {num_qubits} qubits"
            )


def partial_trace_operator(
    matrix: Any, num_qubits: int, keep: list[int] | tuple[int, ...]
) -> ComplexMatrix:
    """Trace out every qubit not in ``keep`` from an arbitrary operator.

    The result acts on the kept qubits in the order they are listed.
    """
    keep = list(keep)
    if not keep:
        raise DimensionMismatchError("partial trace needs at least one kept qubit")
    _check_qubit_indices(keep, num_qubits, "kept")
    op = _square(matrix, "operator")
    if op.shape[0] != 2**num_qubits:
        raise DimensionMismatchError(
            f"operator of dimension {op.shape[0]} does not act on {num_qubits} qubits"
        )

    # einsum labels: row index of qubit q is q, column index is n + q;
    # traced qubits share their row label on the column side.
    kept = set(keep)
    row_labels = list(range(num_qubits))
    col_labels = [num_qubits + q if q in kept else q for q in range(num_qubits)]
    out_labels = keep + [num_qubits + q for q in keep]
    tensor = op.reshape([2] * (2 * num_qubits))
    reduced = np.einsum(tensor, row_labels + col_labels, out_labels)
    dim = 2 ** len(keep)
    return reduced.reshape(dim, dim)


def partial_trace(rho: DensityMatrix, keep: list[int] | tuple[int, ...]) -> DensityMatrix:
    """Reduced state on the ``keep`` qubits (in the listed order)."""
    return DensityMatrix(partial_trace_operator(rho.matrix, rho.num_qubits, keep))


def embed_operator(
    op: Any, total_qubits: int, targets: list[int] | tuple[int, ...]
) -> ComplexMatrix:
    """Act as ``op`` on ``targets`` (in order) and as identity on the other qubits."""
    targets = list(targets)
    matrix = _square(op, "operator")
    if matrix.shape[0] != 2 ** len(targets):
        raise DimensionMismatchError(
            f"operator of dimension {matrix.shape[0]} cannot act on {len(targets)} qubits"
        )
    _check_qubit_indices(targets, total_qubits, "target")
    rest = [q for q in range(total_qubits) if q not in targets]
    full = np.kron(matrix, np.eye(2 ** len(rest), dtype=np.complex128))
    order = targets + rest
    perm = list(np.argsort(order))
    tensor = full.reshape([2] * (2 * total_qubits))
    tensor = tensor.transpose(perm + [total_qubits + p for p in perm])
    dim = 2**total_qubits
    return np.ascontiguousarray(tensor.reshape(dim, dim))


def embed_unitary(
    u: Any,
    total_qubits: int,
    targets: list[int] | tuple[int, ...],
    atol: float = UNITARY_ATOL,
) -> ComplexMatrix:
    """Embed a unitary on ``targets`` into the ``total_qubits`` register."""
    err = unitarity_error(u)
    if err > atol:
        raise NotUnitaryError(f"cannot embed non-unitary matrix (error {err:.3e})")
    return embed_operator(u, total_qubits, targets)


# =============================================================================
# Distances
# =============================================================================


def fidelity_pure(phi: PureState, rho: DensityMatrix) -> float:
    """<phi|rho|phi>, clamped to [0, 1]."""
    if phi.amplitudes.shape[0] != rho.dim:
        raise DimensionMismatchError(
            f"state of dimension {phi.amplitudes.shape[0]} vs density matrix of "
            f"dimension {rho.dim}"
        )
    value = np.vdot(phi.amplitudes, rho.matrix @ phi.amplitudes).real
    return float(np.clip(value, 0.0, 1.0))


def hs_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Hilbert-Schmidt distance tr((rho - sigma)^2)."""
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(
            f"density matrices differ in dimension: {rho.dim} vs {sigma.dim}"
        )
    diff = rho.matrix - sigma.matrix
    # tr(D^2) = sum |D_ij|^2 for Hermitian D
    return float(np.sum(np.abs(diff) ** 2))


# =============================================================================
# Exponentials and sampling
# =============================================================================


def herm_expm_unitary(k: HermitianOperator | Any, epsilon: float) -> ComplexMatrix:
    """exp(i * epsilon * K) via the eigendecomposition of K."""
    if not isinstance(k, HermitianOperator):
        k = HermitianOperator(k)
    eigvals, eigvecs = np.linalg.eigh(k.matrix)
    phases = np.exp(1j * epsilon * eigvals)
    return (eigvecs * phases) @ eigvecs.conj().T


def haar_random_unitary(dim: int, rng: np.random.Generator) -> ComplexMatrix:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    if dim < 1:
        raise DimensionMismatchError(f"unitary dimension must be >= 1, got {dim}")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_pure_state(num_qubits: int, rng: np.random.Generator) -> PureState:
    """Complex-Gaussian amplitudes, normalized."""
    if num_qubits < 1:
        raise DimensionMismatchError(f"num_qubits must be >= 1, got {num_qubits}")
    dim = 2**num_qubits
    vector = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(vector / np.linalg.norm(vector))


# =============================================================================
# Pauli expansion
# =============================================================================


@lru_cache(maxsize=16)
def pauli_words(num_qubits: int) -> tuple[str, ...]:
    return tuple("".join(word) for word in itertools.product("IXYZ", repeat=num_qubits))


@lru_cache(maxsize=512)
def pauli_word_matrix(word: str) -> ComplexMatrix:
    matrix = np.ones((1, 1), dtype=np.complex128)
    for letter in word:
        matrix = np.kron(matrix, PAULI_MATRICES[letter])
    matrix.setflags(write=False)
    return matrix


def pauli_expand(h: HermitianOperator | Any) -> PauliCoefficients:
    """Coefficients tr(h P)/2^n for every Pauli word P."""
    if not isinstance(h, HermitianOperator):
        h = HermitianOperator(h)
    n = h.num_qubits
    dim = 2**n
    # tr(h P) = sum_ij h_ij P_ji
    coefficients = [
        np.sum(h.matrix * pauli_word_matrix(word).T).real / dim for word in pauli_words(n)
    ]
    return PauliCoefficients(n, np.array(coefficients))


def pauli_reconstruct(c: PauliCoefficients) -> HermitianOperator:
    dim = 2**c.num_qubits
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    for word, value in zip(pauli_words(c.num_qubits), c.coefficients, strict=True):
        if value != 0.0:
            matrix += value * pauli_word_matrix(word)
    return HermitianOperator(matrix)
