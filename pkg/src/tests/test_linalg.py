"""
Tests for qnn_graphlearn.linalg.

1. Kronecker products follow the qubit-0-leftmost convention
2. Partial traces keep the listed qubits in order and compose
3. Embedding acts as the operator on the targets and identity elsewhere
4. Fidelity and Hilbert-Schmidt distance on textbook states
5. Hermitian exponentials are exactly unitary
6. Haar unitaries and random states are seeded and unbiased
7. Pauli expansion round-trips
"""

import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qnn_graphlearn.errors import (
    DimensionMismatchError,
    InvalidStateError,
    NotHermitianError,
    NotUnitaryError,
)
from qnn_graphlearn.linalg import (
    DensityMatrix,
    HermitianOperator,
    PureState,
    commutator,
    embed_operator,
    embed_unitary,
    fidelity_pure,
    haar_random_unitary,
    herm_expm_unitary,
    hs_distance,
    is_unitary,
    maximally_mixed,
    partial_trace,
    pauli_expand,
    pauli_reconstruct,
    random_pure_state,
    tensor_product,
    unitarity_error,
)

SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)


def random_density(num_qubits: int, gen: np.random.Generator) -> DensityMatrix:
    dim = 2**num_qubits
    g = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


class TestTensorProduct:
    def test_zero_kets(self) -> None:
        ket0 = np.array([1, 0])
        assert_allclose(tensor_product(ket0, ket0), [1, 0, 0, 0])

    def test_sigma_x_sigma_z(self, paulis) -> None:
        expected = np.array(
            [[0, 0, 1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=np.complex128
        )
        assert_allclose(tensor_product(paulis["X"], paulis["Z"]), expected)

    def test_identities_of_different_size(self) -> None:
        assert_allclose(tensor_product(np.eye(2), np.eye(3)), np.eye(6))

    def test_three_factors(self, paulis) -> None:
        result = tensor_product(paulis["X"], paulis["Y"], paulis["Z"])
        assert_allclose(result, np.kron(np.kron(paulis["X"], paulis["Y"]), paulis["Z"]))


class TestPartialTrace:
    def test_product_state_factorizes(self, rng) -> None:
        rho_a = random_density(1, rng)
        rho_b = random_density(2, rng)
        joint = DensityMatrix(np.kron(rho_a.matrix, rho_b.matrix))
        assert_allclose(partial_trace(joint, [0]).matrix, rho_a.matrix, atol=1e-12)
        assert_allclose(partial_trace(joint, [1, 2]).matrix, rho_b.matrix, atol=1e-12)

    def test_kept_order_is_respected(self, rng) -> None:
        rho_a = random_density(1, rng)
        rho_b = random_density(1, rng)
        joint = DensityMatrix(np.kron(rho_a.matrix, rho_b.matrix))
        swapped = partial_trace(joint, [1, 0]).matrix
        assert_allclose(swapped, np.kron(rho_b.matrix, rho_a.matrix), atol=1e-12)

    def test_bell_state_reduces_to_maximally_mixed(self) -> None:
        bell = PureState(np.array([1, 0, 0, 1]) / np.sqrt(2))
        reduced = partial_trace(bell.to_density_matrix(), [0])
        assert_allclose(reduced.matrix, np.eye(2) / 2, atol=1e-12)

    def test_composition_matches_direct_trace(self, rng) -> None:
        rho = random_density(3, rng)
        two_step = partial_trace(partial_trace(rho, [0, 1]), [0])
        assert_allclose(two_step.matrix, partial_trace(rho, [0]).matrix, atol=1e-12)

    def test_invariants_preserved(self, rng) -> None:
        rho = random_density(3, rng)
        for keep in ([0], [2], [0, 2], [1, 2]):
            reduced = partial_trace(rho, keep)
            assert abs(reduced.trace() - 1) < 1e-10
            assert_allclose(reduced.matrix, reduced.matrix.conj().T, atol=1e-10)
            assert reduced.min_eigenvalue() >= -1e-9

    def test_empty_keep_rejected(self, rng) -> None:
        with pytest.raises(DimensionMismatchError):
            partial_trace(random_density(2, rng), [])

    def test_out_of_range_rejected(self, rng) -> None:
        with pytest.raises(DimensionMismatchError):
            partial_trace(random_density(2, rng), [2])


class TestEmbedding:
    def test_sigma_x_on_second_qubit(self, paulis) -> None:
        assert_allclose(embed_operator(paulis["X"], 2, [1]), np.kron(np.eye(2), paulis["X"]))

    def test_identity_embeds_to_identity(self) -> None:
        assert_allclose(embed_unitary(np.eye(4), 3, [2, 0]), np.eye(8))

    def test_swap_on_outer_qubits_matches_relabeling(self) -> None:
        expected = np.zeros((8, 8))
        for bits in itertools.product((0, 1), repeat=3):
            q0, q1, q2 = bits
            src = 4 * q0 + 2 * q1 + q2
            dst = 4 * q2 + 2 * q1 + q0
            expected[dst, src] = 1
        assert_allclose(embed_unitary(SWAP, 3, [2, 0]), expected)

    def test_target_order_matters(self, paulis) -> None:
        op = np.kron(paulis["X"], paulis["Z"])
        assert_allclose(embed_operator(op, 2, [1, 0]), np.kron(paulis["Z"], paulis["X"]))

    def test_non_unitary_rejected(self) -> None:
        with pytest.raises(NotUnitaryError):
            embed_unitary(2 * np.eye(2), 2, [0])

    def test_duplicate_targets_rejected(self) -> None:
        with pytest.raises(DimensionMismatchError):
            embed_unitary(SWAP, 3, [1, 1])


class TestDistances:
    def test_self_fidelity(self, rng) -> None:
        phi = random_pure_state(2, rng)
        assert fidelity_pure(phi, phi.to_density_matrix()) == pytest.approx(1.0, abs=1e-12)

    def test_fidelity_with_maximally_mixed(self, rng) -> None:
        phi = random_pure_state(1, rng)
        assert fidelity_pure(phi, maximally_mixed(1)) == pytest.approx(0.5, abs=1e-12)

    def test_fidelity_of_line_coefficient(self) -> None:
        v2 = PureState(np.array([0.99, np.sqrt(1 - 0.99**2)]))
        assert fidelity_pure(PureState.basis(0, 1), v2.to_density_matrix()) == pytest.approx(
            0.9801, abs=1e-12
        )

    def test_fidelity_dimension_mismatch(self, rng) -> None:
        with pytest.raises(DimensionMismatchError):
            fidelity_pure(random_pure_state(2, rng), maximally_mixed(1))

    def test_hs_distance_examples(self) -> None:
        zero = PureState.basis(0, 1).to_density_matrix()
        one = PureState.basis(1, 1).to_density_matrix()
        assert hs_distance(zero, zero) == 0.0
        assert hs_distance(zero, one) == pytest.approx(2.0)
        assert hs_distance(zero, maximally_mixed(1)) == pytest.approx(0.5)

    def test_hs_distance_is_symmetric(self, rng) -> None:
        a, b = random_density(2, rng), random_density(2, rng)
        assert hs_distance(a, b) == pytest.approx(hs_distance(b, a), abs=1e-14)
        assert hs_distance(a, b) > 0

    def test_hs_distance_dimension_mismatch(self) -> None:
        with pytest.raises(DimensionMismatchError):
            hs_distance(maximally_mixed(1), maximally_mixed(2))


class TestStateValidation:
    def test_unnormalized_pure_state_rejected(self) -> None:
        with pytest.raises(InvalidStateError):
            PureState(np.array([1.0, 1.0]))

    def test_from_coefficients_renormalizes(self) -> None:
        state = PureState.from_coefficients((0.97, 0.243))
        assert state.norm == pytest.approx(1.0, abs=1e-12)

    def test_density_trace_checked(self) -> None:
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.eye(2))

    def test_density_hermiticity_checked(self) -> None:
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_density_negative_eigenvalue_checked(self) -> None:
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.array([[1.5, 0.0], [0.0, -0.5]]))

    def test_small_trace_drift_renormalized(self) -> None:
        rho = DensityMatrix(np.diag([0.5 + 1e-11, 0.5]))
        assert rho.trace() == pytest.approx(1.0, abs=1e-15)


class TestHermitianExponential:
    def test_zero_generator(self) -> None:
        assert_allclose(herm_expm_unitary(np.zeros((2, 2)), 0.3), np.eye(2))

    def test_sigma_z_by_pi(self, paulis) -> None:
        assert_allclose(herm_expm_unitary(paulis["Z"], np.pi), -np.eye(2), atol=1e-12)

    def test_random_generator_is_unitary_and_first_order(self, rng, random_hermitian) -> None:
        k = random_hermitian(2, rng)
        eps = 0.01
        u = herm_expm_unitary(k, eps)
        assert unitarity_error(u) < 1e-12
        taylor = np.eye(4) + 1j * eps * k.matrix
        assert np.max(np.abs(u - taylor)) <= (eps * k.norm()) ** 2

    @pytest.mark.parametrize("eps", [1e-3, 1e-2, 1.0])
    def test_inverse_step(self, rng, random_hermitian, eps) -> None:
        k = random_hermitian(2, rng)
        product = herm_expm_unitary(k, eps) @ herm_expm_unitary(k, -eps)
        assert_allclose(product, np.eye(4), atol=1e-10)

    def test_non_hermitian_rejected(self) -> None:
        with pytest.raises(NotHermitianError):
            herm_expm_unitary(np.array([[0, 1], [0, 0]]), 0.1)


class TestSampling:
    def test_one_dimensional_unitary_is_a_phase(self, rng) -> None:
        u = haar_random_unitary(1, rng)
        assert u.shape == (1, 1)
        assert abs(abs(u[0, 0]) - 1) < 1e-12

    def test_haar_is_seeded(self) -> None:
        a = haar_random_unitary(4, np.random.default_rng(5))
        b = haar_random_unitary(4, np.random.default_rng(5))
        assert np.array_equal(a, b)
        assert is_unitary(a, atol=1e-10)

    def test_haar_entry_statistics(self, rng) -> None:
        samples = [abs(haar_random_unitary(4, rng)[0, 0]) ** 2 for _ in range(10_000)]
        assert np.mean(samples) == pytest.approx(0.25, abs=0.01)

    def test_zero_dimension_rejected(self, rng) -> None:
        with pytest.raises(DimensionMismatchError):
            haar_random_unitary(0, rng)

    def test_random_state_is_normalized_and_seeded(self) -> None:
        a = random_pure_state(3, np.random.default_rng(9))
        b = random_pure_state(3, np.random.default_rng(9))
        assert abs(a.norm - 1) < 1e-12
        assert np.array_equal(a.amplitudes, b.amplitudes)

    def test_random_state_overlap_statistics(self, rng) -> None:
        overlaps = [abs(random_pure_state(1, rng).amplitudes[0]) ** 2 for _ in range(10_000)]
        assert np.mean(overlaps) == pytest.approx(0.5, abs=0.02)


class TestCommutator:
    def test_self_commutator_vanishes(self, paulis) -> None:
        assert_allclose(commutator(paulis["Z"], paulis["Z"]), np.zeros((2, 2)))

    def test_pauli_algebra(self, paulis) -> None:
        assert_allclose(commutator(paulis["X"], paulis["Y"]), 2j * paulis["Z"])

    def test_hermitian_operands_give_anti_hermitian(self, rng, random_hermitian) -> None:
        a, b = random_hermitian(2, rng), random_hermitian(2, rng)
        c = commutator(a, b)
        assert_allclose(c.conj().T, -c, atol=1e-12)

    def test_shape_mismatch(self) -> None:
        with pytest.raises(DimensionMismatchError):
            commutator(np.eye(2), np.eye(4))


class TestPauliExpansion:
    def test_identity(self) -> None:
        assert pauli_expand(np.eye(2)).as_dict(atol=1e-12) == {"I": pytest.approx(1.0)}

    def test_basis_word(self, paulis) -> None:
        coefficients = pauli_expand(np.kron(paulis["X"], paulis["Y"])).as_dict(atol=1e-12)
        assert coefficients == {"XY": pytest.approx(1.0)}

    @pytest.mark.parametrize("num_qubits", [1, 2, 3])
    def test_round_trip(self, rng, random_hermitian, num_qubits) -> None:
        h = random_hermitian(num_qubits, rng)
        rebuilt = pauli_reconstruct(pauli_expand(h))
        assert_allclose(rebuilt.matrix, h.matrix, atol=1e-12)

    def test_non_hermitian_rejected(self) -> None:
        with pytest.raises(NotHermitianError):
            pauli_expand(np.array([[0, 1], [0, 0]]))

    def test_hermitian_operator_validates(self) -> None:
        with pytest.raises(NotHermitianError):
            HermitianOperator(np.array([[1, 1j], [1j, 1]]))
