import numpy as np
import pytest

from nlhide import (
    ContractViolationError,
    DimensionCapError,
    MultiPartyOperator,
    SlotStructure,
    ghz_state,
    hermitian_eigenvalues,
    identity,
    is_psd,
    partial_transpose,
    tensor,
    tensor_power,
)

from oracles import (
    jacobi_eigenvalues,
    partial_transpose_entrywise,
    random_density,
    random_hermitian,
    swap_matrix,
)

PAULI_Z = np.diag([1.0, -1.0]).astype(np.complex128)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)


def qubit(label, matrix):
    return MultiPartyOperator(matrix, SlotStructure((2,), (label,)))


def two_party_op(matrix, dims=(2, 2)):
    return MultiPartyOperator(matrix, SlotStructure(dims, ("A1", "A2")))


class TestSlotStructure:
    def test_dim_and_parties(self):
        slots = SlotStructure((2, 3, 2), ("A1", "A2", "A1"))
        assert slots.dim == 12
        assert slots.parties == ("A1", "A2")
        assert slots.slots_of("A1") == (0, 2)
        assert slots.local_dim("A1") == 4

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ValueError):
            SlotStructure((2, 2), ("A1",))

    def test_rejects_nonpositive_dims(self):
        with pytest.raises(ValueError):
            SlotStructure((2, 0), ("A1", "A2"))

    def test_operator_dim_must_match(self):
        with pytest.raises(ValueError):
            MultiPartyOperator(np.eye(3), SlotStructure((2, 2), ("A1", "A2")))

    def test_matrix_is_frozen(self):
        op = qubit("A1", PAULI_Z)
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 5.0


class TestTensor:
    def test_identity_times_identity(self):
        one = qubit("A1", np.eye(2))
        out = tensor(one, qubit("A2", np.eye(2)))
        assert out.slots.slot_dims == (2, 2)
        assert out.slots.party_of_slot == ("A1", "A2")
        np.testing.assert_allclose(out.matrix, np.eye(4))

    def test_sign_algebra_on_11(self):
        zz = tensor(qubit("A1", PAULI_Z), qubit("A2", PAULI_Z))
        ket11 = np.array([0, 0, 0, 1.0])
        np.testing.assert_allclose(zz.matrix @ ket11, ket11)

    def test_ghz_product_trace(self):
        prod = tensor(ghz_state(2, 2), ghz_state(2, 2))
        assert prod.trace() == pytest.approx(1.0, abs=1e-12)

    def test_trace_multiplicative_on_random(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = two_party_op(random_hermitian(rng, 4))
            b = two_party_op(random_hermitian(rng, 6), dims=(2, 3))
            prod = tensor(a, b)
            assert prod.trace() == pytest.approx(a.trace() * b.trace(), abs=1e-12)

    def test_dimension_cap(self):
        big = two_party_op(np.eye(64), dims=(8, 8))
        with pytest.raises(DimensionCapError, match="dimension cap"):
            tensor(big, big, cap=512)
        with pytest.raises(DimensionCapError):
            tensor_power(big, 3, cap=4096)


class TestPartialTranspose:
    def test_identity_is_invariant(self):
        one = identity(SlotStructure((2, 2), ("A1", "A2")))
        out = partial_transpose(one, {"A1"})
        np.testing.assert_allclose(out.matrix, np.eye(4))

    def test_bell_projector_spectrum(self):
        # Frozen via the 4x4 eigendecomposition of the transposed projector.
        bell = ghz_state(2, 2)
        vals = hermitian_eigenvalues(partial_transpose(bell, {"A1"}))
        np.testing.assert_allclose(vals, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)

    def test_involution_on_random_hermitian(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            op = two_party_op(random_hermitian(rng, 4))
            back = partial_transpose(partial_transpose(op, {"A2"}), {"A2"})
            np.testing.assert_allclose(back.matrix, op.matrix, atol=1e-14)

    def test_matches_entrywise_oracle(self):
        rng = np.random.default_rng(12)
        slots = SlotStructure((2, 3, 2), ("A1", "A2", "A3"))
        op = MultiPartyOperator(random_hermitian(rng, 12), slots)
        for side, transposed in [({"A1"}, (0,)), ({"A2", "A3"}, (1, 2))]:
            got = partial_transpose(op, side).matrix
            want = partial_transpose_entrywise(op.matrix, (2, 3, 2), transposed)
            np.testing.assert_allclose(got, want, atol=0)

    def test_transposes_every_slot_of_a_party(self):
        rng = np.random.default_rng(13)
        slots = SlotStructure((2, 2, 2, 2), ("A1", "A2", "A1", "A2"))
        op = MultiPartyOperator(random_hermitian(rng, 16), slots)
        got = partial_transpose(op, {"A1"}).matrix
        want = partial_transpose_entrywise(op.matrix, (2, 2, 2, 2), (0, 2))
        np.testing.assert_allclose(got, want, atol=0)

    def test_rejects_non_bipartition_sides(self):
        op = two_party_op(np.eye(4))
        with pytest.raises(ValueError, match="not a bipartition side"):
            partial_transpose(op, set())
        with pytest.raises(ValueError, match="not a bipartition side"):
            partial_transpose(op, {"A1", "A2"})
        with pytest.raises(ValueError, match="unknown"):
            partial_transpose(op, {"B7"})


class TestHermitianEigenvalues:
    def test_pauli_spectra(self):
        np.testing.assert_allclose(hermitian_eigenvalues(qubit("A1", PAULI_Z)), [-1, 1])
        np.testing.assert_allclose(hermitian_eigenvalues(qubit("A1", PAULI_X)), [-1, 1])

    def test_identity_minus_swap(self):
        op = two_party_op(np.eye(4) - swap_matrix())
        np.testing.assert_allclose(hermitian_eigenvalues(op), [0, 0, 0, 2], atol=1e-12)

    def test_rejects_non_hermitian(self):
        op = two_party_op(np.arange(16).reshape(4, 4).astype(complex))
        with pytest.raises(ContractViolationError):
            hermitian_eigenvalues(op)

    def test_agrees_with_jacobi_oracle(self):
        rng = np.random.default_rng(21)
        for dim, dims in [(4, (2, 2)), (6, (2, 3)), (8, (2, 4))]:
            mat = random_hermitian(rng, dim)
            op = two_party_op(mat, dims=dims)
            got = hermitian_eigenvalues(op)
            want = jacobi_eigenvalues(mat)
            np.testing.assert_allclose(got, want, atol=1e-10 * (1 + np.max(np.abs(mat))))


class TestIsPsd:
    def test_identity(self):
        check = is_psd(identity(SlotStructure((2,), ("A1",))))
        assert check.ok and check.min_eigenvalue == pytest.approx(1.0)

    def test_indefinite_diagonal(self):
        check = is_psd(qubit("A1", np.diag([1.0, -0.5])))
        assert not check.ok
        assert check.min_eigenvalue == pytest.approx(-0.5)

    def test_boundary_case_swap_complement(self):
        op = two_party_op((np.eye(4) - swap_matrix()) / 4.0)
        check = is_psd(op)
        assert check.ok
        assert check.min_eigenvalue == pytest.approx(0.0, abs=1e-12)

    def test_tolerance_is_reported(self):
        check = is_psd(qubit("A1", np.diag([5.0, 3.0])))
        assert check.tol == pytest.approx(1e-10 * 6.0)

    def test_rejects_negative_tolerance(self):
        with pytest.raises(ValueError):
            is_psd(qubit("A1", PAULI_Z), tol=-1.0)


class TestKernelProperties:
    """Partial transposition and tensor structure on random operators."""

    def _random_case(self, rng):
        layouts = [
            ((2, 2), ("A1", "A2")),
            ((2, 3), ("A1", "A2")),
            ((2, 2, 2), ("A1", "A2", "A3")),
            ((4, 2), ("A1", "A2")),
            ((2, 2, 2, 2), ("A1", "A2", "A1", "A2")),
            ((3, 3), ("A1", "A2")),
            ((8, 4), ("A1", "A2")),
            ((4, 4, 2), ("A1", "A2", "A3")),
        ]
        dims, owners = layouts[int(rng.integers(len(layouts)))]
        slots = SlotStructure(dims, owners)
        hermitian = bool(rng.integers(2))
        mat = random_hermitian(rng, slots.dim) if hermitian else random_density(rng, slots.dim)
        op = MultiPartyOperator(mat, slots)
        parties = list(slots.parties)
        take = int(rng.integers(1, len(parties)))
        side = set(rng.choice(parties, size=take, replace=False).tolist())
        return op, side

    def test_involution_trace_hermiticity(self):
        rng = np.random.default_rng(2024)
        for _ in range(60):
            op, side = self._random_case(rng)
            pt = partial_transpose(op, side)
            scale = 1.0 + float(np.max(np.abs(op.matrix)))
            back = partial_transpose(pt, side)
            assert float(np.max(np.abs(back.matrix - op.matrix))) <= 1e-10 * scale
            assert abs(pt.trace() - op.trace()) <= 1e-10 * scale
            assert float(np.max(np.abs(pt.matrix - pt.matrix.conj().T))) <= 1e-10 * scale

    def test_spectrum_symmetry_between_sides(self):
        rng = np.random.default_rng(77)
        for _ in range(10):
            op, side = self._random_case(rng)
            other = set(op.parties) - side
            vals_a = hermitian_eigenvalues(partial_transpose(op, side))
            vals_b = hermitian_eigenvalues(partial_transpose(op, other))
            np.testing.assert_allclose(vals_a, vals_b, atol=1e-10 * (1 + np.max(np.abs(vals_a))))

    def test_transpose_factorizes_over_tensor(self):
        rng = np.random.default_rng(99)
        for _ in range(20):
            a = two_party_op(random_hermitian(rng, 4))
            b = two_party_op(random_hermitian(rng, 6), dims=(3, 2))
            left = partial_transpose(tensor(a, b), {"A1"}).matrix
            right = np.kron(
                partial_transpose(a, {"A1"}).matrix, partial_transpose(b, {"A1"}).matrix
            )
            assert float(np.max(np.abs(left - right))) <= 1e-12 * (1 + np.max(np.abs(left)))
