import numpy as np
import pytest

from qcest.qmath import (DimensionCapError, eigh, hermitian, kron, kron_power,
                         layout, max_entangled, partial_trace,
                         partial_transpose, perm_operator, proj, state,
                         sym_isometry)


def random_hermitian(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def random_state(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return state(v / np.linalg.norm(v))


class TestKron:
    def test_diag_times_identity(self):
        out = kron(np.diag([1.0, 2.0]), np.eye(2))
        assert np.allclose(out, np.diag([1, 1, 2, 2]))

    def test_state_power(self):
        psi = np.array([1.0, 0.0])
        assert np.allclose(kron(psi, psi), [1, 0, 0, 0])

    def test_trace_multiplicative(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            a = random_hermitian(rng, 3)
            b = random_hermitian(rng, 3)
            assert abs(np.trace(kron(a, b)) - np.trace(a) * np.trace(b)) < 1e-12


class TestPartialTrace:
    def test_max_entangled_marginal(self):
        rho = proj(max_entangled(2))
        assert np.max(np.abs(partial_trace(rho, (2, 2), [0]) - np.eye(2) / 2)) < 1e-12

    def test_product_factorises(self):
        rng = np.random.default_rng(3)
        a = random_hermitian(rng, 3)
        b = random_hermitian(rng, 4)
        out = partial_trace(kron(a, b), (3, 4), [0])
        assert np.max(np.abs(out - np.trace(b) * a)) < 1e-12

    def test_separable_extension_marginal(self):
        # sum_i q_i alpha_i (x) gamma_i^(x)3 traced over the last two copies
        rng = np.random.default_rng(11)
        q = (0.3, 0.7)
        alphas = [proj(random_state(rng, 2)) for _ in range(2)]
        gammas = [proj(random_state(rng, 2)) for _ in range(2)]
        ext = sum(qi * kron(kron(kron(al, ga), ga), ga)
                  for qi, al, ga in zip(q, alphas, gammas))
        expected = sum(qi * kron(al, ga) for qi, al, ga in zip(q, alphas, gammas))
        out = partial_trace(ext, (2, 2, 2, 2), [0, 1])
        assert np.max(np.abs(out - expected)) < 1e-12

    def test_full_trace_is_scalar_trace(self):
        rng = np.random.default_rng(5)
        x = random_hermitian(rng, 8)
        out = partial_trace(x, (2, 2, 2), [])
        assert abs(out[0, 0] - np.trace(x)) < 1e-12

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            partial_trace(np.eye(4), (2, 2), [2])


class TestPartialTranspose:
    def test_involutive(self):
        rng = np.random.default_rng(13)
        x = random_hermitian(rng, 4)
        out = partial_transpose(partial_transpose(x, (2, 2), 1), (2, 2), 1)
        assert np.max(np.abs(out - x)) < 1e-12

    def test_product_rule(self):
        rng = np.random.default_rng(17)
        a = random_hermitian(rng, 2)
        b = random_hermitian(rng, 3)
        out = partial_transpose(kron(a, b), (2, 3), 0)
        assert np.max(np.abs(out - kron(a.T, b))) < 1e-12

    def test_max_entangled_min_eigenvalue(self):
        pt = partial_transpose(proj(max_entangled(2)), (2, 2), 0)
        assert abs(np.linalg.eigvalsh(pt)[0] - (-0.5)) < 1e-12

    def test_preserves_trace_and_hermiticity(self):
        rng = np.random.default_rng(19)
        x = random_hermitian(rng, 6)
        pt = partial_transpose(x, (2, 3), 1)
        assert abs(np.trace(pt) - np.trace(x)) < 1e-12
        assert np.max(np.abs(pt - pt.conj().T)) < 1e-12

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            partial_transpose(np.eye(4), (2, 2), 5)


class TestMaxEntangled:
    def test_qubit_amplitudes(self):
        s = 1 / np.sqrt(2)
        assert np.allclose(max_entangled(2), [s, 0, 0, s])

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_normalised(self, d):
        assert abs(np.linalg.norm(max_entangled(d)) - 1) < 1e-12

    def test_marginal_maximally_mixed(self):
        rho = proj(max_entangled(3))
        assert np.max(np.abs(partial_trace(rho, (3, 3), [1]) - np.eye(3) / 3)) < 1e-12

    def test_rejects_small_dimension(self):
        with pytest.raises(ValueError):
            max_entangled(1)


class TestEigh:
    def test_sorted_values(self):
        w, _ = eigh(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(w, [1, 2, 3])

    def test_pauli_x(self):
        w, _ = eigh(np.array([[0, 1], [1, 0]], dtype=complex))
        assert np.allclose(w, [-1, 1])

    def test_reconstruction(self):
        rng = np.random.default_rng(23)
        h = random_hermitian(rng, 6)
        w, v = eigh(h)
        assert np.max(np.abs((v * w) @ v.conj().T - h)) < 1e-11

    def test_psd_eigenvalues_nonnegative(self):
        rng = np.random.default_rng(29)
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        w, _ = eigh(a @ a.conj().T)
        assert w[0] >= -1e-11

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            eigh(np.array([[0, 1], [0, 0]], dtype=complex))


class TestSymIsometry:
    def test_qubit_two_copies(self):
        v = sym_isometry(2, 2)
        s = 1 / np.sqrt(2)
        expected = np.array([
            [1, 0, 0],
            [0, s, 0],
            [0, s, 0],
            [0, 0, 1.0],
        ])
        assert np.max(np.abs(v - expected)) < 1e-12

    def test_isometry_property(self):
        v = sym_isometry(2, 5)
        assert np.max(np.abs(v.T @ v - np.eye(6))) < 1e-12

    def test_projector_rank(self):
        v = sym_isometry(2, 3)
        assert abs(np.trace(v @ v.T) - 4) < 1e-12

    def test_image_permutation_invariant(self):
        v = sym_isometry(2, 3)
        pi = v @ v.T
        for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
            p = perm_operator(2, 3, perm)
            assert np.max(np.abs(p @ pi @ p.T - pi)) < 1e-12

    def test_dimension_cap(self):
        with pytest.raises(DimensionCapError):
            sym_isometry(2, 13)


class TestPermOperator:
    def test_swap(self):
        p = perm_operator(2, 2, (1, 0))
        psi01 = np.zeros(4)
        psi01[1] = 1.0  # |01>
        psi10 = np.zeros(4)
        psi10[2] = 1.0  # |10>
        assert np.allclose(p @ psi01, psi10)

    def test_composition(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            pi = tuple(rng.permutation(3))
            sigma = tuple(rng.permutation(3))
            comp = tuple(pi[sigma[k]] for k in range(3))
            lhs = perm_operator(2, 3, pi) @ perm_operator(2, 3, sigma)
            assert np.max(np.abs(lhs - perm_operator(2, 3, comp))) < 1e-12

    def test_moves_factors(self):
        rng = np.random.default_rng(37)
        states = [random_state(rng, 2) for _ in range(3)]
        perm = (2, 0, 1)  # factor k -> slot perm[k]
        vin = kron(kron(states[0], states[1]), states[2])
        slots = [None] * 3
        for k in range(3):
            slots[perm[k]] = states[k]
        vout = kron(kron(slots[0], slots[1]), slots[2])
        assert np.max(np.abs(perm_operator(2, 3, perm) @ vin - vout)) < 1e-12

    def test_unitary(self):
        p = perm_operator(2, 3, (1, 2, 0))
        assert np.max(np.abs(p @ p.T - np.eye(8))) < 1e-12

    def test_rejects_malformed(self):
        with pytest.raises(ValueError):
            perm_operator(2, 3, (0, 0, 1))


class TestValidators:
    def test_hermitian_symmetrises_small_drift(self):
        a = np.array([[1.0, 1e-14j], [0, 2.0]])
        h = hermitian(a)
        assert np.max(np.abs(h - h.conj().T)) == 0

    def test_hermitian_rejects_drift(self):
        a = np.array([[1.0, 1e-6], [0.0, 2.0]])
        with pytest.raises(ValueError):
            hermitian(a)

    def test_state_canonical_phase(self):
        rng = np.random.default_rng(41)
        v = random_state(rng, 3)
        rotated = np.exp(0.7j) * v
        assert np.max(np.abs(state(rotated) - v)) < 1e-12
        sig = np.flatnonzero(np.abs(v) > 1e-12)[0]
        assert v[sig].imag == 0 and v[sig].real > 0

    def test_state_rejects_norm(self):
        with pytest.raises(ValueError):
            state(np.array([0.9, 0.0]))

    def test_layout_strips_ones(self):
        assert layout(6, (1, 2, 3, 1)) == (2, 3)

    def test_layout_product_mismatch(self):
        with pytest.raises(ValueError):
            layout(6, (2, 2))

    def test_layout_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            layout(4, (2, 0, 2))

    def test_kron_power(self):
        psi = np.array([1.0, 0.0])
        assert np.allclose(kron_power(psi, 3), np.eye(8)[0])
