import numpy as np
import pytest

from wsmsce.errors import SingularSystemError
from wsmsce.numkern import devec, kron, ls_solve, orth_complement_projector, svd, vec


def _cx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestSvd:
    def test_identity_singular_values(self):
        u, sigma, v = svd(np.eye(3))
        assert np.allclose(sigma, [1.0, 1.0, 1.0])

    def test_column_vector_norm(self):
        _, sigma, _ = svd(np.array([[3.0], [4.0]]))
        assert sigma.shape == (1,)
        assert abs(sigma[0] - 5.0) < 1e-12

    def test_reconstruction_residual(self):
        rng = np.random.default_rng(7)
        m = _cx(rng, 4, 2)
        u, sigma, v = svd(m)
        rebuilt = u @ np.diag(sigma) @ v.conj().T
        assert np.linalg.norm(rebuilt - m) / np.linalg.norm(m) < 1e-10

    def test_factor_orthonormality(self):
        rng = np.random.default_rng(3)
        for shape in [(5, 3), (3, 5), (4, 4)]:
            u, sigma, v = svd(_cx(rng, *shape))
            k = min(shape)
            assert np.linalg.norm(u.conj().T @ u - np.eye(k)) < 1e-10
            assert np.linalg.norm(v.conj().T @ v - np.eye(k)) < 1e-10
            assert np.all(np.diff(sigma) <= 1e-14)

    def test_rejects_non_finite(self):
        bad = np.array([[1.0, np.nan], [0.0, 1.0]])
        with pytest.raises(ValueError):
            svd(bad)


class TestLsSolve:
    def test_identity(self):
        rng = np.random.default_rng(0)
        y = _cx(rng, 4)
        assert np.allclose(ls_solve(np.eye(4), y), y)

    def test_consistent_overdetermined(self):
        rng = np.random.default_rng(1)
        a = _cx(rng, 3, 3)
        x0 = _cx(rng, 3)
        stacked = np.vstack([a, a])
        y = stacked @ x0
        assert np.linalg.norm(ls_solve(stacked, y) - x0) < 1e-10

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(2)
        a = _cx(rng, 6, 3)
        y = _cx(rng, 6)
        # independent oracle: explicit (A^H A)^-1 A^H y
        gram = a.conj().T @ a
        expected = np.linalg.solve(gram, a.conj().T @ y)
        assert np.linalg.norm(ls_solve(a, y) - expected) < 1e-10

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = _cx(rng, 8, 4)
            y = _cx(rng, 8)
            x = ls_solve(a, y)
            resid = y - a @ x
            assert np.linalg.norm(a.conj().T @ resid) < 1e-8 * np.linalg.norm(y)

    def test_rank_deficient_raises(self):
        rng = np.random.default_rng(4)
        col = _cx(rng, 5)
        a = np.column_stack([col, col])
        with pytest.raises(SingularSystemError):
            ls_solve(a, _cx(rng, 5))

    def test_underdetermined_raises(self):
        rng = np.random.default_rng(5)
        with pytest.raises(SingularSystemError):
            ls_solve(_cx(rng, 2, 4), _cx(rng, 2))


class TestKronVecDevec:
    def test_scalar_identity(self):
        rng = np.random.default_rng(0)
        a = _cx(rng, 5)
        assert np.array_equal(kron(np.array([1.0 + 0j]), a), a)

    def test_unit_vector_selection(self):
        b = np.array([1.0, 0.0], dtype=complex)
        a = np.array([2.0, 3.0], dtype=complex)
        assert np.allclose(kron(b, a), [2.0, 3.0, 0.0, 0.0])

    def test_kron_equals_vec_outer(self):
        # one-ulp slack: numpy's kron and outer hit different multiply loops
        rng = np.random.default_rng(6)
        for _ in range(10):
            a = _cx(rng, 4)
            b = _cx(rng, 3)
            assert np.allclose(kron(b, a), vec(np.outer(a, b)), rtol=0, atol=1e-14)

    def test_vec_identity_matrix(self):
        assert np.allclose(vec(np.eye(2)), [1.0, 0.0, 0.0, 1.0])

    def test_devec_of_kron_is_outer(self):
        rng = np.random.default_rng(7)
        a = _cx(rng, 4)
        b = _cx(rng, 3)
        assert np.allclose(devec(kron(b, a), len(a)), np.outer(a, b),
                           rtol=0, atol=1e-14)

    def test_round_trip_bit_identical(self):
        rng = np.random.default_rng(8)
        m = _cx(rng, 5, 3)
        assert np.array_equal(devec(vec(m), 5), m)

    def test_indivisible_length_raises(self):
        with pytest.raises(ValueError):
            devec(np.arange(7, dtype=complex), 3)


class TestOrthComplementProjector:
    def test_coordinate_projector(self):
        phi = np.array([[1.0], [0.0], [0.0]], dtype=complex)
        assert np.allclose(orth_complement_projector(phi), np.diag([0.0, 1.0, 1.0]))

    def test_full_span_gives_zero(self):
        rng = np.random.default_rng(9)
        phi = _cx(rng, 4, 4)
        p = orth_complement_projector(phi)
        assert np.linalg.norm(p) < 1e-10

    def test_annihilates_columns(self):
        rng = np.random.default_rng(10)
        phi = _cx(rng, 8, 3)
        p = orth_complement_projector(phi)
        assert np.linalg.norm(p @ phi) < 1e-10

    def test_hermitian_idempotent(self):
        rng = np.random.default_rng(11)
        for _ in range(8):
            phi = _cx(rng, 7, 2)
            p = orth_complement_projector(phi)
            assert np.linalg.norm(p - p.conj().T) < 1e-10
            assert np.linalg.norm(p @ p - p) < 1e-10

    def test_rank_deficient_raises(self):
        rng = np.random.default_rng(12)
        col = _cx(rng, 6)
        with pytest.raises(SingularSystemError):
            orth_complement_projector(np.column_stack([col, 2 * col]))
