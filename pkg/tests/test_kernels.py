"""Backend parity and greedy-loop semantics.

Every loop must behave identically in the pure and compiled backends:
same supports (lowest-index tie-breaking), matching gains and residual
norms, the same early stopping, and the same singularity detection.
"""

import numpy as np
import pytest

from wsmsce import kernels
from wsmsce.errors import SingularSystemError
from wsmsce.kernels import available_backends, get_backend, use_backend

BACKENDS = available_backends()
PAIRED = len(BACKENDS) == 2


def _cx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _instances(seed=0, count=6):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        psi = _cx(rng, 20, 40)
        y = psi[:, rng.choice(40, size=3, replace=False)] @ _cx(rng, 3)
        y = y + 0.05 * _cx(rng, 20)
        out.append((psi, y))
    return out


@pytest.mark.skipif(not PAIRED, reason="compiled backend unavailable")
class TestBackendParity:
    def test_omp(self):
        pure, fast = get_backend("pure"), get_backend("compiled")
        for psi, y in _instances(1):
            for squared in (True, False):
                s1, g1, r1 = pure.omp_run(psi, y, 5, -1.0, squared)
                s2, g2, r2 = fast.omp_run(psi, y, 5, -1.0, squared)
                assert np.array_equal(s1, s2)
                assert np.allclose(g1, g2, rtol=0, atol=1e-10)
                assert np.allclose(r1, r2, rtol=0, atol=1e-10)

    def test_omp_batch(self):
        rng = np.random.default_rng(2)
        pure, fast = get_backend("pure"), get_backend("compiled")
        psi = _cx(rng, 12, 18)
        ymat = psi[:, [2, 9]] @ _cx(rng, 2, 6) + 0.02 * _cx(rng, 12, 6)
        s1, g1 = pure.omp_batch_run(psi, ymat, 3, -1.0, True)
        s2, g2 = fast.omp_batch_run(psi, ymat, 3, -1.0, True)
        for a, b in zip(s1, s2):
            assert np.array_equal(a, b)
        for a, b in zip(g1, g2):
            assert np.allclose(a, b, rtol=0, atol=1e-10)

    def test_somp(self):
        rng = np.random.default_rng(3)
        pure, fast = get_backend("pure"), get_backend("compiled")
        psi = _cx(rng, 14, 22)
        ymat = psi[:, [4, 11, 17]] @ _cx(rng, 3, 8) + 0.05 * _cx(rng, 14, 8)
        for squared in (True, False):
            s1, c1, r1 = pure.somp_run(psi, ymat, 4, -1.0, squared)
            s2, c2, r2 = fast.somp_run(psi, ymat, 4, -1.0, squared)
            assert np.array_equal(s1, s2)
            assert np.allclose(c1, c2, rtol=0, atol=1e-10)
            assert np.allclose(r1, r2, rtol=0, atol=1e-10)

    def test_pad2d(self):
        rng = np.random.default_rng(4)
        pure, fast = get_backend("pure"), get_backend("compiled")
        a_cnt, c_cnt, m_cnt, q_cnt = 9, 6, 5, 11
        psi = _cx(rng, q_cnt, a_cnt)
        fac = _cx(rng, a_cnt, c_cnt, m_cnt)
        yvec = (np.kron(fac[3, 2], psi[:, 3]) * (1.1 - 0.4j)
                + np.kron(fac[7, 1], psi[:, 7]) * (0.2 + 0.9j))
        ymat = yvec.reshape((q_cnt, m_cnt), order="F") + 0.01 * _cx(rng, q_cnt, m_cnt)
        for squared in (True, False):
            p1, k1, r1 = pure.pad2d_run(psi, ymat, fac, 3, -1.0, squared)
            p2, k2, r2 = fast.pad2d_run(psi, ymat, fac, 3, -1.0, squared)
            assert np.array_equal(p1, p2)
            assert np.allclose(k1, k2, rtol=0, atol=1e-10)
            assert np.allclose(r1, r2, rtol=0, atol=1e-10)

    def test_lstsq(self):
        rng = np.random.default_rng(5)
        pure, fast = get_backend("pure"), get_backend("compiled")
        a = _cx(rng, 10, 4)
        y = _cx(rng, 10)
        ymat = _cx(rng, 10, 3)
        assert np.allclose(pure.lstsq(a, y), fast.lstsq(a, y), rtol=0, atol=1e-10)
        assert np.allclose(pure.lstsq(a, ymat), fast.lstsq(a, ymat),
                           rtol=0, atol=1e-10)


@pytest.mark.parametrize("backend", BACKENDS)
class TestLoopSemantics:
    def test_residual_monotone(self, backend):
        impl = get_backend(backend)
        rng = np.random.default_rng(7)
        psi, y = _instances(8, 1)[0]
        _, _, resid = impl.omp_run(psi, y, 8, -1.0, True)
        assert np.all(np.diff(resid) <= 1e-10)
        ymat = _cx(rng, 14, 5)
        psi2 = _cx(rng, 14, 20)
        _, _, resid2 = impl.somp_run(psi2, ymat, 6, -1.0, True)
        assert np.all(np.diff(resid2) <= 1e-10)
        fac = _cx(rng, 8, 4, 5)
        psi3 = _cx(rng, 14, 8)
        ymat3 = _cx(rng, 14, 5)
        _, _, resid3 = impl.pad2d_run(psi3, ymat3, fac, 6, -1.0, True)
        assert np.all(np.diff(resid3) <= 1e-10)

    def test_no_reselection(self, backend):
        impl = get_backend(backend)
        psi, y = _instances(9, 1)[0]
        support, _, _ = impl.omp_run(psi, y, 12, -1.0, True)
        assert len(set(support.tolist())) == len(support)

    def test_scale_invariance(self, backend):
        impl = get_backend(backend)
        psi, y = _instances(10, 1)[0]
        s1, _, _ = impl.omp_run(psi, y, 4, -1.0, True)
        s2, _, _ = impl.omp_run(psi, 7.25 * y, 4, -1.0, True)
        assert np.array_equal(s1, s2)

    def test_early_stop(self, backend):
        impl = get_backend(backend)
        rng = np.random.default_rng(11)
        psi = _cx(rng, 10, 8)
        y = 1.5 * psi[:, 5]
        support, gains, resid = impl.omp_run(psi, y, 4, 1e-9, True)
        assert len(support) == 1 and support[0] == 5
        assert resid[-1] <= 1e-9

    def test_singular_raises(self, backend):
        impl = get_backend(backend)
        rng = np.random.default_rng(12)
        col = _cx(rng, 9)
        psi = np.column_stack([col, col * (1 + 1e-15)])
        with pytest.raises(SingularSystemError):
            impl.omp_run(psi, col, 2, -1.0, True)

    def test_batch_isolates_failures(self, backend):
        impl = get_backend(backend)
        rng = np.random.default_rng(13)
        col = _cx(rng, 9)
        psi = np.column_stack([col, col * (1 + 1e-15), _cx(rng, 9)])
        good = psi[:, 2] * 2.0
        ymat = np.column_stack([col, good])
        supports, gains = impl.omp_batch_run(psi, ymat, 2, -1.0, True)
        assert supports[0] is None and gains[0] is None
        assert supports[1] is not None

    def test_lstsq_singular(self, backend):
        impl = get_backend(backend)
        rng = np.random.default_rng(14)
        col = _cx(rng, 6)
        with pytest.raises(SingularSystemError):
            impl.lstsq(np.column_stack([col, col]), col)


def test_use_backend_switch():
    original = kernels.BACKEND
    for name in BACKENDS:
        use_backend(name)
        assert kernels.BACKEND == name
    use_backend(original)


def test_zero_norm_atoms_never_selected():
    rng = np.random.default_rng(15)
    psi = _cx(rng, 8, 5)
    psi[:, 2] = 0.0
    y = psi[:, 0] + psi[:, 4]
    for name in BACKENDS:
        support, _, _ = get_backend(name).omp_run(psi, y, 4, -1.0, True)
        assert 2 not in support.tolist()
