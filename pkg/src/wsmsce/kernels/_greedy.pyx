# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy-pursuit loops.

Mirrors ``_pure`` exactly: same scores, tie-breaking (lowest flat index),
least-squares refits against the original observation, and early stopping.
Least squares go through LAPACK zgels (QR based); a collapsing R diagonal
flags a singular atom set.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dznrm2, zgemm, zgemv
from scipy.linalg.cython_lapack cimport zgels

from ..errors import SingularSystemError

cnp.import_array()

ctypedef double complex zcomplex

cdef double _COND_LIMIT = 1e12

cdef char TRANS_N = b'N'
cdef char TRANS_C = b'C'
cdef int INT_ONE = 1
cdef zcomplex Z_ONE = 1.0 + 0.0j
cdef zcomplex Z_ZERO = 0.0 + 0.0j
cdef zcomplex Z_MINUS_ONE = -1.0 + 0.0j


cdef inline double _cabs(zcomplex z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef void _column_denominators(zcomplex[::1, :] psi, double[::1] denom,
                               bint squared) nogil:
    cdef Py_ssize_t rows = psi.shape[0], cols = psi.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc
    for j in range(cols):
        acc = 0.0
        for i in range(rows):
            acc += psi[i, j].real * psi[i, j].real + psi[i, j].imag * psi[i, j].imag
        if acc <= 0.0:
            denom[j] = -1.0  # marks a dead atom: its score is zero
        else:
            denom[j] = acc if squared else sqrt(acc)


cdef int _lstsq_inplace(zcomplex[::1, :] phi, Py_ssize_t used_cols,
                        zcomplex[::1, :] qr_buf, zcomplex[::1, :] rhs,
                        Py_ssize_t nrhs, zcomplex[::1] work, int lwork) nogil:
    """Solve min ||rhs - phi[:, :used_cols] x|| in place.

    ``rhs`` enters holding the targets and leaves with the solution in its
    first ``used_cols`` rows.  Returns 0 on success, 1 when the triangular
    factor signals rank deficiency.
    """
    cdef int m = <int>phi.shape[0]
    cdef int k = <int>used_cols
    cdef int nr = <int>nrhs
    cdef int lda = <int>qr_buf.shape[0]
    cdef int ldb = <int>rhs.shape[0]
    cdef int info = 0
    cdef Py_ssize_t i, j
    cdef double dmax, dmin, dval
    for j in range(used_cols):
        for i in range(m):
            qr_buf[i, j] = phi[i, j]
    zgels(&TRANS_N, &m, &k, &nr, &qr_buf[0, 0], &lda, &rhs[0, 0], &ldb,
          &work[0], &lwork, &info)
    if info != 0:
        return 1
    dmax = 0.0
    dmin = -1.0
    if used_cols < m:
        k = <int>used_cols
    else:
        k = m
    for j in range(k):
        dval = _cabs(qr_buf[j, j])
        if dval > dmax:
            dmax = dval
        if dmin < 0.0 or dval < dmin:
            dmin = dval
    if dmin <= 0.0 or dmax / dmin > _COND_LIMIT or dmax == 0.0:
        return 1
    return 0


def lstsq(a, b):
    """QR least squares min ||b - a x|| via zgels with the shared
    condition guard; ``b`` may be a vector or a matrix."""
    cdef cnp.ndarray a_f = np.asfortranarray(a, dtype=np.complex128)
    b_arr = np.asarray(b, dtype=np.complex128)
    cdef bint vector_rhs = b_arr.ndim == 1
    cdef cnp.ndarray b_f = np.asfortranarray(
        b_arr.reshape(-1, 1) if vector_rhs else b_arr
    )
    cdef zcomplex[::1, :] a_v = a_f
    cdef Py_ssize_t m = a_v.shape[0], k = a_v.shape[1]
    cdef Py_ssize_t nrhs = b_f.shape[1]
    if b_f.shape[0] != m:
        raise ValueError("right-hand side length does not match the matrix")
    cdef zcomplex[::1, :] qr_buf = np.empty((m, max(k, 1)),
                                            dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] rhs = np.empty((max(m, k), nrhs),
                                         dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] b_v = b_f
    cdef Py_ssize_t i, j
    for j in range(nrhs):
        for i in range(m):
            rhs[i, j] = b_v[i, j]

    cdef int lwork = -1, info = 0
    cdef int mm = <int>m, kk = <int>k, nr = <int>nrhs
    cdef int ldb_q = <int>rhs.shape[0]
    cdef zcomplex wsize
    zgels(&TRANS_N, &mm, &kk, &nr, &qr_buf[0, 0], &mm, &rhs[0, 0], &ldb_q,
          &wsize, &lwork, &info)
    lwork = <int>wsize.real
    cdef zcomplex[::1] work = np.empty(max(lwork, 1), dtype=np.complex128)
    cdef int status = _lstsq_inplace(a_v, k, qr_buf, rhs, nrhs, work, lwork)
    if status != 0:
        raise SingularSystemError("system matrix is singular or near-singular")
    out = np.asarray(rhs[:k, :]).copy()
    return out[:, 0] if vector_rhs else out


def omp_run(psi, y, Py_ssize_t sparsity, double tol=-1.0, bint squared=True):
    """Single-vector OMP; see the pure backend for the full contract."""
    cdef cnp.ndarray psi_f = np.asfortranarray(psi, dtype=np.complex128)
    cdef cnp.ndarray y_arr = np.ascontiguousarray(y, dtype=np.complex128)
    cdef zcomplex[::1, :] psi_v = psi_f
    cdef zcomplex[::1] y_v = y_arr

    cdef Py_ssize_t m = psi_v.shape[0], n_atoms = psi_v.shape[1]
    cdef Py_ssize_t steps = sparsity if sparsity < n_atoms else n_atoms
    if steps < 0:
        steps = 0

    cdef double[::1] denom = np.empty(n_atoms)
    _column_denominators(psi_v, denom, squared)

    cdef cnp.ndarray support_arr = np.empty(steps, dtype=np.int64)
    cdef cnp.ndarray resid_arr = np.empty(steps, dtype=np.float64)
    cdef long long[::1] support = support_arr
    cdef double[::1] resid_norms = resid_arr

    cdef zcomplex[::1] corr = np.empty(n_atoms, dtype=np.complex128)
    cdef zcomplex[::1] residual = y_arr.copy()
    cdef zcomplex[::1, :] phi = np.empty((m, max(steps, 1)), dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] qr_buf = np.empty((m, max(steps, 1)), dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] rhs = np.empty((max(m, steps), 1), dtype=np.complex128, order="F")
    cdef cnp.ndarray gains_arr = np.zeros(0, dtype=np.complex128)
    cdef int[::1] selected = np.zeros(n_atoms, dtype=np.intc)

    # workspace query once at the largest subproblem size
    cdef int lwork = -1, info = 0, mm = <int>m, kk = <int>max(steps, 1), one = 1
    cdef int ldb_q = <int>rhs.shape[0]
    cdef zcomplex wsize
    zgels(&TRANS_N, &mm, &kk, &one, &qr_buf[0, 0], &mm, &rhs[0, 0], &ldb_q,
          &wsize, &lwork, &info)
    lwork = <int>wsize.real
    cdef zcomplex[::1] work = np.empty(max(lwork, 1), dtype=np.complex128)

    cdef Py_ssize_t it, i, j, best, used = 0
    cdef double best_score, score
    cdef int nn = <int>n_atoms, status

    for it in range(steps):
        # correlations psi^H r
        zgemv(&TRANS_C, &mm, &nn, &Z_ONE, &psi_v[0, 0], &mm,
              &residual[0], &INT_ONE, &Z_ZERO, &corr[0], &INT_ONE)
        best = -1
        best_score = -1.0
        for j in range(n_atoms):
            if selected[j]:
                continue
            score = 0.0 if denom[j] <= 0.0 else _cabs(corr[j]) / denom[j]
            if score > best_score:
                best_score = score
                best = j
        if best < 0:
            break
        selected[best] = 1
        support[it] = best
        for i in range(m):
            phi[i, it] = psi_v[i, best]
        used = it + 1
        for i in range(m):
            rhs[i, 0] = y_v[i]
        status = _lstsq_inplace(phi, used, qr_buf, rhs, 1, work, lwork)
        if status != 0:
            raise SingularSystemError("selected atoms form a singular system")
        # residual = y - phi[:, :used] @ gains
        for i in range(m):
            residual[i] = y_v[i]
        kk = <int>used
        zgemv(&TRANS_N, &mm, &kk, &Z_MINUS_ONE, &phi[0, 0], &mm,
              &rhs[0, 0], &INT_ONE, &Z_ONE, &residual[0], &INT_ONE)
        resid_norms[it] = dznrm2(&mm, &residual[0], &INT_ONE)
        gains_arr = np.asarray(rhs[:used, 0]).copy()
        if tol >= 0.0 and resid_norms[it] <= tol:
            break

    return support_arr[:used], gains_arr, resid_arr[:used]


def omp_batch_run(psi, ymat, Py_ssize_t sparsity, double tol=-1.0,
                  bint squared=True):
    """Independent OMP per column of ``ymat`` with shared buffers and shared
    atom denominators; a collapsing column yields None entries instead of
    raising (failure isolation across the batch)."""
    cdef cnp.ndarray psi_f = np.asfortranarray(psi, dtype=np.complex128)
    cdef cnp.ndarray y_f = np.asfortranarray(ymat, dtype=np.complex128)
    cdef zcomplex[::1, :] psi_v = psi_f
    cdef zcomplex[::1, :] y_v = y_f

    cdef Py_ssize_t m = psi_v.shape[0], n_atoms = psi_v.shape[1]
    cdef Py_ssize_t batch = y_v.shape[1]
    cdef Py_ssize_t steps = sparsity if sparsity < n_atoms else n_atoms
    if steps < 0:
        steps = 0

    cdef double[::1] denom = np.empty(n_atoms)
    _column_denominators(psi_v, denom, squared)

    cdef zcomplex[::1] corr = np.empty(n_atoms, dtype=np.complex128)
    cdef zcomplex[::1] residual = np.empty(m, dtype=np.complex128)
    cdef zcomplex[::1, :] phi = np.empty((m, max(steps, 1)), dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] qr_buf = np.empty((m, max(steps, 1)), dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] rhs = np.empty((max(m, steps), 1), dtype=np.complex128, order="F")
    cdef int[::1] selected = np.empty(n_atoms, dtype=np.intc)
    cdef long long[::1] support = np.empty(max(steps, 1), dtype=np.int64)

    cdef int lwork = -1, info = 0, mm = <int>m, kk = <int>max(steps, 1), one = 1
    cdef int ldb_q = <int>rhs.shape[0]
    cdef zcomplex wsize
    zgels(&TRANS_N, &mm, &kk, &one, &qr_buf[0, 0], &mm, &rhs[0, 0], &ldb_q,
          &wsize, &lwork, &info)
    lwork = <int>wsize.real
    cdef zcomplex[::1] work = np.empty(max(lwork, 1), dtype=np.complex128)

    supports = []
    gains = []
    cdef Py_ssize_t b, it, i, j, best, used
    cdef double best_score, score, rnorm
    cdef int nn = <int>n_atoms, status
    cdef bint failed

    for b in range(batch):
        for j in range(n_atoms):
            selected[j] = 0
        for i in range(m):
            residual[i] = y_v[i, b]
        used = 0
        failed = False
        for it in range(steps):
            zgemv(&TRANS_C, &mm, &nn, &Z_ONE, &psi_v[0, 0], &mm,
                  &residual[0], &INT_ONE, &Z_ZERO, &corr[0], &INT_ONE)
            best = -1
            best_score = -1.0
            for j in range(n_atoms):
                if selected[j]:
                    continue
                score = 0.0 if denom[j] <= 0.0 else _cabs(corr[j]) / denom[j]
                if score > best_score:
                    best_score = score
                    best = j
            if best < 0:
                break
            selected[best] = 1
            support[it] = best
            for i in range(m):
                phi[i, it] = psi_v[i, best]
            used = it + 1
            for i in range(m):
                rhs[i, 0] = y_v[i, b]
            status = _lstsq_inplace(phi, used, qr_buf, rhs, 1, work, lwork)
            if status != 0:
                failed = True
                break
            for i in range(m):
                residual[i] = y_v[i, b]
            kk = <int>used
            zgemv(&TRANS_N, &mm, &kk, &Z_MINUS_ONE, &phi[0, 0], &mm,
                  &rhs[0, 0], &INT_ONE, &Z_ONE, &residual[0], &INT_ONE)
            rnorm = dznrm2(&mm, &residual[0], &INT_ONE)
            if tol >= 0.0 and rnorm <= tol:
                break
        if failed:
            supports.append(None)
            gains.append(None)
        else:
            supports.append(np.asarray(support[:used]).copy())
            gains.append(np.asarray(rhs[:used, 0]).copy())
    return supports, gains


def somp_run(psi, ymat, Py_ssize_t sparsity, double tol=-1.0, bint squared=True):
    """Simultaneous OMP; see the pure backend for the full contract."""
    cdef cnp.ndarray psi_f = np.asfortranarray(psi, dtype=np.complex128)
    cdef cnp.ndarray y_f = np.asfortranarray(ymat, dtype=np.complex128)
    cdef zcomplex[::1, :] psi_v = psi_f
    cdef zcomplex[::1, :] y_v = y_f

    cdef Py_ssize_t q = psi_v.shape[0], n_atoms = psi_v.shape[1]
    cdef Py_ssize_t n_meas = y_v.shape[1]
    cdef Py_ssize_t steps = sparsity if sparsity < n_atoms else n_atoms
    if steps < 0:
        steps = 0

    cdef double[::1] denom = np.empty(n_atoms)
    _column_denominators(psi_v, denom, squared)

    cdef cnp.ndarray support_arr = np.empty(steps, dtype=np.int64)
    cdef cnp.ndarray resid_arr = np.empty(steps, dtype=np.float64)
    cdef long long[::1] support = support_arr
    cdef double[::1] resid_norms = resid_arr

    cdef zcomplex[::1, :] proj = np.empty((n_atoms, n_meas), dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] residual = y_f.copy(order="F")
    cdef zcomplex[::1, :] phi = np.empty((q, max(steps, 1)), dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] qr_buf = np.empty((q, max(steps, 1)), dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] rhs = np.empty((max(q, steps), n_meas), dtype=np.complex128, order="F")
    cdef cnp.ndarray coef_arr = np.zeros((0, n_meas), dtype=np.complex128)
    cdef int[::1] selected = np.zeros(n_atoms, dtype=np.intc)

    cdef int lwork = -1, info = 0
    cdef int qq = <int>q, aa = <int>n_atoms, mm_meas = <int>n_meas
    cdef int kk = <int>max(steps, 1)
    cdef int ldb_q = <int>rhs.shape[0]
    cdef zcomplex wsize
    zgels(&TRANS_N, &qq, &kk, &mm_meas, &qr_buf[0, 0], &qq, &rhs[0, 0], &ldb_q,
          &wsize, &lwork, &info)
    lwork = <int>wsize.real
    cdef zcomplex[::1] work = np.empty(max(lwork, 1), dtype=np.complex128)

    cdef Py_ssize_t it, i, j, col, best, used = 0
    cdef double best_score, score, acc
    cdef int status, total
    cdef cnp.ndarray out_coef

    for it in range(steps):
        # proj = psi^H residual
        zgemm(&TRANS_C, &TRANS_N, &aa, &mm_meas, &qq, &Z_ONE, &psi_v[0, 0], &qq,
              &residual[0, 0], &qq, &Z_ZERO, &proj[0, 0], &aa)
        best = -1
        best_score = -1.0
        for j in range(n_atoms):
            if selected[j]:
                continue
            if denom[j] <= 0.0:
                score = 0.0
            else:
                acc = 0.0
                for col in range(n_meas):
                    acc += _cabs(proj[j, col])
                score = acc / denom[j]
            if score > best_score:
                best_score = score
                best = j
        if best < 0:
            break
        selected[best] = 1
        support[it] = best
        for i in range(q):
            phi[i, it] = psi_v[i, best]
        used = it + 1
        for col in range(n_meas):
            for i in range(q):
                rhs[i, col] = y_v[i, col]
        status = _lstsq_inplace(phi, used, qr_buf, rhs, n_meas, work, lwork)
        if status != 0:
            raise SingularSystemError("selected atoms form a singular system")
        for col in range(n_meas):
            for i in range(q):
                residual[i, col] = y_v[i, col]
        kk = <int>used
        zgemm(&TRANS_N, &TRANS_N, &qq, &mm_meas, &kk, &Z_MINUS_ONE, &phi[0, 0], &qq,
              &rhs[0, 0], &qq, &Z_ONE, &residual[0, 0], &qq)
        total = <int>(q * n_meas)
        resid_norms[it] = dznrm2(&total, &residual[0, 0], &INT_ONE)
        if tol >= 0.0 and resid_norms[it] <= tol:
            break

    if used == 0:
        out_coef = coef_arr
    else:
        out_coef = np.asarray(rhs[:used, :]).copy()
    return support_arr[:used], out_coef, resid_arr[:used]


def pad2d_run(psi, ymat, factors, Py_ssize_t sparsity, double tol=-1.0,
              bint squared=True):
    """Greedy 2D (angle, distance) atom search; see the pure backend."""
    cdef cnp.ndarray psi_f = np.asfortranarray(psi, dtype=np.complex128)
    cdef cnp.ndarray y_f = np.asfortranarray(ymat, dtype=np.complex128)
    cdef cnp.ndarray fac_c = np.ascontiguousarray(factors, dtype=np.complex128)
    cdef zcomplex[::1, :] psi_v = psi_f
    cdef zcomplex[::1, :] y_v = y_f
    cdef zcomplex[:, :, ::1] fac = fac_c

    cdef Py_ssize_t q = psi_v.shape[0], num_angles = psi_v.shape[1]
    cdef Py_ssize_t n_meas = y_v.shape[1], num_dists = fac.shape[1]
    cdef Py_ssize_t n_pairs = num_angles * num_dists
    cdef Py_ssize_t steps = sparsity if sparsity < n_pairs else n_pairs
    if steps < 0:
        steps = 0
    cdef Py_ssize_t stacked_len = q * n_meas

    cdef double[::1] denom = np.empty(num_angles)
    _column_denominators(psi_v, denom, squared)

    cdef cnp.ndarray pairs_arr = np.empty((steps, 2), dtype=np.int64)
    cdef cnp.ndarray resid_arr = np.empty(steps, dtype=np.float64)
    cdef long long[:, ::1] pairs = pairs_arr if steps > 0 else np.empty((1, 2), dtype=np.int64)
    cdef double[::1] resid_norms = resid_arr if steps > 0 else np.empty(1)

    cdef zcomplex[::1, :] proj = np.empty((num_angles, n_meas), dtype=np.complex128, order="F")
    # residual matrix shares storage with its stacked vector view
    cdef cnp.ndarray resid_mat = y_f.copy(order="F")
    cdef zcomplex[::1, :] residual = resid_mat
    cdef zcomplex[::1] yvec = y_f.reshape(-1, order="F").copy()
    cdef zcomplex[::1, :] x_cols = np.empty((stacked_len, max(steps, 1)),
                                            dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] qr_buf = np.empty((stacked_len, max(steps, 1)),
                                            dtype=np.complex128, order="F")
    cdef zcomplex[::1, :] rhs = np.empty((max(stacked_len, steps), 1), dtype=np.complex128, order="F")
    cdef cnp.ndarray gains_arr = np.zeros(0, dtype=np.complex128)
    cdef int[::1] selected = np.zeros(n_pairs, dtype=np.intc)  # flat = c*A + a

    cdef int lwork = -1, info = 0
    cdef int ll = <int>stacked_len, kk = <int>max(steps, 1), one = 1
    cdef int ldb_q = <int>rhs.shape[0]
    cdef zcomplex wsize
    zgels(&TRANS_N, &ll, &kk, &one, &qr_buf[0, 0], &ll, &rhs[0, 0], &ldb_q,
          &wsize, &lwork, &info)
    lwork = <int>wsize.real
    cdef zcomplex[::1] work = np.empty(max(lwork, 1), dtype=np.complex128)

    cdef int qq = <int>q, aa = <int>num_angles, mm_meas = <int>n_meas
    cdef Py_ssize_t it, i, j, a, c, col, best_a, best_c, used = 0
    cdef double best_score, score, acc_re, acc_im
    cdef zcomplex s_val, b_val
    cdef int status

    for it in range(steps):
        # proj = psi^H residual, shape (A, M)
        zgemm(&TRANS_C, &TRANS_N, &aa, &mm_meas, &qq, &Z_ONE, &psi_v[0, 0], &qq,
              &residual[0, 0], &qq, &Z_ZERO, &proj[0, 0], &aa)
        best_a = -1
        best_c = -1
        best_score = -1.0
        for c in range(num_dists):
            for a in range(num_angles):
                if selected[c * num_angles + a]:
                    continue
                if denom[a] <= 0.0:
                    score = 0.0
                else:
                    # | sum_m proj[a, m] * conj(fac[a, c, m]) |
                    acc_re = 0.0
                    acc_im = 0.0
                    for col in range(n_meas):
                        s_val = proj[a, col]
                        b_val = fac[a, c, col]
                        acc_re += s_val.real * b_val.real + s_val.imag * b_val.imag
                        acc_im += s_val.imag * b_val.real - s_val.real * b_val.imag
                    score = sqrt(acc_re * acc_re + acc_im * acc_im) / denom[a]
                if score > best_score:
                    best_score = score
                    best_a = a
                    best_c = c
        if best_a < 0:
            break
        selected[best_c * num_angles + best_a] = 1
        pairs[it, 0] = best_a
        pairs[it, 1] = best_c
        # measured 2D atom vectorizes to kron(b_factor, psi column)
        for col in range(n_meas):
            b_val = fac[best_a, best_c, col]
            for i in range(q):
                x_cols[col * q + i, it] = b_val * psi_v[i, best_a]
        used = it + 1
        for i in range(stacked_len):
            rhs[i, 0] = yvec[i]
        status = _lstsq_inplace(x_cols, used, qr_buf, rhs, 1, work, lwork)
        if status != 0:
            raise SingularSystemError("selected atoms form a singular system")
        for col in range(n_meas):
            for i in range(q):
                residual[i, col] = y_v[i, col]
        kk = <int>used
        zgemv(&TRANS_N, &ll, &kk, &Z_MINUS_ONE, &x_cols[0, 0], &ll,
              &rhs[0, 0], &INT_ONE, &Z_ONE, &residual[0, 0], &INT_ONE)
        resid_norms[it] = dznrm2(&ll, &residual[0, 0], &INT_ONE)
        gains_arr = np.asarray(rhs[:used, 0]).copy()
        if tol >= 0.0 and resid_norms[it] <= tol:
            break

    return pairs_arr[:used], gains_arr, resid_arr[:used]
