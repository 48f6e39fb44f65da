"""Pure-numpy greedy-pursuit loops; reference semantics for the compiled
backend.  All three loops share the conventions:

* scores divide the residual correlation by the measured-atom norm, either
  squared (``squared=True``) or plain;
* ties break toward the lowest flat atom index (angle-major for 2D pairs);
* gains are refit by least squares against the original observation every
  iteration, so residual norms are non-increasing;
* iteration stops after ``sparsity`` picks or once the residual norm drops
  to ``tol`` (pass a negative ``tol`` to disable the early stop).
"""

import numpy as np

from ..errors import SingularSystemError

# matches the shared numkern threshold; kernels avoid importing numkern to
# keep the layering flat
_COND_LIMIT = 1e12


def _ls(a, b):
    """SVD least squares with a singularity guard."""
    u, sigma, vh = np.linalg.svd(a, full_matrices=False)
    if sigma[-1] == 0.0 or sigma[0] / sigma[-1] > _COND_LIMIT:
        raise SingularSystemError("selected atoms form a singular system")
    proj = u.conj().T @ b
    if proj.ndim == 1:
        proj = proj / sigma
    else:
        proj = proj / sigma[:, None]
    return vh.conj().T @ proj


def lstsq(a, b):
    """Stable least squares min ||b - a x|| with the shared singularity
    guard; ``b`` may be a vector or a matrix of right-hand sides."""
    return _ls(np.asarray(a, dtype=np.complex128),
               np.asarray(b, dtype=np.complex128))


def _denominators(psi, squared):
    """Per-atom score denominators; zero-norm atoms map to inf so their
    score is exactly zero (their correlations vanish too)."""
    norms = np.linalg.norm(psi, axis=0)
    p = norms * norms if squared else norms
    return np.where(norms > 0.0, p, np.inf)


def omp_run(psi, y, sparsity, tol=-1.0, squared=True):
    """Orthogonal matching pursuit on a single measurement vector.

    Returns (support, gains, residual_norms); ``gains`` solve the least
    squares fit of the selected columns against ``y``.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    n_atoms = psi.shape[1]
    steps = min(sparsity, n_atoms)
    denom = _denominators(psi, squared)
    selected = np.zeros(n_atoms, dtype=bool)
    support = []
    resid_norms = []
    gains = np.zeros(0, dtype=np.complex128)
    residual = y
    for _ in range(steps):
        scores = np.abs(psi.conj().T @ residual) / denom
        scores[selected] = -np.inf
        best = int(np.argmax(scores))
        selected[best] = True
        support.append(best)
        phi = psi[:, support]
        gains = _ls(phi, y)
        residual = y - phi @ gains
        resid_norms.append(float(np.linalg.norm(residual)))
        if 0.0 <= tol and resid_norms[-1] <= tol:
            break
    return np.asarray(support, dtype=np.int64), gains, np.asarray(resid_norms)


def omp_batch_run(psi, ymat, sparsity, tol=-1.0, squared=True):
    """Independent OMP for every column of ``ymat`` against a shared
    dictionary.  Returns (supports, gains) lists, one entry per column;
    a column whose atom set collapses yields None in both lists.
    """
    ymat = np.asarray(ymat, dtype=np.complex128)
    supports = []
    gains = []
    for col in range(ymat.shape[1]):
        try:
            support, g, _ = omp_run(psi, ymat[:, col], sparsity, tol, squared)
            supports.append(support)
            gains.append(g)
        except SingularSystemError:
            supports.append(None)
            gains.append(None)
    return supports, gains


def somp_run(psi, ymat, sparsity, tol=-1.0, squared=True):
    """Simultaneous OMP: one support shared by every column of ``ymat``.

    Scores sum the correlation magnitudes across measurement vectors.
    Returns (support, coefficients, residual_norms) where ``coefficients``
    is the joint least-squares fit (len(support) x M) against ``ymat`` and
    residual norms are Frobenius.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    ymat = np.asarray(ymat, dtype=np.complex128)
    n_atoms = psi.shape[1]
    steps = min(sparsity, n_atoms)
    denom = _denominators(psi, squared)
    selected = np.zeros(n_atoms, dtype=bool)
    support = []
    resid_norms = []
    coef = np.zeros((0, ymat.shape[1]), dtype=np.complex128)
    residual = ymat
    for _ in range(steps):
        scores = np.abs(psi.conj().T @ residual).sum(axis=1) / denom
        scores[selected] = -np.inf
        best = int(np.argmax(scores))
        selected[best] = True
        support.append(best)
        phi = psi[:, support]
        coef = _ls(phi, ymat)
        residual = ymat - phi @ coef
        resid_norms.append(float(np.linalg.norm(residual)))
        if 0.0 <= tol and resid_norms[-1] <= tol:
            break
    return np.asarray(support, dtype=np.int64), coef, np.asarray(resid_norms)


def pad2d_run(psi, ymat, factors, sparsity, tol=-1.0, squared=True):
    """Greedy 2D atom search over (angle, distance) pairs.

    ``psi`` (Q x A) holds the measured angular atoms and ``factors``
    (A x C x M) the inter-subarray factor for every pair, so the measured
    2D atom for (a, c) vectorizes to kron(factors[a, c], psi[:, a]).  The
    pair score is |psi_a^H R conj(b_ac)| over the denominator of angle a.
    Returns (pairs, gains, residual_norms) with pairs shaped (k, 2).
    """
    psi = np.asarray(psi, dtype=np.complex128)
    ymat = np.asarray(ymat, dtype=np.complex128)
    factors = np.asarray(factors, dtype=np.complex128)
    num_angles = psi.shape[1]
    num_dists = factors.shape[1]
    steps = min(sparsity, num_angles * num_dists)
    denom = _denominators(psi, squared)
    yvec = ymat.ravel(order="F")
    selected = np.zeros(num_dists * num_angles, dtype=bool)  # flat = c*A + a
    pairs = []
    columns = []
    resid_norms = []
    gains = np.zeros(0, dtype=np.complex128)
    residual = ymat
    for _ in range(steps):
        proj = psi.conj().T @ residual                      # (A, M)
        corr = np.abs(np.einsum("am,acm->ac", proj, factors.conj()))
        scores = corr / denom[:, None]
        flat_scores = scores.T.ravel()                      # angle-major flat order
        flat_scores[selected] = -np.inf
        best = int(np.argmax(flat_scores))
        a, c = best % num_angles, best // num_angles
        selected[best] = True
        pairs.append((a, c))
        columns.append(np.kron(factors[a, c], psi[:, a]))
        x = np.column_stack(columns)
        gains = _ls(x, yvec)
        rvec = yvec - x @ gains
        residual = rvec.reshape(ymat.shape, order="F")
        resid_norms.append(float(np.linalg.norm(rvec)))
        if 0.0 <= tol and resid_norms[-1] <= tol:
            break
    return np.asarray(pairs, dtype=np.int64), gains, np.asarray(resid_norms)
