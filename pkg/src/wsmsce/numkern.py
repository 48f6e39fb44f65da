"""Complex matrix kernel used by the estimators and the combiner optimizer.

Thin, contract-enforcing wrappers around numpy's LAPACK-backed linear
algebra: SVD, stable least squares, Kronecker products, column-stacking
vectorization, and orthogonal-complement projectors.  All functions are
pure and never mutate their inputs.
"""

import numpy as np

from .errors import SingularSystemError

# Condition number beyond which a system is declared singular; separates
# duplicate-atom pathologies from legitimate ill-conditioning in doubles.
COND_LIMIT = 1e12


def _as_complex_matrix(m, name="matrix"):
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-D array")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _as_complex_vector(v, name="vector"):
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D array")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def svd(m):
    """Thin SVD of a complex matrix.

    Returns (u, sigma, v) with orthonormal columns in u and v and sigma
    sorted descending, such that m = u @ diag(sigma) @ v.conj().T.
    """
    m = _as_complex_matrix(m)
    u, sigma, vh = np.linalg.svd(m, full_matrices=False)
    return u, sigma, vh.conj().T


def ls_solve(a, y):
    """Least-squares solution of min_x ||y - a x||_2 for full-column-rank a.

    Equals the pseudo-inverse solution (a^H a)^-1 a^H y but is computed
    through the SVD for numerical stability.  ``y`` may also be a matrix of
    stacked right-hand sides.

    Raises SingularSystemError when a is rank deficient (condition estimate
    beyond COND_LIMIT) or has fewer rows than columns.
    """
    a = _as_complex_matrix(a, "system matrix")
    y = np.asarray(y, dtype=np.complex128)
    rows, cols = a.shape
    if rows < cols:
        raise SingularSystemError(
            f"system is underdetermined ({rows} rows < {cols} cols)"
        )
    if y.shape[0] != rows:
        raise ValueError("right-hand side length does not match the matrix")
    u, sigma, vh = np.linalg.svd(a, full_matrices=False)
    if sigma[-1] == 0.0 or sigma[0] / sigma[-1] > COND_LIMIT:
        raise SingularSystemError("system matrix is singular or near-singular")
    proj = u.conj().T @ y
    if proj.ndim == 1:
        proj = proj / sigma
    else:
        proj = proj / sigma[:, None]
    return vh.conj().T @ proj


def kron(b, a):
    """Kronecker product of two vectors; block m of the result is b[m] * a."""
    b = _as_complex_vector(b, "left factor")
    a = _as_complex_vector(a, "right factor")
    return np.kron(b, a)


def vec(m):
    """Column-stacking vectorization of a matrix."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("vec expects a 2-D array")
    return m.ravel(order="F")


def devec(v, rows):
    """Inverse of :func:`vec`: reshape a vector into ``rows`` x (len/rows),
    filling column by column.  Exact round trip with :func:`vec`."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("devec expects a 1-D array")
    if rows < 1 or v.size % rows != 0:
        raise ValueError(f"length {v.size} is not divisible by {rows} rows")
    return v.reshape((rows, v.size // rows), order="F")


def orth_complement_projector(phi):
    """Projector onto the orthogonal complement of the column space of phi.

    Returns P = I - phi (phi^H phi)^-1 phi^H, computed from a QR basis.
    P is Hermitian, idempotent, and annihilates phi.
    """
    phi = _as_complex_matrix(phi, "phi")
    sigma = np.linalg.svd(phi, compute_uv=False)
    if sigma[-1] == 0.0 or sigma[0] / sigma[-1] > COND_LIMIT:
        raise SingularSystemError("phi is rank deficient")
    q, _ = np.linalg.qr(phi)
    return np.eye(phi.shape[0], dtype=np.complex128) - q @ q.conj().T
