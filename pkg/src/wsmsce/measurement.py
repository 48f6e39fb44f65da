"""Combining-matrix generation and pilot acquisition.

Every subarray shares one N x Q analog combiner with constant-modulus
entries (phased-array constraint).  Columns are normalized to unit norm so
the per-measurement noise power after combining equals the element-level
noise variance, making SNR = 1 / noise_variance meaningful at the output.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .numkern import vec

KIND_RANDOM = "random"
KIND_OPTIMIZED = "optimized"
COMBINER_KINDS = (KIND_RANDOM, KIND_OPTIMIZED)


@dataclass(frozen=True)
class CombinerMatrix:
    """Per-subarray combining matrix with constant-modulus entries."""

    matrix: np.ndarray  # (N, Q)
    kind: str
    column_norm: float = 1.0

    @property
    def num_antennas(self):
        return self.matrix.shape[0]

    @property
    def num_pilots(self):
        return self.matrix.shape[1]


@dataclass(frozen=True)
class Observation:
    """Combined pilots: column m of ``pilot_matrix`` (Q x M) holds subarray
    m's measurements and ``stacked`` is their column-stacked concatenation."""

    stacked: np.ndarray       # (M*Q,)
    pilot_matrix: np.ndarray  # (Q, M)
    noise_variance: float
    seed: object = None


def random_combiner(n_antennas, n_pilots, seed):
    """Constant-modulus combiner with i.i.d. uniform phases."""
    if n_pilots > n_antennas:
        warnings.warn(
            f"more pilots ({n_pilots}) than antennas per subarray "
            f"({n_antennas}); extra measurements are redundant",
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_antennas, n_pilots))
    w = np.exp(1j * phases) / math.sqrt(n_antennas)
    return CombinerMatrix(matrix=w, kind=KIND_RANDOM)


def _unconstrained_from_rng(n_antennas, n_pilots, rng):
    if n_pilots > n_antennas:
        raise ValueError("needs n_pilots <= n_antennas")
    u1, _ = np.linalg.qr(
        rng.standard_normal((n_antennas, n_antennas))
        + 1j * rng.standard_normal((n_antennas, n_antennas))
    )
    v1, _ = np.linalg.qr(
        rng.standard_normal((n_pilots, n_pilots))
        + 1j * rng.standard_normal((n_pilots, n_pilots))
    )
    return u1[:, :n_pilots] @ v1.conj().T


def unconstrained_combiner(n_antennas, n_pilots, seed):
    """Minimizer of the total coherence ||I - W^H W||_F^2 without the
    modulus constraint: all singular values one, i.e. orthonormal columns
    U1[:, :Q] V1^H built from seeded random unitaries."""
    return _unconstrained_from_rng(n_antennas, n_pilots, np.random.default_rng(seed))


def optimized_combiner(n_antennas, n_pilots, seed):
    """Coherence-optimized combiner: the unconstrained minimizer projected
    entrywise onto the constant-modulus set, columns rescaled to unit norm."""
    rng = np.random.default_rng(seed)
    for _ in range(8):  # redraw on an exactly-zero entry (probability zero)
        w0 = _unconstrained_from_rng(n_antennas, n_pilots, rng)
        mags = np.abs(w0)
        if np.all(mags > 0.0):
            w = (w0 / mags) / math.sqrt(n_antennas)
            return CombinerMatrix(matrix=w, kind=KIND_OPTIMIZED)
    raise RuntimeError("could not draw a zero-free combiner")


def make_combiner(kind, n_antennas, n_pilots, seed):
    if kind == KIND_RANDOM:
        return random_combiner(n_antennas, n_pilots, seed)
    if kind == KIND_OPTIMIZED:
        return optimized_combiner(n_antennas, n_pilots, seed)
    raise ValueError(f"unknown combiner kind {kind!r}")


def total_coherence(w):
    """||I_Q - W^H W||_F^2 of a combiner or raw matrix."""
    if isinstance(w, CombinerMatrix):
        w = w.matrix
    q = w.shape[1]
    gram = w.conj().T @ w
    diff = np.eye(q, dtype=np.complex128) - gram
    return float(np.sum(np.abs(diff) ** 2))


def snr_to_noise_variance(snr_db):
    """Noise variance for unit transmit power: 10^(-snr_db / 10)."""
    return 10.0 ** (-snr_db / 10.0)


def acquire(channel, combiner, noise_variance, seed):
    """Collect pilots: per subarray m, y_m = W^H (h_m + n_m) with n_m drawn
    i.i.d. circular complex Gaussian per element at the given variance."""
    w = combiner.matrix
    h_mat = channel.subarray_matrix
    if w.shape[0] != h_mat.shape[0]:
        raise ValueError(
            f"combiner rows ({w.shape[0]}) do not match antennas per "
            f"subarray ({h_mat.shape[0]})"
        )
    rng = np.random.default_rng(seed)
    if noise_variance > 0.0:
        scale = math.sqrt(noise_variance / 2.0)
        noise = scale * (
            rng.standard_normal(h_mat.shape) + 1j * rng.standard_normal(h_mat.shape)
        )
        y_mat = w.conj().T @ (h_mat + noise)
    else:
        y_mat = w.conj().T @ h_mat
    return Observation(
        stacked=vec(y_mat),
        pilot_matrix=y_mat,
        noise_variance=noise_variance,
        seed=seed,
    )
