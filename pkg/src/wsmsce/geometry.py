"""Widely-spaced multi-subarray geometry and near-field channel synthesis.

A linear array of ``num_subarrays`` uniform subarrays (``antennas_per_subarray``
elements each, spacing ``element_spacing``) sits along one axis with subarray
pitch ``subarray_spacing``.  The exact array response uses the spherical
wavefront evaluated at every element; the cross-field response keeps the
spherical wavefront between subarray reference elements but a plane wave
inside each subarray, which factorizes it into a Kronecker product.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numkern import devec

SPEED_OF_LIGHT = 3.0e8  # m/s

MODEL_EXACT = "exact"
MODEL_CROSS = "cross-field"
CHANNEL_MODELS = (MODEL_EXACT, MODEL_CROSS)


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry of one widely-spaced multi-subarray receiver.

    Attributes
    ----------
    num_subarrays : int
        Number of subarrays (one RF chain each).
    antennas_per_subarray : int
        Elements per subarray.
    element_spacing : float
        Spacing between adjacent elements inside a subarray, meters.
    subarray_spacing : float
        Spacing between subarray reference elements, meters.  Must be at
        least ``antennas_per_subarray * element_spacing`` so subarrays do
        not overlap.
    wavelength : float
        Carrier wavelength, meters.
    """

    num_subarrays: int
    antennas_per_subarray: int
    element_spacing: float
    subarray_spacing: float
    wavelength: float

    def __post_init__(self):
        if self.num_subarrays < 1 or self.antennas_per_subarray < 1:
            raise ValueError("array needs at least one subarray and one element")
        if self.element_spacing <= 0 or self.wavelength <= 0:
            raise ValueError("spacings and wavelength must be positive")
        min_pitch = self.antennas_per_subarray * self.element_spacing
        if self.subarray_spacing < min_pitch:
            raise ValueError(
                f"subarray spacing {self.subarray_spacing} lets subarrays overlap "
                f"(needs >= {min_pitch})"
            )

    @property
    def num_elements(self):
        return self.num_subarrays * self.antennas_per_subarray

    @classmethod
    def from_frequency(
        cls,
        frequency_hz=1.0e11,
        num_subarrays=8,
        antennas_per_subarray=24,
        element_spacing=None,
        subarray_spacing=None,
    ):
        """Standard setup: half-wavelength elements, subarray pitch of one
        subarray aperture plus eight wavelengths."""
        lam = SPEED_OF_LIGHT / frequency_hz
        d = lam / 2.0 if element_spacing is None else element_spacing
        big_d = antennas_per_subarray * d + 8.0 * lam if subarray_spacing is None else subarray_spacing
        return cls(num_subarrays, antennas_per_subarray, d, big_d, lam)


@dataclass(frozen=True)
class PathSet:
    """Propagation paths: angle (radians), distance to the reference element
    (meters) and complex gain per path."""

    angles: np.ndarray
    distances: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        angles = np.atleast_1d(np.asarray(self.angles, dtype=np.float64))
        distances = np.atleast_1d(np.asarray(self.distances, dtype=np.float64))
        gains = np.atleast_1d(np.asarray(self.gains, dtype=np.complex128))
        if not (len(angles) == len(distances) == len(gains)) or len(angles) == 0:
            raise ValueError("angles, distances and gains must share a nonzero length")
        if np.any(distances <= 0):
            raise ValueError("path distances must be positive")
        if np.any(np.abs(np.sin(angles)) > 1.0):
            raise ValueError("angles must be physical")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "distances", distances)
        object.__setattr__(self, "gains", gains)

    @property
    def num_paths(self):
        return len(self.angles)


@dataclass(frozen=True)
class ChannelRealization:
    """One synthesized channel: the stacked vector over all elements and its
    per-subarray matrix form (vec(subarray_matrix) == coeffs exactly)."""

    coeffs: np.ndarray          # (M*N,)
    subarray_matrix: np.ndarray  # (N, M), column m = subarray m
    model: str


def element_position(cfg, subarray_idx, element_idx):
    """Axial position (meters) of element ``element_idx`` of subarray
    ``subarray_idx``; both indices are 1-based, the first element of the
    first subarray sits at 0."""
    if not 1 <= subarray_idx <= cfg.num_subarrays:
        raise IndexError(f"subarray index {subarray_idx} out of range")
    if not 1 <= element_idx <= cfg.antennas_per_subarray:
        raise IndexError(f"element index {element_idx} out of range")
    return (subarray_idx - 1) * cfg.subarray_spacing + (element_idx - 1) * cfg.element_spacing


def exact_distance(r, theta, p):
    """Source-to-element distance for a source at range ``r`` / angle
    ``theta`` and an element at axial position ``p``."""
    if np.any(np.asarray(r) <= 0):
        raise ValueError("source distance must be positive")
    return np.sqrt(r * r - 2.0 * r * p * np.sin(theta) + p * p)


def fresnel_distance(r, theta, p):
    """Second-order expansion of :func:`exact_distance` in p/r:
    r - p sin(theta) + p^2 (1 - sin^2(theta)) / (2 r).

    Valid only for p < r; the relative error decays as (p/r)^3.
    """
    if np.any(np.asarray(r) <= 0):
        raise ValueError("source distance must be positive")
    if np.any(np.asarray(p) >= np.asarray(r)):
        raise ValueError("expansion requires p < r")
    s = np.sin(theta)
    return r - p * s + p * p * (1.0 - s * s) / (2.0 * r)


@lru_cache(maxsize=64)
def _element_positions(cfg):
    # cached per frozen config; treat the result as read-only
    m_idx = np.repeat(np.arange(cfg.num_subarrays, dtype=np.float64),
                      cfg.antennas_per_subarray)
    n_idx = np.tile(np.arange(cfg.antennas_per_subarray, dtype=np.float64),
                    cfg.num_subarrays)
    pos = m_idx * cfg.subarray_spacing + n_idx * cfg.element_spacing
    pos.setflags(write=False)
    return pos

@lru_cache(maxsize=64)
def _subarray_positions(cfg):
    pos = np.arange(cfg.num_subarrays, dtype=np.float64) * cfg.subarray_spacing
    pos.setflags(write=False)
    return pos


def steering_exact(cfg, theta, r):
    """Unit-norm spherical-wavefront response over all M*N elements,
    referenced to the first element (subarray-major element order)."""
    if r <= 0:
        raise ValueError("source distance must be positive")
    p = _element_positions(cfg)
    delays = np.sqrt(r * r - 2.0 * r * p * np.sin(theta) + p * p) - r
    phase = (-2.0 * np.pi / cfg.wavelength) * delays
    return np.exp(1j * phase) / math.sqrt(cfg.num_elements)


def steering_subarray(cfg, theta):
    """Unit-norm plane-wave response of one subarray."""
    n = np.arange(cfg.antennas_per_subarray, dtype=np.float64)
    phase = (2.0 * np.pi / cfg.wavelength) * n * cfg.element_spacing * np.sin(theta)
    return np.exp(1j * phase) / math.sqrt(cfg.antennas_per_subarray)


def steering_intersub(cfg, theta, r):
    """Unit-norm spherical-wavefront response across subarray reference
    elements."""
    if r <= 0:
        raise ValueError("source distance must be positive")
    p = _subarray_positions(cfg)
    delays = np.sqrt(r * r - 2.0 * r * p * np.sin(theta) + p * p) - r
    phase = (-2.0 * np.pi / cfg.wavelength) * delays
    return np.exp(1j * phase) / math.sqrt(cfg.num_subarrays)


def steering_intersub_grid(cfg, theta, r_values):
    """Inter-subarray responses at one angle for many distances, stacked as
    columns of an (M, len(r_values)) matrix."""
    r = np.asarray(r_values, dtype=np.float64)[None, :]
    if np.any(r <= 0):
        raise ValueError("source distances must be positive")
    p = _subarray_positions(cfg)[:, None]
    delays = np.sqrt(r * r - 2.0 * r * p * np.sin(theta) + p * p) - r
    phase = (-2.0 * np.pi / cfg.wavelength) * delays
    return np.exp(1j * phase) / math.sqrt(cfg.num_subarrays)


def steering_crossfield(cfg, theta, r):
    """Cross-field response: spherical between subarrays, planar inside each,
    i.e. the Kronecker product of the inter-subarray and subarray responses."""
    return np.kron(steering_intersub(cfg, theta, r), steering_subarray(cfg, theta))


_STEERING = {
    MODEL_EXACT: steering_exact,
    MODEL_CROSS: steering_crossfield,
}


def steering(cfg, theta, r, model=MODEL_EXACT):
    """Array response under the selected wavefront model."""
    try:
        fn = _STEERING[model]
    except KeyError:
        raise ValueError(f"unknown channel model {model!r}") from None
    return fn(cfg, theta, r)


def steering_many(cfg, thetas, rs, model=MODEL_EXACT):
    """Responses for several (theta, r) pairs stacked as columns of an
    (M*N, len(thetas)) matrix; one broadcast evaluation per model."""
    thetas = np.asarray(thetas, dtype=np.float64)
    rs = np.asarray(rs, dtype=np.float64)
    if np.any(rs <= 0):
        raise ValueError("source distances must be positive")
    scale = -2.0 * np.pi / cfg.wavelength
    sines = np.sin(thetas)[None, :]
    r = rs[None, :]
    if model == MODEL_EXACT:
        p = _element_positions(cfg)[:, None]
        delays = np.sqrt(r * r - (2.0 * r * sines) * p + p * p) - r
        return np.exp((1j * scale) * delays) / math.sqrt(cfg.num_elements)
    if model == MODEL_CROSS:
        n = np.arange(cfg.antennas_per_subarray, dtype=np.float64)[:, None]
        a_fac = np.exp(((-1j * scale) * cfg.element_spacing) * (n * sines))
        a_fac /= math.sqrt(cfg.antennas_per_subarray)
        p = _subarray_positions(cfg)[:, None]
        delays = np.sqrt(r * r - (2.0 * r * sines) * p + p * p) - r
        b_fac = np.exp((1j * scale) * delays) / math.sqrt(cfg.num_subarrays)
        cols = np.einsum("ml,nl->mnl", b_fac, a_fac)
        return cols.reshape(cfg.num_elements, len(thetas))
    raise ValueError(f"unknown channel model {model!r}")


def synth_channel(cfg, paths, model=MODEL_EXACT):
    """Multipath channel sqrt(M N / L) * sum_l gain_l * response(theta_l, r_l)."""
    h = np.zeros(cfg.num_elements, dtype=np.complex128)
    for theta, r, z in zip(paths.angles, paths.distances, paths.gains):
        h += z * steering(cfg, theta, r, model)
    h *= math.sqrt(cfg.num_elements / paths.num_paths)
    return ChannelRealization(
        coeffs=h,
        subarray_matrix=devec(h, cfg.antennas_per_subarray),
        model=model,
    )


def fraunhofer_distance(cfg):
    """Near/far-field boundary 2 * aperture^2 / wavelength for the full
    array aperture M * subarray_spacing."""
    aperture = cfg.num_subarrays * cfg.subarray_spacing
    return 2.0 * aperture * aperture / cfg.wavelength
