"""Grid samplers and dictionary builders for the three sparse channel
representations: the full polar (angle-distance) dictionary, the per-subarray
angular dictionary, the inter-subarray angle-distance dictionary, and the
rank-one 2D atoms formed from the latter two.

Atom ordering in the angle-distance dictionaries is angle-major: the flat
index of the pair (a, c) is c * A + a, so the angle index cycles fastest.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DictionaryBudgetError
from .geometry import steering_exact, steering_intersub, steering_subarray

# Refuse to materialize polar dictionaries beyond this many complex entries
# unless the caller raises the budget explicitly (~0.5 GB at complex128).
DEFAULT_ELEMENT_BUDGET = 33_554_432


@dataclass(frozen=True)
class AngleGrid:
    """Angle samples stored as sin(theta) values plus the matching angles."""

    sin_values: np.ndarray
    angles: np.ndarray

    @property
    def num_samples(self):
        return len(self.sin_values)


@dataclass(frozen=True)
class DistanceGrid:
    """Distance samples in meters, strictly increasing."""

    r_values: np.ndarray
    mode: str

    @property
    def num_samples(self):
        return len(self.r_values)


def make_angle_grid(num_samples, sin_window=None):
    """DFT-style angle grid: sin(theta) in {-1, -1 + 2/A, ..., 1 - 2/A},
    optionally restricted to a closed sin window."""
    if num_samples < 1:
        raise ValueError("need at least one angle sample")
    sins = -1.0 + 2.0 * np.arange(num_samples, dtype=np.float64) / num_samples
    if sin_window is not None:
        lo, hi = sin_window
        keep = (sins >= lo - 1e-12) & (sins <= hi + 1e-12)
        sins = sins[keep]
        if sins.size == 0:
            raise ValueError(f"no grid samples inside sin window ({lo}, {hi})")
    return AngleGrid(sin_values=sins, angles=np.arcsin(sins))


def make_distance_grid(num_samples, r_min, r_max, mode="reciprocal"):
    """Distance grid over [r_min, r_max].

    ``reciprocal`` spaces 1/r uniformly (denser sampling at short range,
    the spacing that keeps spherical-wavefront atoms near-orthogonal);
    ``uniform`` spaces r uniformly.  Both endpoints are included whenever
    num_samples >= 2.
    """
    if num_samples < 1:
        raise ValueError("need at least one distance sample")
    if not 0 < r_min < r_max:
        raise ValueError(f"invalid distance range [{r_min}, {r_max}]")
    if mode == "uniform":
        r = np.linspace(r_min, r_max, num_samples)
    elif mode == "reciprocal":
        inv = np.linspace(1.0 / r_min, 1.0 / r_max, num_samples)
        r = 1.0 / inv
        r[0] = r_min
        r[-1] = r_max
    else:
        raise ValueError(f"unknown distance sampling mode {mode!r}")
    return DistanceGrid(r_values=r, mode=mode)


def _flat_index(a, c, num_angles):
    return c * num_angles + a


def _pair_arrays(angle_grid, dist_grid):
    """Per-flat-index angle and distance values, angle-major order."""
    num_a = angle_grid.num_samples
    num_c = dist_grid.num_samples
    atom_angles = np.tile(angle_grid.angles, num_c)
    atom_sins = np.tile(angle_grid.sin_values, num_c)
    atom_dists = np.repeat(dist_grid.r_values, num_a)
    return atom_angles, atom_sins, atom_dists


@dataclass(frozen=True)
class PdDictionary:
    """Polar-domain dictionary over the full array: one exact spherical-wave
    atom per (angle, distance) grid pair."""

    matrix: np.ndarray  # (M*N, A*C)
    angle_grid: AngleGrid
    distance_grid: DistanceGrid

    @property
    def num_atoms(self):
        return self.matrix.shape[1]

    def flat_index(self, a, c):
        return _flat_index(a, c, self.angle_grid.num_samples)

    def atom_params(self, flat):
        """Flat atom index -> (angle index, distance index)."""
        num_a = self.angle_grid.num_samples
        return flat % num_a, flat // num_a

    def atom_angle(self, flat):
        return self.angle_grid.angles[flat % self.angle_grid.num_samples]

    def atom_distance(self, flat):
        return self.distance_grid.r_values[flat // self.angle_grid.num_samples]


@dataclass(frozen=True)
class AngularDictionary:
    """Plane-wave dictionary of one subarray, one atom per angle sample."""

    matrix: np.ndarray  # (N, A)
    grid: AngleGrid

    @property
    def num_atoms(self):
        return self.matrix.shape[1]


@dataclass(frozen=True)
class InterSubDictionary:
    """Angle-distance dictionary across subarray reference elements; same
    angle-major atom indexing as :class:`PdDictionary`."""

    matrix: np.ndarray  # (M, A*C)
    angle_grid: AngleGrid
    distance_grid: DistanceGrid

    @property
    def num_atoms(self):
        return self.matrix.shape[1]

    def flat_index(self, a, c):
        return _flat_index(a, c, self.angle_grid.num_samples)


@dataclass(frozen=True)
class Pad2dDictionary:
    """Handle over the angular and inter-subarray factor dictionaries.

    2D atoms are rank-one N x M matrices a(theta_a) b(theta_a, r_c)^T,
    generated on demand rather than materialized as a fourth-order tensor.
    """

    angular: AngularDictionary
    intersub: InterSubDictionary
    # (A, C, M) view of the inter-subarray factors used by the 2D atom search
    factors: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        num_a = self.angular.num_atoms
        num_m = self.intersub.matrix.shape[0]
        num_c = self.intersub.distance_grid.num_samples
        fac = np.ascontiguousarray(
            self.intersub.matrix.reshape(num_m, num_c, num_a).transpose(2, 1, 0)
        )
        object.__setattr__(self, "factors", fac)

    @property
    def num_angles(self):
        return self.angular.num_atoms

    @property
    def num_distances(self):
        return self.intersub.distance_grid.num_samples

    def atom(self, a, c):
        """Rank-one 2D atom for angle index a and distance index c."""
        if not (0 <= a < self.num_angles and 0 <= c < self.num_distances):
            raise IndexError(f"atom index ({a}, {c}) out of range")
        flat = self.intersub.flat_index(a, c)
        return np.outer(self.angular.matrix[:, a], self.intersub.matrix[:, flat])


def build_pd_dictionary(cfg, angle_grid, dist_grid, element_budget=DEFAULT_ELEMENT_BUDGET):
    """Polar dictionary with one exact steering vector per grid pair."""
    num_atoms = angle_grid.num_samples * dist_grid.num_samples
    total = cfg.num_elements * num_atoms
    if total > element_budget:
        raise DictionaryBudgetError(
            f"polar dictionary needs {total} complex entries, over the "
            f"budget of {element_budget}"
        )
    g = np.empty((cfg.num_elements, num_atoms), dtype=np.complex128)
    for c, r in enumerate(dist_grid.r_values):
        for a, theta in enumerate(angle_grid.angles):
            g[:, _flat_index(a, c, angle_grid.num_samples)] = steering_exact(cfg, theta, r)
    return PdDictionary(matrix=g, angle_grid=angle_grid, distance_grid=dist_grid)


def build_angular_dictionary(cfg, angle_grid):
    """Plane-wave dictionary of one subarray over the angle grid."""
    a_mat = np.empty((cfg.antennas_per_subarray, angle_grid.num_samples),
                     dtype=np.complex128)
    for a, theta in enumerate(angle_grid.angles):
        a_mat[:, a] = steering_subarray(cfg, theta)
    return AngularDictionary(matrix=a_mat, grid=angle_grid)


def build_intersub_dictionary(cfg, angle_grid, dist_grid):
    """Inter-subarray spherical-wave dictionary over the grid pairs."""
    num_atoms = angle_grid.num_samples * dist_grid.num_samples
    b_mat = np.empty((cfg.num_subarrays, num_atoms), dtype=np.complex128)
    for c, r in enumerate(dist_grid.r_values):
        for a, theta in enumerate(angle_grid.angles):
            b_mat[:, _flat_index(a, c, angle_grid.num_samples)] = steering_intersub(cfg, theta, r)
    return InterSubDictionary(matrix=b_mat, angle_grid=angle_grid, distance_grid=dist_grid)


def build_pad2d_dictionary(cfg, angle_grid, dist_grid):
    """2D polar-angular dictionary handle from its two factor dictionaries."""
    return Pad2dDictionary(
        angular=build_angular_dictionary(cfg, angle_grid),
        intersub=build_intersub_dictionary(cfg, angle_grid, dist_grid),
    )
