"""Monte-Carlo benchmark driver: seeded scenario generation, paired
per-trial method comparison, parameter sweeps, and CSV/JSON emission.

Seeding: trial ``i`` derives ``SeedSequence(base_seed, spawn_key=(i,))`` and
splits it into independent path / combiner / noise streams, so adding trials
never changes earlier draws and every method inside a trial sees the same
observation (paired comparison).  Two scenarios differing only in combiner
kind or methods also share channel and noise realizations.
"""

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from . import estimators
from .dictionary import (
    build_angular_dictionary,
    build_pad2d_dictionary,
    build_pd_dictionary,
    make_angle_grid,
    make_distance_grid,
)
from .errors import SingularSystemError
from .estimators import (
    MAD_OMP,
    METHODS,
    OLS,
    PAD2D_OMP,
    PD_OMP,
    TS_PAD_OMP,
    EstimatorConfig,
)
from .geometry import (
    CHANNEL_MODELS,
    MODEL_EXACT,
    ArrayConfig,
    PathSet,
    fraunhofer_distance,
    synth_channel,
)
from .measurement import COMBINER_KINDS, KIND_OPTIMIZED, acquire, make_combiner, snr_to_noise_variance

AXES = {
    "snr": "snr_db",
    "q": "num_pilots",
    "l": "num_paths",
    "n": "antennas_per_subarray",
}


@dataclass(frozen=True)
class ScenarioConfig:
    """One benchmark scenario; defaults follow the standard 100 GHz setup
    (eight 24-element subarrays, half-wavelength elements, subarray pitch
    one subarray aperture plus eight wavelengths, sources on the grid with
    sin(theta) in [-0.75, 0.75] and 5 m distance steps out to twice the
    Fraunhofer distance)."""

    frequency_hz: float = 1.0e11
    num_subarrays: int = 8
    antennas_per_subarray: int = 24
    element_spacing: float = None      # None -> wavelength / 2
    subarray_spacing: float = None     # None -> N d + 8 wavelengths
    num_pilots: int = 16
    snr_db: float = 5.0
    num_paths: int = 4
    channel_model: str = MODEL_EXACT
    combiner_kind: str = KIND_OPTIMIZED
    angle_samples: int = None          # None -> antennas_per_subarray
    distance_samples: int = None       # None -> step grid
    distance_mode: str = "uniform"
    distance_min: float = 5.0
    distance_max: float = None         # None -> 2 * Fraunhofer distance
    distance_step: float = 5.0
    sin_min: float = -0.75
    sin_max: float = 0.75
    methods: tuple = METHODS
    trials: int = 200
    base_seed: int = 0
    denominator_mode: str = estimators.DENOM_SQUARED
    residual_tolerance: float = None
    ts_recon_model: str = MODEL_EXACT
    timing_warmup: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.channel_model not in CHANNEL_MODELS:
            raise ValueError(f"unknown channel model {self.channel_model!r}")
        if self.combiner_kind not in COMBINER_KINDS:
            raise ValueError(f"unknown combiner kind {self.combiner_kind!r}")

    def array_config(self):
        return ArrayConfig.from_frequency(
            frequency_hz=self.frequency_hz,
            num_subarrays=self.num_subarrays,
            antennas_per_subarray=self.antennas_per_subarray,
            element_spacing=self.element_spacing,
            subarray_spacing=self.subarray_spacing,
        )


@dataclass
class ScenarioContext:
    """Dictionaries and grids built once per scenario so their construction
    stays out of the timed estimator calls."""

    array_cfg: object
    angle_grid: object
    dist_grid: object
    ang_dict: object
    pad_dict: object
    pd_dict: object
    scenario_angle_indices: np.ndarray
    estimator_cfg: EstimatorConfig


@dataclass
class MethodMetrics:
    nmse: float
    runtime_s: float
    failed: bool = False


@dataclass
class TrialRecord:
    trial_index: int
    seed: int
    metrics: dict
    path_angles: np.ndarray
    path_distances: np.ndarray
    path_gains: np.ndarray


@dataclass
class SweepResult:
    axis: str
    values: list
    methods: list
    mean_nmse: dict
    mean_runtime: dict
    failures: dict
    trials: int
    config: ScenarioConfig


def build_context(sc):
    """Array geometry, grids and dictionaries for one scenario."""
    array_cfg = sc.array_config()
    num_angles = sc.angle_samples or sc.antennas_per_subarray
    angle_grid = make_angle_grid(num_angles)
    r_max = sc.distance_max
    if r_max is None:
        r_max = 2.0 * fraunhofer_distance(array_cfg)
    if sc.distance_samples is None:
        if sc.distance_mode != "uniform":
            raise ValueError(
                "step-derived distance grids are uniform; set distance_samples "
                "to use reciprocal sampling"
            )
        count = int(math.floor((r_max - sc.distance_min) / sc.distance_step)) + 1
        if count < 1:
            raise ValueError("distance window shorter than one step")
        top = sc.distance_min + sc.distance_step * (count - 1)
        dist_grid = make_distance_grid(count, sc.distance_min, top, "uniform") \
            if count > 1 else make_distance_grid(1, sc.distance_min, r_max, "uniform")
    else:
        dist_grid = make_distance_grid(
            sc.distance_samples, sc.distance_min, r_max, sc.distance_mode
        )
    sins = angle_grid.sin_values
    inside = np.nonzero((sins >= sc.sin_min - 1e-12) & (sins <= sc.sin_max + 1e-12))[0]
    if len(inside) < sc.num_paths:
        raise ValueError(
            f"only {len(inside)} on-grid angles inside the sin window; "
            f"cannot draw {sc.num_paths} distinct path angles"
        )
    ang_dict = build_angular_dictionary(array_cfg, angle_grid)
    pad_dict = build_pad2d_dictionary(array_cfg, angle_grid, dist_grid)
    pd_dict = build_pd_dictionary(array_cfg, angle_grid, dist_grid) \
        if PD_OMP in sc.methods else None
    return ScenarioContext(
        array_cfg=array_cfg,
        angle_grid=angle_grid,
        dist_grid=dist_grid,
        ang_dict=ang_dict,
        pad_dict=pad_dict,
        pd_dict=pd_dict,
        scenario_angle_indices=inside,
        estimator_cfg=EstimatorConfig(
            sparsity=sc.num_paths,
            residual_tolerance=sc.residual_tolerance,
            denominator_mode=sc.denominator_mode,
        ),
    )


def trial_seed_sequence(base_seed, trial_index):
    """Stated seed mixing: the trial stream is SeedSequence(base_seed) forked
    at spawn key (trial_index,)."""
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(trial_index,))


def draw_paths(sc, ctx, rng):
    """On-grid scenario draw: distinct grid angles inside the sin window,
    grid distances with replacement, circular Gaussian gains."""
    a_idx = rng.choice(ctx.scenario_angle_indices, size=sc.num_paths, replace=False)
    c_idx = rng.integers(0, ctx.dist_grid.num_samples, size=sc.num_paths)
    gains = (rng.standard_normal(sc.num_paths)
             + 1j * rng.standard_normal(sc.num_paths)) / math.sqrt(2.0)
    return PathSet(
        angles=ctx.angle_grid.angles[a_idx],
        distances=ctx.dist_grid.r_values[c_idx],
        gains=gains,
    )


def _trial_inputs(sc, ctx, trial_index):
    ss = trial_seed_sequence(sc.base_seed, trial_index)
    path_seed, combiner_seed, noise_seed = ss.spawn(3)
    paths = draw_paths(sc, ctx, np.random.default_rng(path_seed))
    channel = synth_channel(ctx.array_cfg, paths, sc.channel_model)
    combiner = make_combiner(
        sc.combiner_kind, sc.antennas_per_subarray, sc.num_pilots, combiner_seed
    )
    obs = acquire(channel, combiner, snr_to_noise_variance(sc.snr_db), noise_seed)
    seed_word = int(ss.generate_state(1)[0])
    return paths, channel, combiner, obs, seed_word


def run_method(method, sc, ctx, obs, combiner, paths):
    """Dispatch one estimator; returns its EstimationResult."""
    cfg = ctx.estimator_cfg
    if method == PD_OMP:
        return estimators.pd_omp(obs, combiner, ctx.pd_dict, cfg)
    if method == MAD_OMP:
        return estimators.mad_omp(obs, combiner, ctx.ang_dict, cfg)[0]
    if method == TS_PAD_OMP:
        return estimators.ts_pad_omp(
            obs, combiner, ctx.array_cfg, ctx.ang_dict, ctx.pad_dict.intersub,
            cfg, recon_model=sc.ts_recon_model,
        )
    if method == PAD2D_OMP:
        return estimators.pad2d_omp(obs, combiner, ctx.pad_dict, cfg)
    if method == OLS:
        return estimators.ols_oracle(
            obs, combiner, ctx.array_cfg, paths, model=sc.channel_model
        )
    raise ValueError(f"unknown method {method!r}")


def run_trial(sc, trial_index, context=None):
    """One Monte-Carlo draw: every requested method sees the same channel,
    combiner and noise; failures are recorded, not raised."""
    ctx = build_context(sc) if context is None else context
    paths, channel, combiner, obs, seed_word = _trial_inputs(sc, ctx, trial_index)
    metrics = {}
    for method in sc.methods:
        try:
            if sc.timing_warmup:
                run_method(method, sc, ctx, obs, combiner, paths)
            result = run_method(method, sc, ctx, obs, combiner, paths)
            err = estimators.nmse(channel.coeffs, result.channel_estimate)
            metrics[method] = MethodMetrics(
                nmse=err, runtime_s=result.elapsed_seconds
            )
        except (SingularSystemError, np.linalg.LinAlgError):
            metrics[method] = MethodMetrics(
                nmse=float("nan"), runtime_s=float("nan"), failed=True
            )
    return TrialRecord(
        trial_index=trial_index,
        seed=seed_word,
        metrics=metrics,
        path_angles=paths.angles,
        path_distances=paths.distances,
        path_gains=paths.gains,
    )


def run_single(sc, method, seed):
    """One seeded run of one method; returns (result, paths, channel).
    The result's nmse field is filled in."""
    sc = dataclasses.replace(sc, methods=(method,), base_seed=seed)
    ctx = build_context(sc)
    paths, channel, combiner, obs, _ = _trial_inputs(sc, ctx, 0)
    result = run_method(method, sc, ctx, obs, combiner, paths)
    result.nmse = estimators.nmse(channel.coeffs, result.channel_estimate)
    return result, paths, channel


def sweep(sc, axis, values):
    """Run ``sc.trials`` paired trials at every axis value and aggregate
    per-method mean NMSE and runtime (failed trials excluded from means,
    counted separately)."""
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {sorted(AXES)}")
    field_name = AXES[axis]
    methods = list(sc.methods)
    mean_nmse = {m: [] for m in methods}
    mean_runtime = {m: [] for m in methods}
    failures = {m: [] for m in methods}
    for value in values:
        sc_value = dataclasses.replace(sc, **{field_name: value})
        ctx = build_context(sc_value)
        sums = {m: 0.0 for m in methods}
        time_sums = {m: 0.0 for m in methods}
        fail_counts = {m: 0 for m in methods}
        for t in range(sc_value.trials):
            record = run_trial(sc_value, t, context=ctx)
            for m in methods:
                met = record.metrics[m]
                if met.failed:
                    fail_counts[m] += 1
                else:
                    sums[m] += met.nmse
                    time_sums[m] += met.runtime_s
        for m in methods:
            good = sc_value.trials - fail_counts[m]
            mean_nmse[m].append(sums[m] / good if good else float("nan"))
            mean_runtime[m].append(time_sums[m] / good if good else float("nan"))
            failures[m].append(fail_counts[m])
    return SweepResult(
        axis=axis,
        values=list(values),
        methods=methods,
        mean_nmse=mean_nmse,
        mean_runtime=mean_runtime,
        failures=failures,
        trials=sc.trials,
        config=sc,
    )


CSV_HEADER = "axis,value,method,mean_nmse,mean_runtime_s,trials,failures"


def _fmt(x):
    if x != x:  # nan
        return "nan"
    return f"{x:.17e}"


def emit_csv(result, path):
    """One row per (axis value, method); floats in full-precision scientific
    notation."""
    lines = [CSV_HEADER]
    for i, value in enumerate(result.values):
        for m in result.methods:
            lines.append(
                f"{result.axis},{value},{m},{_fmt(result.mean_nmse[m][i])},"
                f"{_fmt(result.mean_runtime[m][i])},{result.trials},"
                f"{result.failures[m][i]}"
            )
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def _config_to_dict(sc):
    raw = dataclasses.asdict(sc)
    raw["methods"] = list(raw["methods"])
    return raw


def _config_from_dict(raw):
    raw = dict(raw)
    raw["methods"] = tuple(raw["methods"])
    return ScenarioConfig(**raw)


def emit_json(result, path):
    """Same aggregates as the CSV plus the full scenario for provenance."""
    payload = {
        "axis": result.axis,
        "values": list(result.values),
        "methods": list(result.methods),
        "mean_nmse": result.mean_nmse,
        "mean_runtime_s": result.mean_runtime,
        "failures": result.failures,
        "trials": result.trials,
        "config": _config_to_dict(result.config),
    }
    try:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write JSON to {path}: {exc}") from exc


def load_json(path):
    """Inverse of :func:`emit_json`."""
    with open(path) as fh:
        payload = json.load(fh)
    return SweepResult(
        axis=payload["axis"],
        values=payload["values"],
        methods=payload["methods"],
        mean_nmse=payload["mean_nmse"],
        mean_runtime=payload["mean_runtime_s"],
        failures=payload["failures"],
        trials=payload["trials"],
        config=_config_from_dict(payload["config"]),
    )


# --- flat key = value configuration files ---------------------------------

_NONE_WORDS = {"auto", "none", ""}


def _opt(conv):
    def parse(text):
        return None if text.lower() in _NONE_WORDS else conv(text)
    return parse


def _methods_list(text):
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _parse_bool(text):
    lowered = text.lower()
    if lowered in {"true", "1", "yes", "on"}:
        return True
    if lowered in {"false", "0", "no", "off"}:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


_FIELD_PARSERS = {
    "frequency_hz": float,
    "num_subarrays": int,
    "antennas_per_subarray": int,
    "element_spacing": _opt(float),
    "subarray_spacing": _opt(float),
    "num_pilots": int,
    "snr_db": float,
    "num_paths": int,
    "channel_model": str,
    "combiner_kind": str,
    "angle_samples": _opt(int),
    "distance_samples": _opt(int),
    "distance_mode": str,
    "distance_min": float,
    "distance_max": _opt(float),
    "distance_step": float,
    "sin_min": float,
    "sin_max": float,
    "methods": _methods_list,
    "trials": int,
    "base_seed": int,
    "denominator_mode": str,
    "residual_tolerance": _opt(float),
    "ts_recon_model": str,
    "timing_warmup": _parse_bool,
}


def parse_config_file(path):
    """Read a scenario from flat ``key = value`` text ('#' starts a comment);
    unknown keys and malformed values raise ValueError with line context."""
    overrides = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            parser = _FIELD_PARSERS.get(key)
            if parser is None:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                overrides[key] = parser(value)
            except ValueError as exc:
                raise ValueError(
                    f"{path}:{lineno}: bad value for {key!r}: {exc}"
                ) from exc
    return ScenarioConfig(**overrides)


def format_config(sc):
    """Render a scenario as config-file text (inverse of parse_config_file)."""
    lines = []
    for f in dataclasses.fields(ScenarioConfig):
        value = getattr(sc, f.name)
        if value is None:
            text = "auto"
        elif f.name == "methods":
            text = ",".join(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
