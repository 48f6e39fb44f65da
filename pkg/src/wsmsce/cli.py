"""Command-line front end.

Subcommands:

* ``bench``     -- run a parameter sweep from a config file and write CSV/JSON
* ``estimate``  -- single seeded run of one method, printed as key = value
* ``dict-info`` -- dictionary dimensions, grids and the Fraunhofer distance
* ``combiner``  -- build a combiner, report its coherence, optionally dump it

Exit codes: 0 success, 1 usage or configuration error, 2 runtime/numerical
failure.
"""

import argparse
import sys

import numpy as np

from . import harness
from .errors import DictionaryBudgetError, SingularSystemError
from .geometry import fraunhofer_distance
from .kernels import BACKEND
from .measurement import make_combiner, total_coherence

USAGE_ERROR = 1
RUNTIME_ERROR = 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="wsmsce",
        description="Near-field channel estimation benchmarks for "
                    "widely-spaced multi-subarray arrays",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run a parameter sweep")
    bench.add_argument("--config", required=True, help="scenario config file")
    bench.add_argument("--axis", required=True, choices=sorted(harness.AXES))
    bench.add_argument("--values", required=True,
                       help="comma-separated axis values")
    bench.add_argument("--out", required=True, help="output file path")
    bench.add_argument("--format", choices=("csv", "json"), default="csv")

    est = sub.add_parser("estimate", help="single seeded estimation run")
    est.add_argument("--config", required=True)
    est.add_argument("--method", required=True, choices=harness.METHODS)
    est.add_argument("--seed", required=True, type=int)

    info = sub.add_parser("dict-info", help="report dictionary dimensions")
    info.add_argument("--config", required=True)

    comb = sub.add_parser("combiner", help="build and inspect a combiner")
    comb.add_argument("--kind", required=True, choices=("random", "optimized"))
    comb.add_argument("--n", required=True, type=int, help="antennas per subarray")
    comb.add_argument("--q", required=True, type=int, help="pilot count")
    comb.add_argument("--seed", required=True, type=int)
    comb.add_argument("--dump", help="write the matrix as CSV re,im pairs")

    return parser


def _parse_axis_values(axis, text):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("no axis values given")
    if axis == "snr":
        return [float(p) for p in parts]
    return [int(p) for p in parts]


def _cmd_bench(args):
    sc = harness.parse_config_file(args.config)
    values = _parse_axis_values(args.axis, args.values)
    result = harness.sweep(sc, args.axis, values)
    if args.format == "json":
        harness.emit_json(result, args.out)
    else:
        harness.emit_csv(result, args.out)
    print(f"wrote {args.format} to {args.out}")
    return 0


def _fmt_value(value):
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _fmt_support(support):
    if not support:
        return "-"
    if isinstance(support[0], tuple):
        return ";".join(f"{a},{c}" for a, c in support)
    return ",".join(str(j) for j in support)


def _cmd_estimate(args):
    sc = harness.parse_config_file(args.config)
    result, paths, _ = harness.run_single(sc, args.method, args.seed)
    print(f"method = {result.method}")
    print(f"seed = {args.seed}")
    print(f"backend = {BACKEND}")
    print(f"support = {_fmt_support(result.support)}")
    if result.angle_estimates is not None and len(result.angle_estimates):
        sines = np.sin(result.angle_estimates)
        print("sin_theta_hat = " + ",".join(f"{s:.10g}" for s in sines))
    if result.distance_estimates is not None and len(result.distance_estimates):
        print("r_hat_m = " + ",".join(f"{r:.10g}" for r in result.distance_estimates))
    print("true_sin_theta = " + ",".join(f"{s:.10g}" for s in np.sin(paths.angles)))
    print("true_r_m = " + ",".join(f"{r:.10g}" for r in paths.distances))
    print(f"nmse = {result.nmse:.10e}")
    print(f"elapsed_s = {result.elapsed_seconds:.6e}")
    return 0


def _cmd_dict_info(args):
    sc = harness.parse_config_file(args.config)
    ctx = harness.build_context(sc)
    cfg = ctx.array_cfg
    r_nf = fraunhofer_distance(cfg)
    num_atoms = ctx.angle_grid.num_samples * ctx.dist_grid.num_samples
    print(f"wavelength_m = {_fmt_value(cfg.wavelength)}")
    print(f"element_spacing_m = {_fmt_value(cfg.element_spacing)}")
    print(f"subarray_spacing_m = {_fmt_value(cfg.subarray_spacing)}")
    print(f"fraunhofer_distance_m = {_fmt_value(r_nf)}")
    print(f"angle_samples = {ctx.angle_grid.num_samples}")
    print(f"distance_samples = {ctx.dist_grid.num_samples}")
    print(f"distance_mode = {ctx.dist_grid.mode}")
    print(f"distance_min_m = {_fmt_value(float(ctx.dist_grid.r_values[0]))}")
    print(f"distance_max_m = {_fmt_value(float(ctx.dist_grid.r_values[-1]))}")
    print(f"polar_dictionary_shape = {cfg.num_elements} x {num_atoms}")
    print(f"angular_dictionary_shape = {cfg.antennas_per_subarray} x "
          f"{ctx.angle_grid.num_samples}")
    print(f"intersub_dictionary_shape = {cfg.num_subarrays} x {num_atoms}")
    print(f"scenario_angle_count = {len(ctx.scenario_angle_indices)}")
    return 0


def _cmd_combiner(args):
    combiner = make_combiner(args.kind, args.n, args.q, args.seed)
    w = combiner.matrix
    print(f"kind = {combiner.kind}")
    print(f"shape = {w.shape[0]} x {w.shape[1]}")
    print(f"entry_modulus = {_fmt_value(float(np.abs(w[0, 0])))}")
    print(f"total_coherence = {_fmt_value(total_coherence(w))}")
    if args.dump:
        rows = [
            ",".join(f"{z.real:.17e},{z.imag:.17e}" for z in row) for row in w
        ]
        with open(args.dump, "w") as fh:
            fh.write("\n".join(rows) + "\n")
        print(f"dumped = {args.dump}")
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else USAGE_ERROR
    try:
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "dict-info":
            return _cmd_dict_info(args)
        if args.command == "combiner":
            return _cmd_combiner(args)
        parser.error(f"unknown command {args.command!r}")
    except (SingularSystemError, DictionaryBudgetError,
            np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
