"""Command-line entry point.

Exit codes: 0 success, 2 bad arguments, 3 I/O failure, 4 numerical failure.
Diagnostics go to stderr; stdout carries one summary line.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .core import DegenerateImageError, kernel_center
from .imgio import PgmError, read_pgm, write_csv, write_kernel_csv, write_kernel_pgm, write_pgm
from .nonblind import NonblindConfig, deconvolve_irls
from .pyramid import build_ladder, run_pyramid, snapshot_writer
from .solver import SolverConfig, TraceRow

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


class NumericalError(Exception):
    pass


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    g = p.add_argument_group("kernel estimation")
    g.add_argument("--beta0", type=float, default=d.beta0, help="initial sparsity fraction")
    g.add_argument("--gamma", type=float, default=d.gamma_growth, help="sparsity growth factor")
    g.add_argument("--burn-in", type=int, default=d.burn_in)
    g.add_argument("--grow-every", type=int, default=d.grow_every)
    g.add_argument("--x-inner", type=int, default=d.x_inner)
    g.add_argument("--k-inner", type=int, default=d.k_inner)
    g.add_argument("--coarse-iters", type=int, default=30, help="outer iterations per coarse scale")
    g.add_argument("--final-iters", type=int, default=180, help="outer iterations at full resolution")
    g.add_argument("--backtrack-max", type=int, default=d.backtrack_max)
    tau = g.add_mutually_exclusive_group()
    tau.add_argument("--tau-squared", dest="tau_squared", action="store_true", default=d.tau_squared,
                     help="initial budget beta0 * (l1/l2)^2 (default)")
    tau.add_argument("--tau-linear", dest="tau_squared", action="store_false",
                     help="initial budget beta0 * (l1/l2)")
    g.add_argument("--bb-rule", choices=("bb1", "bb2"), default=d.bb_rule)


def _add_nonblind_flags(p: argparse.ArgumentParser) -> None:
    d = NonblindConfig()
    g = p.add_argument_group("non-blind deconvolution")
    g.add_argument("--lambda", dest="lam", type=float, default=d.lam)
    g.add_argument("--p-exponent", type=float, default=d.p_exponent)
    g.add_argument("--irls-iters", type=int, default=d.irls_iters)
    g.add_argument("--epsilon", type=float, default=d.epsilon)
    g.add_argument("--edge-taper", action="store_true", help="blend borders before deconvolving")


def _solver_config(a) -> SolverConfig:
    try:
        return SolverConfig(
            beta0=a.beta0,
            gamma_growth=a.gamma,
            burn_in=a.burn_in,
            grow_every=a.grow_every,
            x_inner=a.x_inner,
            k_inner=a.k_inner,
            backtrack_max=a.backtrack_max,
            tau_squared=a.tau_squared,
            bb_rule=a.bb_rule,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _nonblind_config(a) -> NonblindConfig:
    try:
        return NonblindConfig(
            lam=a.lam, p_exponent=a.p_exponent, irls_iters=a.irls_iters, epsilon=a.epsilon, taper=a.edge_taper
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_iters(a) -> None:
    if a.coarse_iters < 0 or a.final_iters < 0:
        raise UsageError("iteration counts must be nonnegative")


def _check_kernel_size(size: int, shape=None) -> None:
    if size % 2 == 0 or size < 5:
        raise UsageError(f"--kernel-size must be odd and >= 5, got {size}")
    if shape is not None and size > min(shape) / 2:
        raise UsageError(f"--kernel-size {size} exceeds half the image size {shape}")


def _load(path: str) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"cannot read input image: {path}")
    return read_pgm(p)


def _estimate(a, y: np.ndarray) -> np.ndarray:
    _check_kernel_size(a.kernel_size, y.shape)
    _check_iters(a)
    cfg = _solver_config(a)
    trace = [] if a.trace else None
    hook = snapshot_writer(a.snapshot_dir) if a.snapshot_dir else None
    k = run_pyramid(
        y, cfg, build_ladder(a.kernel_size), a.coarse_iters, a.final_iters, trace=trace, on_scale=hook
    )
    if not np.all(np.isfinite(k)):
        raise NumericalError("kernel estimate contains NaN or Inf")
    if trace is not None:
        rows = [(level,) + row.values() for level, row in trace]
        write_csv(a.trace, ("level",) + TraceRow.FIELDS, rows)
    return k


def _center_mass(k: np.ndarray) -> float:
    c = kernel_center(k.shape[0])
    return float(k[c, c])


def _kernel_csv_path(pgm_path: str) -> Path:
    return Path(pgm_path).with_suffix(".csv")


def cmd_estimate_kernel(a) -> int:
    start = time.perf_counter()
    y = _load(a.input)
    k = _estimate(a, y)
    write_kernel_pgm(k, a.output)
    write_kernel_csv(k, a.csv or _kernel_csv_path(a.output))
    wall = time.perf_counter() - start
    print(f"kernel {k.shape[0]}x{k.shape[1]} center_mass={_center_mass(k):.6f} wall_time_s={wall:.2f}")
    return EXIT_OK


def cmd_deblur(a) -> int:
    start = time.perf_counter()
    nb = _nonblind_config(a)
    y = _load(a.input)
    k = _estimate(a, y)
    x = deconvolve_irls(y, k, nb)
    if not np.all(np.isfinite(x)):
        raise NumericalError("deblurred image contains NaN or Inf")
    write_pgm(x, a.output)
    if a.kernel_out:
        write_kernel_pgm(k, a.kernel_out)
        write_kernel_csv(k, _kernel_csv_path(a.kernel_out))
    wall = time.perf_counter() - start
    print(f"deblurred {y.shape[1]}x{y.shape[0]} kernel {k.shape[0]} wall_time_s={wall:.2f}")
    return EXIT_OK


def cmd_bench(a) -> int:
    if a.trials < 1:
        raise UsageError("--trials must be >= 1")
    if a.noise < 0:
        raise UsageError("--noise must be nonnegative")
    _check_kernel_size(a.kernel_size, (a.image_size, a.image_size))
    _check_iters(a)
    cfg = bench_mod.BenchConfig(
        trials=a.trials,
        seed=a.seed,
        image_size=a.image_size,
        kernel_side=a.kernel_size,
        noise_sigma=a.noise,
        coarse_iters=a.coarse_iters,
        final_iters=a.final_iters,
        solver=_solver_config(a),
        nonblind=_nonblind_config(a),
    )
    start = time.perf_counter()
    records = bench_mod.run_bench(cfg, jobs=a.jobs)
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bench_mod.write_records_csv(records, out / "records.csv", record_time=a.record_time)
    bench_mod.write_histogram_csv(records, out / "histogram.csv")
    bench_mod.dump_kernels(records, out / "kernels")
    wall = time.perf_counter() - start
    med = float(np.median([r.ncc_kernel for r in records]))
    print(f"trials={len(records)} median_ncc={med:.4f} wall_time_s={wall:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shakedeblur", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_estimation(p):
        p.add_argument("input", help="blurry PGM image")
        p.add_argument("--kernel-size", type=int, default=35)
        p.add_argument("--trace", metavar="CSV", help="write per-iteration solver trace")
        p.add_argument("--snapshot-dir", help="write each scale's kernel as PGM here")
        _add_solver_flags(p)

    p = sub.add_parser("estimate-kernel", help="estimate the blur kernel")
    add_estimation(p)
    p.add_argument("-o", "--output", required=True, help="kernel PGM (peak scaled to white)")
    p.add_argument("--csv", help="raw kernel values (default: output with .csv suffix)")
    p.set_defaults(func=cmd_estimate_kernel)

    p = sub.add_parser("deblur", help="estimate the kernel and deconvolve")
    add_estimation(p)
    p.add_argument("-o", "--output", required=True, help="deblurred PGM")
    p.add_argument("--kernel-out", help="also write the kernel PGM (+ .csv)")
    _add_nonblind_flags(p)
    p.set_defaults(func=cmd_deblur)

    p = sub.add_parser("bench", help="seeded synthetic benchmark")
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image-size", type=int, default=128)
    p.add_argument("--kernel-size", type=int, default=9)
    p.add_argument("--noise", type=float, default=0.005, help="Gaussian noise sigma")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", default="bench_out")
    p.add_argument("--record-time", action="store_true",
                   help="fill wall_time_s in records.csv (makes output nondeterministic)")
    _add_solver_flags(p)
    _add_nonblind_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, PgmError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, DegenerateImageError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
