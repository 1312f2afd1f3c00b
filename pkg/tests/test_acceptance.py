"""One test per acceptance criterion; each also logs a PASS/FAIL summary line."""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import central_difference, simplex_projection_enumerated, sparse_projection_exhaustive
from shakedeblur.bench import BenchConfig, cartoon_image, run_bench
from shakedeblur.cli import main
from shakedeblur.conv import convolve, correlate_image, correlate_kernel
from shakedeblur.core import delta_kernel, gradient_field, l20_count
from shakedeblur.nonblind import NonblindConfig, deconvolve_irls, deconvolve_quadratic, normal_equation_residual
from shakedeblur.proj import budget_count, project_simplex, project_sparse
from shakedeblur.pyramid import build_ladder, run_pyramid
from shakedeblur.solver import SolverConfig, misfit, misfit_gradients, solve_scale, tau_schedule


def report(n, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def simplex_kernel(rng, side):
    k = rng.random((side, side)) ** 3
    return k / k.sum()


def test_c1_adjoint_identities():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_x = worst_k = 0.0
    for _ in range(50):
        h, w = rng.integers(8, 33, size=2)
        side = int(rng.choice([3, 5, 7, 9]))
        k = simplex_kernel(rng, side)
        u, v = rng.normal(size=(2, 2, h, w))
        lhs = np.vdot(convolve(k, u), v)
        rhs = np.vdot(u, correlate_kernel(k, v))
        worst_x = max(worst_x, abs(lhs - rhs) / (np.linalg.norm(u) * np.linalg.norm(v)))
        q = rng.normal(size=(side, side))
        lhs = np.vdot(convolve(q, u), v)
        rhs = np.vdot(q, correlate_image(u, v, side))
        worst_k = max(worst_k, abs(lhs - rhs) / (np.linalg.norm(q) * np.linalg.norm(v)))
    took = time.perf_counter() - start
    report(1, worst_x <= 1e-10 and worst_k <= 1e-10 and took < 5,
           f"adjoint gaps image {worst_x:.1e} kernel {worst_k:.1e} (<= 1e-10), {took:.2f}s (< 5s)")


def test_c2_gradient_checks():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        k = simplex_kernel(rng, 5)
        x = rng.normal(size=(2, 12, 12))
        y = rng.normal(size=(2, 12, 12))
        g_k, g_x = misfit_gradients(k, x, y)
        fd_k = central_difference(lambda z: misfit(z, x, y), k)
        fd_x = central_difference(lambda z: misfit(k, z, y), x)
        worst = max(worst, np.linalg.norm(g_k - fd_k) / np.linalg.norm(fd_k),
                    np.linalg.norm(g_x - fd_x) / np.linalg.norm(fd_x))
    took = time.perf_counter() - start
    report(2, worst <= 1e-5 and took < 10, f"max relative gradient error {worst:.1e} (<= 1e-5), {took:.2f}s (< 10s)")


def test_c3_projection_oracles():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        v = rng.normal(scale=2.0, size=1 + i % 4)
        worst = max(worst, np.max(np.abs(project_simplex(v) - simplex_projection_enumerated(v))))
    exact = True
    for _ in range(40):
        f = rng.normal(size=(2, 3, 3))
        for tau in range(1, 10):
            best, best_d = sparse_projection_exhaustive(f, tau)
            got = project_sparse(f, tau)
            exact &= np.array_equal(got, best) and float(np.sum((got - f) ** 2)) == pytest.approx(best_d, rel=1e-12, abs=1e-300)
    took = time.perf_counter() - start
    report(3, worst <= 1e-9 and exact and took < 30,
           f"simplex error {worst:.1e} (<= 1e-9), sparse exact={exact}, {took:.2f}s (< 30s)")


def test_c4_monotone_and_feasible():
    bad_mono = bad_feas = 0
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        x_true = gradient_field(cartoon_image(40, seed))
        k_true = project_simplex(rng.random((7, 7)) ** 3)
        y = convolve(k_true, x_true)
        trace = []

        def monitor(state, kind):
            nonlocal bad_feas
            ok = state.k.min() >= 0 and abs(state.k.sum() - 1) <= 1e-12
            ok &= l20_count(state.x) <= budget_count(state.tau, 40 * 40)
            bad_feas += not ok

        solve_scale(y, delta_kernel(7), y, SolverConfig(outer_iters=60), trace=trace, monitor=monitor)
        bad_mono += sum(b.L > a.L for a, b in zip(trace, trace[1:]) if a.tau == b.tau)
    report(4, bad_mono == 0 and bad_feas == 0,
           f"{bad_mono} misfit increases within constant-tau spans, {bad_feas} infeasible iterates")


def test_c5_tau_schedule():
    cfg = SolverConfig()
    tau0 = 37.25
    mismatch, growth = [], []
    prev = None
    for t in range(201):
        got = tau_schedule(t, tau0, cfg)
        n = 0 if t < 20 else 1 + (t - 20) // 10
        exact = Fraction(tau0) * Fraction(cfg.gamma_growth) ** n
        if got != tau0 * cfg.gamma_growth ** n if n else got != tau0:
            mismatch.append(t)
        if abs(Fraction(got) - exact) > exact * Fraction(1, 10**14):
            mismatch.append(t)
        if prev is not None and got != prev:
            growth.append(t)
        prev = got
    ok = not mismatch and growth == list(range(20, 201, 10))
    assert (cfg.beta0, cfg.gamma_growth, cfg.burn_in, cfg.grow_every) == (0.15, 1.10, 20, 10)
    report(5, ok, f"mismatches at {mismatch}, growth events {growth[:4]}...{growth[-1:]}")


@pytest.mark.slow
def test_c6_end_to_end_recovery():
    start = time.perf_counter()
    records = run_bench(BenchConfig(trials=8, image_size=128, kernel_side=9, noise_sigma=0.005))
    took = time.perf_counter() - start
    med_ncc = float(np.median([r.ncc_kernel for r in records]))
    med_ratio = float(np.median([r.sse_image / r.sse_blurry for r in records]))
    ok = med_ncc >= 0.85 and med_ratio <= 0.5 and took <= 120
    report(6, ok, f"median NCC {med_ncc:.4f} (>= 0.85), median SSE ratio {med_ratio:.4f} (<= 0.5), "
                  f"{took:.1f}s (<= 120s)")


@pytest.mark.slow
def test_c7_delta_blur_sanity():
    # trial image of the benchmark with k_true = delta and no noise, default settings
    x_true = cartoon_image(128, 0)
    start = time.perf_counter()
    k = run_pyramid(x_true, SolverConfig(), build_ladder(9))
    took = time.perf_counter() - start
    mass = float(k[4, 4])
    report(7, mass >= 0.99 and took < 15, f"center mass {mass:.4f} (>= 0.99), {took:.2f}s (< 15s)")


def test_c8_ladder():
    got = build_ladder(35).sides
    report(8, got == [5, 7, 9, 13, 19, 27, 35], f"ladder {got}")


def test_c9_nonblind():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(20):
        y = rng.random(tuple(rng.integers(16, 48, size=2)))
        k = simplex_kernel(rng, int(rng.choice([3, 5, 7, 9])))
        lam = float(10 ** rng.uniform(-4, -1))
        worst = max(worst, normal_equation_residual(deconvolve_quadratic(y, k, lam), y, k, lam))
    increases = 0
    for seed in range(10):
        r = np.random.default_rng(90 + seed)
        x_true = cartoon_image(48, seed)
        k = simplex_kernel(r, 7)
        y = convolve(k, x_true) + r.normal(scale=0.01, size=x_true.shape)
        trace = []
        deconvolve_irls(y, k, NonblindConfig(irls_iters=8), trace=trace)
        increases += sum(b > a for a, b in zip(trace, trace[1:]))
    report(9, worst <= 1e-8 and increases == 0,
           f"max normal-equation residual {worst:.1e} (<= 1e-8), {increases} IRLS objective increases")


def test_c10_bench_determinism(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        args = ["bench", "--trials", "2", "--seed", "5", "--image-size", "64", "--kernel-size", "7"]
        assert main(args + ["--out-dir", str(out)]) == 0
        outs.append(out)
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in ("records.csv", "histogram.csv"))
    same &= all(
        (outs[0] / "kernels" / p.name).read_bytes() == p.read_bytes() for p in (outs[1] / "kernels").iterdir()
    )
    report(10, same, "records.csv, histogram.csv and kernel dumps byte-identical" if same else "outputs differ")
