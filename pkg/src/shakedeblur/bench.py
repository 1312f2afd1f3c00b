"""Seeded synthetic benchmark: cartoon images, shake kernels, SSE scoring.

Every random quantity is drawn from a generator seeded by ``(seed, trial_id,
stream)``, so a trial is reproducible in isolation and independent of how
trials are scheduled across processes.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import as_image, as_kernel
from .imgio import write_csv, write_kernel_csv, write_kernel_pgm
from .nonblind import NonblindConfig, deconvolve_irls
from .proj import project_simplex
from .pyramid import build_ladder, run_pyramid
from .solver import SolverConfig

__all__ = [
    "ShakeSpec",
    "BenchRecord",
    "BenchConfig",
    "random_trajectory",
    "random_shake",
    "make_shake_kernel",
    "cartoon_image",
    "blur_instance",
    "ncc",
    "align_kernels",
    "align_image",
    "sse",
    "cumulative_histogram",
    "run_trial",
    "run_bench",
    "write_records_csv",
    "write_histogram_csv",
    "RECORD_COLUMNS",
]

# stream ids for rng derivation
_IMAGE, _KERNEL, _NOISE = 0, 1, 2


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(list(key))


@dataclass(frozen=True)
class ShakeSpec:
    kernel_side: int
    trajectory: tuple[tuple[float, float], ...]
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.kernel_side < 1 or self.kernel_side % 2 == 0:
            raise ValueError(f"kernel side must be odd, got {self.kernel_side}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        hi = self.kernel_side - 1
        for r, c in self.trajectory:
            if not (0 <= r <= hi and 0 <= c <= hi):
                raise ValueError(f"trajectory point {(r, c)} outside kernel bounds")


@dataclass
class BenchRecord:
    trial_id: int
    k_true: np.ndarray
    k_est: np.ndarray
    shift: tuple[int, int]
    sse_image: float
    sse_kernel: float
    ncc_kernel: float
    sse_blurry: float
    wall_time: float


def random_trajectory(side: int, rng: np.random.Generator, n_steps: int = 64) -> tuple:
    """Camera-shake-like path: a random walk with momentum, fitted to the kernel box.

    The path is centered on its mean so the kernel's center of mass sits near
    the center pixel, then scaled to span between half and all of the box.
    """
    vel = np.zeros(2)
    pos = np.zeros((n_steps, 2))
    heading = rng.uniform(0, 2 * np.pi)
    vel[:] = np.cos(heading), np.sin(heading)
    for i in range(1, n_steps):
        vel = 0.7 * vel + rng.normal(scale=0.6, size=2)
        pos[i] = pos[i - 1] + vel
    pos -= pos.mean(axis=0)
    half = (side - 1) / 2.0
    extent = np.abs(pos).max()
    if extent > 0:
        pos *= rng.uniform(0.5, 1.0) * half / extent
    pos = np.clip(pos + half, 0.0, side - 1.0)
    return tuple((float(r), float(c)) for r, c in pos)


def random_shake(kernel_side: int, noise_sigma: float, rng_seed: int) -> ShakeSpec:
    traj = random_trajectory(kernel_side, _rng(rng_seed, _KERNEL))
    return ShakeSpec(kernel_side, traj, noise_sigma, rng_seed)


def _splat(grid: np.ndarray, r: float, c: float, w: float) -> None:
    r0, c0 = int(math.floor(r)), int(math.floor(c))
    fr, fc = r - r0, c - c0
    n = grid.shape[0]
    for dr, wr in ((0, 1 - fr), (1, fr)):
        for dc, wc in ((0, 1 - fc), (1, fc)):
            rr, cc = r0 + dr, c0 + dc
            if wr * wc > 0 and 0 <= rr < n and 0 <= cc < n:
                grid[rr, cc] += w * wr * wc


def make_shake_kernel(spec: ShakeSpec) -> np.ndarray:
    """Rasterize the trajectory with bilinear splatting, mass proportional to arc length."""
    pts = np.asarray(spec.trajectory, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("empty trajectory")
    grid = np.zeros((spec.kernel_side, spec.kernel_side))
    seg = np.diff(pts, axis=0)
    lengths = np.hypot(seg[:, 0], seg[:, 1]) if len(pts) > 1 else np.zeros(0)
    if lengths.sum() == 0:
        for r, c in pts:
            _splat(grid, r, c, 1.0)
    else:
        for (a, d), length in zip(zip(pts[:-1], seg), lengths):
            n = max(1, int(math.ceil(length * 8)))
            for t in (np.arange(n) + 0.5) / n:
                _splat(grid, *(a + t * d), length / n)
    return project_simplex(grid / grid.sum())


def cartoon_image(size: int | tuple[int, int], seed: int, n_shapes: int = 14) -> np.ndarray:
    """Piecewise-constant image of random rectangles and disks in ``[0, 1]``."""
    h, w = (size, size) if isinstance(size, int) else size
    rng = _rng(seed, _IMAGE)
    img = np.full((h, w), rng.uniform(0.2, 0.8))
    rows, cols = np.mgrid[0:h, 0:w]
    for _ in range(n_shapes):
        value = rng.uniform(0.0, 1.0)
        if rng.random() < 0.5:
            r0, c0 = rng.integers(0, h), rng.integers(0, w)
            hh, ww = rng.integers(h // 10, h // 3), rng.integers(w // 10, w // 3)
            img[r0 : r0 + hh, c0 : c0 + ww] = value
        else:
            cr, cc = rng.uniform(0, h), rng.uniform(0, w)
            rad = rng.uniform(min(h, w) / 16, min(h, w) / 5)
            img[(rows - cr) ** 2 + (cols - cc) ** 2 <= rad * rad] = value
    return img


def _convolve_direct(k: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Shift-and-add circular convolution; exact for a delta, unlike the FFT path."""
    c = k.shape[0] // 2
    y = np.zeros_like(x)
    for (a, b), w in np.ndenumerate(k):
        if w != 0:
            y += w * np.roll(x, (a - c, b - c), axis=(0, 1))
    return y


def blur_instance(x_true, spec: ShakeSpec) -> tuple[np.ndarray, np.ndarray]:
    """``(k * x_true + noise, k)`` with Gaussian noise drawn from its seed."""
    x_true = as_image(x_true)
    k = make_shake_kernel(spec)
    y = _convolve_direct(k, x_true)
    if spec.noise_sigma > 0:
        y = y + _rng(spec.rng_seed, _NOISE).normal(scale=spec.noise_sigma, size=y.shape)
    return y, k


def ncc(a, b) -> float:
    """Cosine similarity of two arrays viewed as vectors."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("zero-norm kernel")
    return float(np.dot(a, b) / (na * nb))


def _signed_shifts(side: int) -> list[tuple[int, int]]:
    c = side // 2
    offs = range(-c, side - c)
    # smallest shifts first so ties resolve toward no movement
    return sorted(((dy, dx) for dy in offs for dx in offs), key=lambda s: (abs(s[0]) + abs(s[1]), s))


def align_kernels(k_est, k_true) -> tuple[tuple[int, int], np.ndarray, float]:
    """Circular shift of ``k_est`` maximizing NCC with ``k_true``.

    Exhaustive over all ``side**2`` shifts.  Returns ``(shift, shifted, ncc)``
    where ``shifted = np.roll(k_est, shift, axis=(0, 1))``.
    """
    k_est = as_kernel(k_est)
    k_true = as_kernel(k_true)
    if k_est.shape != k_true.shape:
        raise ValueError(f"kernel shapes differ: {k_est.shape} vs {k_true.shape}")
    if not np.any(k_est) or not np.any(k_true):
        raise ValueError("zero-norm kernel")
    best = None
    for s in _signed_shifts(k_est.shape[0]):
        score = ncc(np.roll(k_est, s, axis=(0, 1)), k_true)
        if best is None or score > best[1]:
            best = (s, score)
    shift, score = best
    return shift, np.roll(k_est, shift, axis=(0, 1)), score


def align_image(x_est, shift: tuple[int, int]) -> np.ndarray:
    """Undo the image translation implied by a kernel alignment ``shift``.

    Rolling the kernel by ``s`` corresponds to the deblurred image being
    rolled by ``s`` relative to ground truth, so roll it back by ``-s``.
    """
    return np.roll(x_est, (-shift[0], -shift[1]), axis=(0, 1))


def sse(a, b) -> float:
    """Sum of squared differences."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.vdot(d, d))


def cumulative_histogram(records: Sequence[BenchRecord] | Sequence[float]) -> list[tuple[float, float]]:
    """Rows ``(sse, percent of trials with SSE <= sse)``, ties merged."""
    vals = [r.sse_image if isinstance(r, BenchRecord) else float(r) for r in records]
    if not vals:
        raise ValueError("cumulative histogram of an empty record list")
    vals.sort()
    n = len(vals)
    rows = []
    for i, v in enumerate(vals):
        pct = 100.0 * (i + 1) / n
        if rows and rows[-1][0] == v:
            rows[-1] = (v, pct)
        else:
            rows.append((v, pct))
    return rows


@dataclass(frozen=True)
class BenchConfig:
    trials: int = 8
    seed: int = 0
    image_size: int = 128
    kernel_side: int = 9
    noise_sigma: float = 0.005
    coarse_iters: int = 30
    final_iters: int = 180
    solver: SolverConfig = field(default_factory=SolverConfig)
    nonblind: NonblindConfig = field(default_factory=NonblindConfig)


def run_trial(trial_id: int, cfg: BenchConfig) -> BenchRecord:
    seed = (cfg.seed, trial_id)
    start = time.perf_counter()
    x_true = cartoon_image(cfg.image_size, _seed_int(seed))
    spec = random_shake(cfg.kernel_side, cfg.noise_sigma, _seed_int(seed))
    y, k_true = blur_instance(x_true, spec)
    k_est = run_pyramid(
        y,
        cfg.solver,
        build_ladder(cfg.kernel_side),
        coarse_iters=cfg.coarse_iters,
        final_iters=cfg.final_iters,
    )
    x_est = np.clip(deconvolve_irls(y, k_est, cfg.nonblind), 0.0, 1.0)
    shift, k_aligned, score = align_kernels(k_est, k_true)
    wall = time.perf_counter() - start
    return BenchRecord(
        trial_id=trial_id,
        k_true=k_true,
        k_est=k_est,
        shift=shift,
        sse_image=sse(align_image(x_est, shift), x_true),
        sse_kernel=sse(k_aligned, k_true),
        ncc_kernel=score,
        sse_blurry=sse(y, x_true),
        wall_time=wall,
    )


def _seed_int(key: tuple[int, int]) -> int:
    """Fold ``(seed, trial_id)`` into one 32-bit seed."""
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


def _run_one(args):
    trial_id, cfg = args
    return run_trial(trial_id, cfg)


def run_bench(cfg: BenchConfig, jobs: int = 1) -> list[BenchRecord]:
    work = [(i, cfg) for i in range(cfg.trials)]
    if jobs <= 1:
        return [_run_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, work))


RECORD_COLUMNS = (
    "trial_id",
    "sse_image",
    "sse_kernel",
    "ncc_kernel",
    "shift_y",
    "shift_x",
    "wall_time_s",
    "sse_blurry",
)


def write_records_csv(records: Sequence[BenchRecord], path, record_time: bool = False) -> None:
    """Per-trial CSV; ``wall_time_s`` is left blank unless ``record_time``."""
    rows = [
        (
            r.trial_id,
            r.sse_image,
            r.sse_kernel,
            r.ncc_kernel,
            r.shift[0],
            r.shift[1],
            r.wall_time if record_time else "",
            r.sse_blurry,
        )
        for r in records
    ]
    write_csv(path, RECORD_COLUMNS, rows)


def write_histogram_csv(records: Sequence[BenchRecord], path) -> None:
    write_csv(path, ("sse_image", "cumulative_percent"), cumulative_histogram(records))


def dump_kernels(records: Sequence[BenchRecord], directory) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for r in records:
        write_kernel_pgm(r.k_true, out / f"trial{r.trial_id:03d}_k_true.pgm")
        write_kernel_pgm(r.k_est, out / f"trial{r.trial_id:03d}_k_est.pgm")
        write_kernel_csv(r.k_est, out / f"trial{r.trial_id:03d}_k_est.csv")
