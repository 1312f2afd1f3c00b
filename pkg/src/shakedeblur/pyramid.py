"""Coarse-to-fine kernel estimation.

The observed image is resampled to each rung of a kernel-size ladder
(5, 7, 9, ... growing by about sqrt(2)), the single-scale solver runs there,
and its (k, x) are upsampled to seed the next rung.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .conv import FreqPlan
from .core import as_image, as_kernel, delta_kernel, gradient_field
from .proj import project_simplex, project_sparse
from .solver import SolverConfig, TraceRow, initial_tau, solve_scale

__all__ = [
    "ScalePlan",
    "build_ladder",
    "resample_image",
    "upsample_kernel",
    "upsample_field",
    "run_pyramid",
]

MIN_SIDE = 5


@dataclass(frozen=True)
class ScalePlan:
    ladder: tuple[tuple[int, float], ...]
    full_kernel_side: int

    @property
    def sides(self) -> list[int]:
        return [s for s, _ in self.ladder]


def _nearest_odd(v: float) -> int:
    # ties round up: 8.0 -> 9
    return 2 * int(math.floor(v / 2.0)) + 1


def build_ladder(full_side: int) -> ScalePlan:
    """Kernel sides from 5 up to ``full_side``, each about sqrt(2) times the last."""
    if full_side < MIN_SIDE or full_side % 2 == 0:
        raise ValueError(f"full kernel side must be odd and >= {MIN_SIDE}, got {full_side}")
    sides = [MIN_SIDE]
    while sides[-1] < full_side:
        nxt = max(_nearest_odd(sides[-1] * math.sqrt(2.0)), sides[-1] + 2)
        sides.append(min(nxt, full_side))
    ladder = tuple((s, s / full_side) for s in sides)
    return ScalePlan(ladder=ladder, full_kernel_side=full_side)


def _interp_axis(a: np.ndarray, n_out: int, axis: int) -> np.ndarray:
    n_in = a.shape[axis]
    if n_out == n_in:
        return a.copy()
    if n_in == 1:
        return np.repeat(a, n_out, axis=axis)
    # align-corners sampling: both end samples map onto each other
    pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1)) if n_out > 1 else np.zeros(1)
    i0 = np.clip(np.floor(pos).astype(int), 0, n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = pos - i0
    shape = [1] * a.ndim
    shape[axis] = n_out
    frac = frac.reshape(shape)
    lo = np.take(a, i0, axis=axis)
    hi = np.take(a, i1, axis=axis)
    return lo * (1.0 - frac) + hi * frac


def _resize(a: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    return _interp_axis(_interp_axis(a, out_hw[0], -2), out_hw[1], -1)


def resample_image(img, scale: float) -> np.ndarray:
    """Bilinear resampling to ``round(scale * dims)`` (align-corners grid)."""
    u = as_image(img)
    if not 0 < scale <= 8:
        raise ValueError(f"scale must lie in (0, 8], got {scale}")
    out = (int(round(scale * u.shape[0])), int(round(scale * u.shape[1])))
    if min(out) < 3:
        raise ValueError(f"output too small: {out} from {u.shape} at scale {scale}")
    return _resize(u, out)


def upsample_kernel(k, new_side: int) -> np.ndarray:
    """Bilinear upsampling of a kernel followed by clipping and renormalization."""
    k = as_kernel(k)
    if new_side % 2 == 0 or new_side <= k.shape[0]:
        raise ValueError(f"new side must be odd and larger than {k.shape[0]}, got {new_side}")
    big = np.maximum(_resize(k, (new_side, new_side)), 0.0)
    total = big.sum()
    if total > 0:
        big /= total
    return project_simplex(big)


def upsample_field(x, out_hw: tuple[int, int]) -> np.ndarray:
    """Resize each gradient channel and rescale for the finer pixel pitch."""
    x = np.asarray(x, dtype=np.float64)
    ratio_y = x.shape[1] / out_hw[0]
    ratio_x = x.shape[2] / out_hw[1]
    big = _resize(x, out_hw)
    # channel 0 differentiates along columns, channel 1 along rows
    big[0] *= ratio_x
    big[1] *= ratio_y
    return big


ScaleHook = Callable[[int, np.ndarray, np.ndarray], None]


def run_pyramid(
    y_img,
    cfg: SolverConfig,
    plan: ScalePlan,
    coarse_iters: int = 30,
    final_iters: int = 180,
    trace: Optional[list] = None,
    on_scale: Optional[ScaleHook] = None,
) -> np.ndarray:
    """Estimate the full-resolution kernel of ``y_img``.

    ``trace`` collects ``(level, TraceRow)`` pairs; ``on_scale(level, k, x)``
    fires after each rung finishes.
    """
    y_img = as_image(y_img)
    k = None
    x = None
    n_levels = len(plan.ladder)
    for level, (side, scale) in enumerate(plan.ladder):
        y_s = y_img if scale == 1.0 else resample_image(y_img, scale)
        if side > min(y_s.shape):
            raise ValueError(f"kernel side {side} exceeds image {y_s.shape} at level {level}")
        y_grad = gradient_field(y_s)
        if k is None:
            k = delta_kernel(side)
            x = y_grad
        else:
            k = upsample_kernel(k, side)
            x = upsample_field(x, y_s.shape)
        x = project_sparse(x, initial_tau(y_grad, cfg))
        iters = final_iters if level == n_levels - 1 else coarse_iters
        level_trace = [] if trace is not None else None
        k, x = solve_scale(
            y_grad, k, x, cfg.replace(outer_iters=iters), trace=level_trace, plan=FreqPlan(y_s.shape)
        )
        if trace is not None:
            trace.extend((level, row) for row in level_trace)
        if on_scale is not None:
            on_scale(level, k, x)
    return k


def snapshot_writer(directory) -> ScaleHook:
    """Hook that dumps each rung's kernel as ``kernel_level{n}.pgm``."""
    from .imgio import write_kernel_pgm

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)

    def hook(level: int, k: np.ndarray, x: np.ndarray) -> None:
        write_kernel_pgm(k, out / f"kernel_level{level}.pgm")

    return hook
