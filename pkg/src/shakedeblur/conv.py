"""Circular 2D convolution with exact adjoints, computed in the Fourier domain.

Convention: for a kernel ``k`` of odd side ``s`` with center ``c = s // 2``,

    (k * u)(p) = sum_q k(q) u(p - (q - c))

with all image indices taken modulo the image shape.  ``correlate_kernel``
is the adjoint of ``u -> k * u`` and ``correlate_image`` the adjoint of
``k -> k * u`` (restricted to the kernel window).  Both operate channelwise
on gradient fields, i.e. on the trailing two axes.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as sfft

from .core import as_kernel

__all__ = [
    "KernelSizeError",
    "FreqPlan",
    "convolve",
    "correlate_kernel",
    "correlate_image",
    "edge_taper",
]


class KernelSizeError(ValueError):
    """Kernel does not fit the image it is applied to."""


def _offsets(side: int) -> np.ndarray:
    c = side // 2
    return np.arange(side) - c


class FreqPlan:
    """Transform workspace for one image shape.

    Holds the index tables used to embed kernels into (and extract them from)
    the circular image grid, plus a one-slot cache of the last kernel
    spectrum.  Not thread safe; give each solver its own plan.
    """

    def __init__(self, shape: tuple[int, int]):
        self.shape = (int(shape[0]), int(shape[1]))
        self._index = {}
        self._last_kernel = None
        self._last_spectrum = None

    def _kernel_index(self, side: int):
        if side > max(self.shape):
            raise KernelSizeError(
                f"kernel exceeds image: side {side} vs image {self.shape}"
            )
        if side not in self._index:
            off = _offsets(side)
            rows = np.mod(off, self.shape[0])[:, None]
            cols = np.mod(off, self.shape[1])[None, :]
            self._index[side] = np.broadcast_arrays(rows, cols)
        return self._index[side]

    def spectrum(self, a: np.ndarray) -> np.ndarray:
        if a.shape[-2:] != self.shape:
            raise ValueError(f"array shape {a.shape[-2:]} does not match plan {self.shape}")
        return sfft.rfft2(a, axes=(-2, -1))

    def inverse(self, a_hat: np.ndarray) -> np.ndarray:
        return sfft.irfft2(a_hat, s=self.shape, axes=(-2, -1))

    def embed(self, k: np.ndarray) -> np.ndarray:
        """Place ``k`` on the image grid with its center at pixel (0, 0)."""
        rows, cols = self._kernel_index(k.shape[0])
        grid = np.zeros(self.shape)
        # add.at, not assignment: taps alias when the kernel wraps a short axis
        np.add.at(grid, (rows, cols), k)
        return grid

    def extract(self, grid: np.ndarray, side: int) -> np.ndarray:
        """Adjoint of :meth:`embed`: read the kernel window back off the grid."""
        rows, cols = self._kernel_index(side)
        return grid[..., rows, cols]

    def kernel_spectrum(self, k: np.ndarray) -> np.ndarray:
        if self._last_kernel is not None and self._last_kernel.shape == k.shape and np.array_equal(
            self._last_kernel, k
        ):
            return self._last_spectrum
        spec = sfft.rfft2(self.embed(k))
        self._last_kernel = np.array(k, copy=True)
        self._last_spectrum = spec
        return spec


def _plan_for(a: np.ndarray, plan: FreqPlan | None) -> FreqPlan:
    if plan is None or plan.shape != a.shape[-2:]:
        return FreqPlan(a.shape[-2:])
    return plan


def convolve(k, f, plan: FreqPlan | None = None) -> np.ndarray:
    """Circular convolution ``k * f``, applied to each channel of ``f``."""
    k = as_kernel(k)
    f = np.asarray(f, dtype=np.float64)
    plan = _plan_for(f, plan)
    return plan.inverse(plan.kernel_spectrum(k) * plan.spectrum(f))


def correlate_kernel(k, f, plan: FreqPlan | None = None) -> np.ndarray:
    """Convolution with the 180-degree rotated kernel; adjoint of :func:`convolve`."""
    k = as_kernel(k)
    f = np.asarray(f, dtype=np.float64)
    plan = _plan_for(f, plan)
    return plan.inverse(np.conj(plan.kernel_spectrum(k)) * plan.spectrum(f))


def correlate_image(f, r, side: int, plan: FreqPlan | None = None) -> np.ndarray:
    """Gradient of ``<k * f, r>`` with respect to a ``side x side`` kernel.

    Entry ``(i, j)`` equals ``sum_ch sum_p f(p - (i - c, j - c)) r(p)``,
    summed over the leading channel axis when ``f`` is a gradient field.
    """
    f = np.asarray(f, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if f.shape != r.shape:
        raise ValueError(f"dimension mismatch: {f.shape} vs {r.shape}")
    if side < 1 or side % 2 == 0:
        raise ValueError(f"kernel side must be odd, got {side}")
    plan = _plan_for(f, plan)
    prod = np.conj(plan.spectrum(f)) * plan.spectrum(r)
    if prod.ndim == 3:
        prod = prod.sum(axis=0)
    return plan.extract(plan.inverse(prod), side)


def _taper_profile(psf_1d: np.ndarray, n: int) -> np.ndarray:
    # normalized circular autocorrelation of the kernel projection, zero-padded to n
    pad = np.zeros(n)
    pad[: psf_1d.size] = psf_1d
    ac = np.real(np.fft.ifft(np.abs(np.fft.fft(pad)) ** 2))
    ac = np.clip(ac / ac[0], 0.0, 1.0)
    idx = np.arange(n)
    lag = np.minimum(idx, n - 1 - idx)
    # weight 0 on the border row, 1 once the lag leaves the kernel support
    return 1.0 - ac[lag]


def edge_taper(img, k) -> np.ndarray:
    """Blend image borders toward a blurred copy to soften circular wrap seams.

    Interior pixels farther than the kernel support from any border are left
    untouched; at the border the output equals the circularly blurred image.
    """
    k = as_kernel(k)
    u = np.asarray(img, dtype=np.float64)
    h, w = u.shape
    wy = _taper_profile(k.sum(axis=1), h)
    wx = _taper_profile(k.sum(axis=0), w)
    weight = np.outer(wy, wx)
    blurred = convolve(k, u)
    return weight * u + (1.0 - weight) * blurred
