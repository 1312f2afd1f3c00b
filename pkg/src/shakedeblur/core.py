"""Array conventions, norms and the gradient-space transform.

Images are 2D ``float64`` arrays ``(H, W)``.  Gradient fields are ``(2, H, W)``
arrays: channel 0 is the horizontal first difference (filter ``[1, -1]``
along columns), channel 1 the vertical one.  Kernels are odd-sided square
``float64`` arrays on the probability simplex, centered at ``side // 2``.

All boundaries are circular.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "DegenerateImageError",
    "as_image",
    "as_field",
    "as_kernel",
    "delta_kernel",
    "gradient_field",
    "magnitude_map",
    "l20_count",
    "l1_l2_ratio",
    "kernel_center",
]


class DegenerateImageError(ValueError):
    """Raised when an image carries no gradient energy at all."""


def as_image(img) -> np.ndarray:
    """Validate and return ``img`` as a finite 2D float64 array."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"image must be a non-empty 2D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("image contains non-finite values")
    return a


def as_field(f) -> np.ndarray:
    """Validate and return ``f`` as a finite ``(2, H, W)`` float64 array."""
    a = np.asarray(f, dtype=np.float64)
    if a.ndim != 3 or a.shape[0] != 2:
        raise ValueError(f"gradient field must have shape (2, H, W), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("gradient field contains non-finite values")
    return a


def as_kernel(k, check_simplex: bool = False, atol: float = 1e-12) -> np.ndarray:
    a = np.asarray(k, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2 == 0:
        raise ValueError(f"kernel must be square with odd side, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("kernel contains non-finite values")
    if check_simplex and (a.min() < 0 or abs(a.sum() - 1.0) > atol):
        raise ValueError("kernel is not on the probability simplex")
    return a


def kernel_center(side: int) -> int:
    return side // 2


def delta_kernel(side: int) -> np.ndarray:
    """Centered Kronecker delta of odd ``side``."""
    if side < 1 or side % 2 == 0:
        raise ValueError(f"kernel side must be odd and positive, got {side}")
    k = np.zeros((side, side))
    c = kernel_center(side)
    k[c, c] = 1.0
    return k


def gradient_field(img) -> np.ndarray:
    """Circular forward differences ``(u[i, j+1] - u[i, j], u[i+1, j] - u[i, j])``."""
    u = as_image(img)
    out = np.empty((2,) + u.shape)
    out[0] = np.roll(u, -1, axis=1) - u
    out[1] = np.roll(u, -1, axis=0) - u
    return out


def magnitude_map(f) -> np.ndarray:
    """Per-pixel Euclidean length of the gradient vectors."""
    f = as_field(f)
    return np.hypot(f[0], f[1])


def l20_count(f) -> int:
    """Number of pixels whose gradient vector is not exactly zero."""
    f = as_field(f)
    return int(np.count_nonzero((f[0] != 0) | (f[1] != 0)))


def l1_l2_ratio(m) -> float:
    """``||m||_1 / ||m||_2``; lies in ``[1, sqrt(nnz(m))]``.

    Raises :class:`DegenerateImageError` for an all-zero map.
    """
    a = np.abs(np.asarray(m, dtype=np.float64)).ravel()
    # Rescale first so tiny or huge maps do not under/overflow in the square.
    peak = a.max() if a.size else 0.0
    if peak == 0.0:
        raise DegenerateImageError("degenerate image: all-zero magnitude map")
    a = a / peak
    return float(a.sum() / np.sqrt(np.dot(a, a)))
