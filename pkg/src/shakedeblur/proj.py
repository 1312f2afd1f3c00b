"""Euclidean projections onto the two constraint sets of the kernel estimator.

* ``project_sparse``: the l2,0 ball ``{x : #nonzero gradient vectors <= tau}``,
  i.e. top-tau vector thresholding.
* ``project_simplex``: the canonical simplex ``{k : k >= 0, sum(k) = 1}``.
"""

from __future__ import annotations

import math

import numpy as np

from .core import as_field

__all__ = ["budget_count", "project_sparse", "project_simplex"]


def budget_count(tau: float, n_pixels: int) -> int:
    """Number of pixels a fractional budget ``tau`` keeps: ``ceil(tau)``, capped.

    ``tau`` is rounded to 9 decimals first so that products like ``100 * 1.1``
    (``110.00000000000001``) are not bumped to the next integer.
    """
    if not tau >= 1:
        raise ValueError(f"sparsity budget must be >= 1, got {tau}")
    return min(int(math.ceil(round(float(tau), 9))), n_pixels)


def project_sparse(f, tau: float) -> np.ndarray:
    """Keep the ``ceil(tau)`` gradient vectors of largest length, zero the rest.

    Vectors are kept or dropped whole and survivors are copied bit-exactly.
    Ties at the threshold go to the smaller row-major pixel index.
    """
    f = as_field(f)
    _, h, w = f.shape
    n = budget_count(tau, h * w)
    out = np.zeros_like(f)
    if n == 0:
        return out
    mag2 = (f[0] ** 2 + f[1] ** 2).ravel()
    if n >= mag2.size:
        keep = np.arange(mag2.size)
    else:
        theta = np.partition(mag2, mag2.size - n)[mag2.size - n]
        above = np.flatnonzero(mag2 > theta)
        at = np.flatnonzero(mag2 == theta)
        keep = np.concatenate([above, at[: n - above.size]])
    rows, cols = np.unravel_index(keep, (h, w))
    out[:, rows, cols] = f[:, rows, cols]
    return out


def project_simplex(k) -> np.ndarray:
    """Projection onto ``{k >= 0, sum k = 1}`` by sort-and-scan.

    Works on arrays of any shape (treated as flat vectors); output has the
    input's shape.
    """
    a = np.asarray(k, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("cannot project non-finite values")
    v = a.ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / ind > 0)[-1]
    sigma = css[rho] / (rho + 1)
    out = np.maximum(v - sigma, 0.0)
    # cancel cumulative-sum roundoff on the active set
    out /= out.sum()
    return out.reshape(a.shape)
