"""Non-blind deconvolution of the observed image with a known kernel.

Two solvers, both with circular boundaries:

* ``deconvolve_quadratic`` -- exact Fourier-domain minimizer of
  ``1/2 ||k * x - y||^2 + lam/2 ||grad x||^2``.
* ``deconvolve_irls`` -- hyper-Laplacian gradient prior
  ``1/2 ||k * x - y||^2 + lam/2 sum_p (|grad x(p)|^2 + eps)^(p/2)``
  minimized by iteratively reweighted least squares, each weighted
  quadratic solved with conjugate gradients.  Each reweighting is a
  majorize-minimize step, so the objective does not increase.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .conv import FreqPlan, edge_taper
from .core import as_image, as_kernel, gradient_field

__all__ = [
    "NonblindConfig",
    "CGConvergenceWarning",
    "deconvolve_quadratic",
    "deconvolve_irls",
    "irls_objective",
    "normal_equation_residual",
]


class CGConvergenceWarning(UserWarning):
    """Conjugate gradients stopped at the iteration cap before reaching tolerance."""


@dataclass(frozen=True)
class NonblindConfig:
    lam: float = 2e-3
    p_exponent: float = 0.8
    irls_iters: int = 8
    epsilon: float = 1e-4
    cg_tol: float = 1e-6
    cg_maxiter: int = 200
    taper: bool = False

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not 0 < self.p_exponent <= 2:
            raise ValueError(f"p_exponent must lie in (0, 2], got {self.p_exponent}")
        if self.irls_iters < 0:
            raise ValueError("irls_iters must be nonnegative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def _grad_adjoint(g: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`gradient_field` (negative circular divergence)."""
    return (np.roll(g[0], 1, axis=1) - g[0]) + (np.roll(g[1], 1, axis=0) - g[1])


def _diff_spectrum(plan: FreqPlan) -> np.ndarray:
    impulse = np.zeros(plan.shape)
    impulse[0, 0] = 1.0
    d = plan.spectrum(gradient_field(impulse))
    return (np.abs(d) ** 2).sum(axis=0)


def deconvolve_quadratic(y, k, lam: float) -> np.ndarray:
    """Closed-form Tikhonov-gradient deconvolution."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    y = as_image(y)
    k = as_kernel(k)
    plan = FreqPlan(y.shape)
    k_hat = plan.kernel_spectrum(k)
    denom = np.abs(k_hat) ** 2 + lam * _diff_spectrum(plan)
    return plan.inverse(np.conj(k_hat) * plan.spectrum(y) / denom)


def normal_equation_residual(x, y, k, lam: float) -> float:
    """Relative residual ``||A x - b|| / ||b||`` of the quadratic's normal equations."""
    x = as_image(x)
    y = as_image(y)
    plan = FreqPlan(y.shape)
    k_hat = plan.kernel_spectrum(as_kernel(k))
    ax = plan.inverse(np.abs(k_hat) ** 2 * plan.spectrum(x)) + lam * _grad_adjoint(gradient_field(x))
    b = plan.inverse(np.conj(k_hat) * plan.spectrum(y))
    return float(np.linalg.norm(ax - b) / max(np.linalg.norm(b), np.finfo(float).tiny))


def irls_objective(x, y, k, cfg: NonblindConfig, plan: FreqPlan | None = None) -> float:
    plan = plan or FreqPlan(y.shape)
    r = plan.inverse(plan.kernel_spectrum(k) * plan.spectrum(x)) - y
    g = gradient_field(x)
    s = g[0] ** 2 + g[1] ** 2
    return 0.5 * float(np.vdot(r, r)) + 0.5 * cfg.lam * float(
        np.sum((s + cfg.epsilon) ** (cfg.p_exponent / 2.0))
    )


def _cg(apply_a, b, x0, tol, maxiter):
    """Plain conjugate gradients; returns (x, converged)."""
    x = x0.copy()
    r = b - apply_a(x)
    p = r.copy()
    rs = float(np.vdot(r, r))
    b_norm = float(np.linalg.norm(b)) or 1.0
    if np.sqrt(rs) <= tol * b_norm:
        return x, True
    for _ in range(maxiter):
        ap = apply_a(p)
        pap = float(np.vdot(p, ap))
        if pap <= 0:
            break
        a = rs / pap
        x += a * p
        r -= a * ap
        rs_new = float(np.vdot(r, r))
        if np.sqrt(rs_new) <= tol * b_norm:
            return x, True
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, False


def deconvolve_irls(y, k, cfg: NonblindConfig = NonblindConfig(), trace: list | None = None) -> np.ndarray:
    """Sparse-gradient deconvolution by IRLS, started from the quadratic solution.

    ``trace`` (if given) receives the objective value before the first
    reweighting and after each one.
    """
    y = as_image(y)
    k = as_kernel(k)
    if cfg.taper:
        y = edge_taper(y, k)
    plan = FreqPlan(y.shape)
    k_hat = plan.kernel_spectrum(k)
    k2 = np.abs(k_hat) ** 2
    b = plan.inverse(np.conj(k_hat) * plan.spectrum(y))
    x = deconvolve_quadratic(y, k, cfg.lam)
    dc = float(y.mean())
    if trace is not None:
        trace.append(irls_objective(x, y, k, cfg, plan))
    half_p = cfg.p_exponent / 2.0
    failed = 0
    for _ in range(cfg.irls_iters):
        g = gradient_field(x)
        w = half_p * (g[0] ** 2 + g[1] ** 2 + cfg.epsilon) ** (half_p - 1.0)

        def apply_a(v, w=w):
            return plan.inverse(k2 * plan.spectrum(v)) + cfg.lam * _grad_adjoint(w * gradient_field(v))

        x, ok = _cg(apply_a, b, x, cfg.cg_tol, cfg.cg_maxiter)
        # the zero frequency decouples (unit-sum kernel, prior blind to constants);
        # pin it to its exact value so CG roundoff cannot drift the mean
        x += dc - x.mean()
        failed += not ok
        if trace is not None:
            trace.append(irls_objective(x, y, k, cfg, plan))
    if failed:
        warnings.warn(
            f"CG hit {cfg.cg_maxiter} iterations in {failed} of {cfg.irls_iters} reweightings",
            CGConvergenceWarning,
            stacklevel=2,
        )
    return x
