"""Single-scale alternating projected gradient for

    minimize_{k, x}  1/2 ||k * x - y||^2
    subject to       k >= 0,  sum(k) = 1,  ||x||_{2,0} <= tau

over a gradient field ``x`` and kernel ``k``, with a budget ``tau`` that grows
geometrically after a burn-in period.

Each outer iteration runs ``x_inner`` projected gradient steps on ``x``
(closed-form line-search start, top-tau projection) and ``k_inner`` spectral
projected gradient steps on ``k`` (Barzilai-Borwein steps, simplex
projection).  Every update is accepted only if it lowers the misfit, so the
misfit is monotone.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .conv import FreqPlan
from .core import (
    DegenerateImageError,
    as_field,
    as_kernel,
    l1_l2_ratio,
    magnitude_map,
)
from .proj import project_simplex, project_sparse

__all__ = [
    "SolverConfig",
    "SolverState",
    "TraceRow",
    "misfit",
    "tau_schedule",
    "initial_tau",
    "bb_step",
    "line_search_start",
    "misfit_gradients",
    "x_step",
    "k_step",
    "solve_scale",
]


@dataclass(frozen=True)
class SolverConfig:
    beta0: float = 0.15
    gamma_growth: float = 1.10
    burn_in: int = 20
    grow_every: int = 10
    x_inner: int = 1
    k_inner: int = 6
    outer_iters: int = 30
    armijo_c: float = 1e-4
    backtrack_max: int = 20
    step_floor: float = 1e-6
    # tau0 = beta0 * ratio**2 instead of beta0 * ratio
    tau_squared: bool = True
    # "bb1": alpha = dk.dk / dk.dg (long step); "bb2": alpha = dg.dg / dg.dk (short step)
    bb_rule: str = "bb1"

    def __post_init__(self):
        if not 0 < self.beta0 < 1:
            raise ValueError(f"beta0 must lie in (0, 1), got {self.beta0}")
        if not self.gamma_growth > 1:
            raise ValueError(f"gamma_growth must exceed 1, got {self.gamma_growth}")
        for name in ("burn_in", "grow_every", "x_inner", "k_inner"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.outer_iters < 0 or self.backtrack_max < 0:
            raise ValueError("iteration counts must be nonnegative")
        if not 0 < self.step_floor < 1:
            raise ValueError("step_floor must lie in (0, 1)")
        if self.bb_rule not in ("bb1", "bb2"):
            raise ValueError(f"unknown bb_rule {self.bb_rule!r}")

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class SolverState:
    k: np.ndarray
    x: np.ndarray
    tau: float
    outer_t: int = 0
    g_k_old: Optional[np.ndarray] = None
    k_old: Optional[np.ndarray] = None
    L_value: float = math.nan
    alpha_x: float = math.nan
    alpha_k: float = math.nan
    backtracks: int = 0


@dataclass(frozen=True)
class TraceRow:
    t: int
    tau: float
    L: float
    alpha_x: float
    alpha_k: float
    backtracks: int

    FIELDS = ("t", "tau", "L", "alpha_x", "alpha_k", "backtracks")

    def values(self) -> tuple:
        return tuple(getattr(self, f) for f in self.FIELDS)


def _plan(y: np.ndarray, plan: FreqPlan | None) -> FreqPlan:
    if plan is None or plan.shape != y.shape[-2:]:
        return FreqPlan(y.shape[-2:])
    return plan


def _residual(k_hat, x, y, plan):
    return plan.inverse(k_hat * plan.spectrum(x)) - y


def misfit(k, x, y, plan: FreqPlan | None = None) -> float:
    """``1/2 ||k * x - y||^2`` summed over pixels and channels."""
    k = as_kernel(k)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    plan = _plan(y, plan)
    r = _residual(plan.kernel_spectrum(k), x, y, plan)
    return 0.5 * float(np.vdot(r, r))


def misfit_gradients(k, x, y, plan: FreqPlan | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(grad_k, grad_x)`` of the misfit: ``sum_ch rot(x_ch) * r_ch`` and ``rot(k) * r``."""
    k = as_kernel(k)
    plan = _plan(y, plan)
    k_hat = plan.kernel_spectrum(k)
    x_hat = plan.spectrum(x)
    r_hat = plan.spectrum(plan.inverse(k_hat * x_hat) - y)
    g_x = plan.inverse(np.conj(k_hat) * r_hat)
    g_k = plan.extract(plan.inverse((np.conj(x_hat) * r_hat).sum(axis=0)), k.shape[0])
    return g_k, g_x


def line_search_start(kg: np.ndarray, r: np.ndarray) -> float:
    """Minimizer over ``alpha`` of ``||r - alpha * kg||^2``, i.e. ``<kg, r> / <kg, kg>``."""
    return float(np.vdot(kg, r)) / float(np.vdot(kg, kg))


def tau_schedule(t: int, tau0: float, cfg: SolverConfig) -> float:
    """Budget in force at outer iteration ``t``.

    ``tau0`` until ``burn_in``, then multiplied by ``gamma_growth`` at
    ``burn_in`` and every ``grow_every`` iterations after.
    """
    if t < 0:
        raise ValueError("iteration index must be nonnegative")
    if t < cfg.burn_in:
        return tau0
    return tau0 * cfg.gamma_growth ** (1 + (t - cfg.burn_in) // cfg.grow_every)


def initial_tau(y, cfg: SolverConfig) -> float:
    """Starting budget ``beta0 * ratio`` (or ``ratio**2``) of the edge map, at least 1."""
    ratio = l1_l2_ratio(magnitude_map(y))
    scale = ratio * ratio if cfg.tau_squared else ratio
    return max(1.0, cfg.beta0 * scale)


def bb_step(dg: np.ndarray, dk: np.ndarray, rule: str = "bb2") -> float:
    """Barzilai-Borwein step from gradient and iterate differences.

    Returns ``nan`` when the curvature ``dg . dk`` is not positive.
    """
    curv = float(np.vdot(dg, dk))
    if not (curv > 0 and math.isfinite(curv)):
        return math.nan
    if rule == "bb2":
        return float(np.vdot(dg, dg)) / curv
    return float(np.vdot(dk, dk)) / curv


def x_step(state: SolverState, y, cfg: SolverConfig, plan: FreqPlan | None = None) -> SolverState:
    """One projected gradient step on ``x`` with the kernel held fixed."""
    plan = _plan(y, plan)
    k_hat = plan.kernel_spectrum(state.k)
    x = state.x
    r = _residual(k_hat, x, y, plan)
    L0 = 0.5 * float(np.vdot(r, r))
    state.L_value = L0
    state.alpha_x = 0.0
    g = plan.inverse(np.conj(k_hat) * plan.spectrum(r))
    kg = plan.inverse(k_hat * plan.spectrum(g))
    den = float(np.vdot(kg, kg))
    if den == 0.0:
        return state
    alpha = line_search_start(kg, r)
    for _ in range(cfg.backtrack_max + 1):
        cand = project_sparse(x - alpha * g, state.tau)
        rc = _residual(k_hat, cand, y, plan)
        Lc = 0.5 * float(np.vdot(rc, rc))
        if Lc < L0:
            state.x = cand
            state.L_value = Lc
            state.alpha_x = alpha
            return state
        alpha *= 0.5
        state.backtracks += 1
    return state


def k_step(state: SolverState, y, cfg: SolverConfig, plan: FreqPlan | None = None) -> SolverState:
    """``k_inner`` spectral projected gradient steps on ``k`` with ``x`` fixed.

    The first step of each call uses ``alpha = 1``; later ones use the
    Barzilai-Borwein step from the previous inner iteration, clamped to
    ``[step_floor, 1 / step_floor]``.  Acceptance is Armijo on the projected
    step, falling back to the first candidate with plain decrease.
    """
    plan = _plan(y, plan)
    side = state.k.shape[0]
    x_hat = plan.spectrum(state.x)
    x_hat_conj = np.conj(x_hat)
    state.g_k_old = None
    state.k_old = None

    def residual_for(k):
        return plan.inverse(plan.spectrum(plan.embed(k)) * x_hat) - y

    k = state.k
    r = residual_for(k)
    L0 = 0.5 * float(np.vdot(r, r))
    for _ in range(cfg.k_inner):
        g = plan.extract(plan.inverse((x_hat_conj * plan.spectrum(r)).sum(axis=0)), side)
        alpha = 1.0
        if state.g_k_old is not None:
            a = bb_step(g - state.g_k_old, k - state.k_old, cfg.bb_rule)
            if math.isfinite(a):
                alpha = min(max(a, cfg.step_floor), 1.0 / cfg.step_floor)
        state.alpha_k = alpha
        accepted = None
        fallback = None
        for _ in range(cfg.backtrack_max + 1):
            cand = project_simplex(k - alpha * g)
            rc = residual_for(cand)
            Lc = 0.5 * float(np.vdot(rc, rc))
            if Lc <= L0 + cfg.armijo_c * float(np.vdot(g, cand - k)) and Lc <= L0:
                accepted = (cand, rc, Lc, alpha)
                break
            if fallback is None and Lc < L0:
                fallback = (cand, rc, Lc, alpha)
            alpha *= 0.5
            state.backtracks += 1
        accepted = accepted or fallback
        state.g_k_old, state.k_old = g, k
        if accepted is None:
            state.alpha_k = 0.0
            continue
        k, r, L0, state.alpha_k = accepted
    state.k = k
    state.L_value = L0
    return state


Monitor = Callable[[SolverState, str], None]


def solve_scale(
    y,
    k_init,
    x_init,
    cfg: SolverConfig,
    trace: list | None = None,
    monitor: Monitor | None = None,
    plan: FreqPlan | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run ``cfg.outer_iters`` alternating iterations at one scale.

    ``trace`` (if given) receives one :class:`TraceRow` per outer iteration;
    ``monitor`` is called after every inner update with the live state and
    ``"x"`` or ``"k"``.
    """
    y = as_field(y)
    x_init = as_field(x_init)
    if x_init.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x_init.shape} vs {y.shape}")
    try:
        tau0 = initial_tau(y, cfg)
    except DegenerateImageError:
        raise DegenerateImageError("degenerate image: observed gradients are all zero") from None
    plan = _plan(y, plan)
    state = SolverState(
        k=project_simplex(as_kernel(k_init)),
        x=project_sparse(x_init, tau0),
        tau=tau0,
    )
    state.L_value = misfit(state.k, state.x, y, plan)
    for t in range(cfg.outer_iters):
        state.outer_t = t
        state.tau = tau_schedule(t, tau0, cfg)
        state.backtracks = 0
        for _ in range(cfg.x_inner):
            x_step(state, y, cfg, plan)
            if monitor is not None:
                monitor(state, "x")
        k_step(state, y, cfg, plan)
        if monitor is not None:
            monitor(state, "k")
        if trace is not None:
            trace.append(
                TraceRow(t, state.tau, state.L_value, state.alpha_x, state.alpha_k, state.backtracks)
            )
    return state.k, state.x
