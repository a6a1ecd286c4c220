"""Best m-term error functionals and the p-convexity constants.

``sigma_m``, ``sigma_tilde_m``, ``sigma_con_m``, ``D_m`` and ``D_con_m`` are
evaluated by enumeration over the window ``{1..W}`` with ``W = max(dim, m)``.
Indices past the window carry zero coefficients; an approximant placed there
never beats the zero approximant, so the value ``||x||`` stands in for all of
them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (DEFAULT_ENUMERATION_CAP, ContractViolation, Vec, check_cap,
                   subset_masks)
from .norms import LpNorm, NormEngine, SupNorm, WeightedLpNorm

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ErrorBudget:
    lambda_grid: int = 2048
    refine_tol: float = 1e-10
    coeff_opt_iters: int = 200
    coeff_grid: int = 257

    def __post_init__(self):
        if self.lambda_grid < 3 or self.coeff_grid < 3:
            raise ContractViolation("grids need at least 3 points")
        if not self.refine_tol > 0:
            raise ContractViolation("refinement tolerance must be positive")


DEFAULT_BUDGET = ErrorBudget()


@dataclass(frozen=True)
class PConstants:
    p: float
    kappa: int = 1

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ContractViolation(f"p must lie in (0, 1], got {self.p}")

    @property
    def A_p(self) -> float:
        return A_p(self.p)

    @property
    def B_p(self) -> float:
        return (2.0 * self.kappa) ** (1.0 / self.p) * self.A_p


def A_p(p: float) -> float:
    """``(2^p - 1)^(-1/p)``; equals 1 at p = 1."""
    if p == 1.0:
        return 1.0
    return (2.0**p - 1.0) ** (-1.0 / p)


# -- one-dimensional minimization ------------------------------------------

def golden_section_batch(f, lo, hi, tol: float = 1e-10, max_iter: int = 200):
    """Golden-section search run in lockstep on many brackets.

    ``f`` maps an array of abscissae (one per bracket) to objective values.
    Returns ``(argmin, min)`` arrays; each bracket is assumed unimodal.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(lo) + np.abs(hi))):
            break
        left = fc < fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        keep = np.where(left, c, d)
        fkeep = np.where(left, fc, fd)
        fresh = np.where(left, hi - GOLDEN * (hi - lo), lo + GOLDEN * (hi - lo))
        ffresh = f(fresh)
        c = np.where(left, fresh, keep)
        fc = np.where(left, ffresh, fkeep)
        d = np.where(left, keep, fresh)
        fd = np.where(left, fkeep, ffresh)
    mid = 0.5 * (lo + hi)
    fmid = f(mid)
    best = np.minimum(np.minimum(fc, fd), fmid)
    arg = np.where(best == fmid, mid, np.where(best == fc, c, d))
    return arg, best


def _grid_then_golden(f_batch, lo: float, hi: float, n_grid: int, tol: float,
                      extra=()) -> tuple[float, float]:
    """Scalar minimization: dense grid (plus candidate points), then golden
    refinement on the bracket around the best grid point."""
    grid = np.linspace(lo, hi, n_grid)
    vals = f_batch(grid)
    k = int(np.argmin(vals))
    best_x, best_v = grid[k], vals[k]
    if len(extra):
        ex = np.asarray(extra, dtype=float)
        ev = f_batch(ex)
        j = int(np.argmin(ev))
        if ev[j] < best_v:
            best_x, best_v = ex[j], ev[j]
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, n_grid - 1)]
    if b > a:
        x, v = golden_section_batch(f_batch, [a], [b], tol)
        if v[0] < best_v:
            best_x, best_v = x[0], v[0]
    return float(best_x), float(best_v)


# -- inner coefficient minimization ----------------------------------------

def inner_is_exact(engine: NormEngine) -> bool:
    probe = engine.best_free_residual(np.zeros((1, 1)), np.ones((1, 1), dtype=bool))
    return probe is not None


def free_residuals(engine: NormEngine, rows: np.ndarray, free: np.ndarray,
                   budget: ErrorBudget = DEFAULT_BUDGET, method: str = "auto") -> np.ndarray:
    """``inf_a ||x - sum_{n free} a_n e_n||`` for each row/mask pair.

    ``method="auto"`` uses the engine's exact formula when it has one and
    falls back to coordinate descent; ``"descent"`` forces the fallback, whose
    values are upper bounds for the infimum.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    free = np.broadcast_to(free, rows.shape)
    if method == "auto":
        exact = engine.best_free_residual(rows, free)
        if exact is not None:
            return exact
    elif method != "descent":
        raise ValueError(f"unknown method {method!r}")
    return np.array([_descent(engine, r, f, budget) for r, f in zip(rows, free)])


def _descent(engine: NormEngine, x: np.ndarray, free: np.ndarray, budget: ErrorBudget) -> float:
    """Cyclic coordinate descent on the residual, starting from P_A(x)."""
    r = np.where(free, 0.0, x)
    cols = np.flatnonzero(free)
    cur = float(engine.norm(r))
    if not len(cols) or cur == 0.0:
        return cur
    span = 2.0 * max(np.abs(x).max(), cur)
    for _ in range(budget.coeff_opt_iters):
        before = cur
        for j in cols:
            def f(vals, j=j):
                trial = np.repeat(r[None, :], len(vals), axis=0)
                trial[:, j] = vals
                return engine.norm(trial)
            v_arg, v_min = _grid_then_golden(f, -span, span, budget.coeff_grid,
                                             budget.refine_tol, extra=(r[j], 0.0))
            if v_min < cur:
                r[j] = v_arg
                cur = v_min
        if before - cur < 1e-12:
            break
    return cur


# -- window handling ---------------------------------------------------------

def _window(x: Vec, m: int) -> np.ndarray:
    if m < 0:
        raise ContractViolation("m must be nonnegative")
    return np.asarray(x.dense(max(x.dim, m)), dtype=float)


def interval_masks(W: int, m: int) -> np.ndarray:
    """Masks of the intervals of length m inside ``{1..W}`` (m <= W)."""
    starts = range(W - m + 1)
    out = np.zeros((len(starts), W), dtype=bool)
    for i, s in enumerate(starts):
        out[i, s:s + m] = True
    return out


def _set_masks(W: int, m: int, cap) -> np.ndarray:
    check_cap("supports", math.comb(W, m), cap)
    return subset_masks(W, m)


# -- the five functionals -----------------------------------------------------

def sigma_m(engine: NormEngine, x: Vec, m: int, budget: ErrorBudget = DEFAULT_BUDGET,
            cap: int | None = DEFAULT_ENUMERATION_CAP, method: str = "auto") -> float:
    """Best m-term error ``inf ||x - y||`` over ``|supp y| <= m``."""
    xd = _window(x, m)
    if m == 0:
        return float(engine.norm(xd))
    masks = _set_masks(len(xd), m, cap)
    return float(free_residuals(engine, np.broadcast_to(xd, masks.shape), masks,
                                budget, method).min())


def sigma_tilde_m(engine: NormEngine, x: Vec, m: int,
                  cap: int | None = DEFAULT_ENUMERATION_CAP) -> float:
    """Projection error ``min_{|A| = m} ||x - P_A(x)||``."""
    xd = _window(x, m)
    if m == 0:
        return float(engine.norm(xd))
    masks = _set_masks(len(xd), m, cap)
    return float(engine.norm(np.where(masks, 0.0, xd)).min())


def sigma_con_m(engine: NormEngine, x: Vec, m: int, budget: ErrorBudget = DEFAULT_BUDGET,
                method: str = "auto") -> float:
    """Error of the best approximant supported on an interval of length m."""
    xd = _window(x, m)
    whole = float(engine.norm(xd))
    if m == 0:
        return whole
    masks = interval_masks(len(xd), m)
    vals = free_residuals(engine, np.broadcast_to(xd, masks.shape), masks, budget, method)
    return float(min(whole, vals.min()))


def _lambda_candidates(engine: NormEngine, xd: np.ndarray, mask: np.ndarray) -> list[float]:
    vals = xd[mask]
    cands = [0.0, *vals.tolist()]
    if len(vals):
        cands.append(0.5 * (vals.max() + vals.min()))
    return cands


def _breakpoint_exact(engine: NormEngine) -> bool:
    # concave between breakpoints (q <= 1) or a midrange minimizer (sup)
    if isinstance(engine, SupNorm):
        return True
    return isinstance(engine, (LpNorm, WeightedLpNorm)) and engine.q <= 1.0


def constant_residuals(engine: NormEngine, xd: np.ndarray, masks: np.ndarray,
                       budget: ErrorBudget = DEFAULT_BUDGET, return_argmin: bool = False):
    """``min_lambda ||x - lambda 1_A||`` for each mask, vectorized over masks.

    With ``return_argmin`` the minimizing lambdas are returned as well.
    """
    masks = np.atleast_2d(masks)
    k, W = masks.shape
    if k == 0:
        return (np.zeros(0), np.zeros(0)) if return_argmin else np.zeros(0)
    R = 2.0 * float(np.abs(xd).max()) if xd.size else 0.0
    if R == 0.0:
        vals = engine.norm(np.zeros((k, W)))
        return (vals, np.zeros(k)) if return_argmin else vals
    mk = masks.astype(float)
    grid = np.linspace(-R, R, budget.lambda_grid)
    best = np.empty(k)
    arg = np.empty(k, dtype=int)
    chunk = max(1, 2_000_000 // (len(grid) * W))
    for s in range(0, k, chunk):
        vals = engine.norm(xd[None, None, :] - grid[None, :, None] * mk[s:s + chunk, None, :])
        best[s:s + chunk] = vals.min(axis=1)
        arg[s:s + chunk] = vals.argmin(axis=1)
    lam = grid[arg]
    # candidate points: 0, the coordinates on A, the midrange
    for i in range(k):
        c = np.array(_lambda_candidates(engine, xd, masks[i]))
        cv = engine.norm(xd[None, :] - c[:, None] * mk[i][None, :])
        j = int(np.argmin(cv))
        if cv[j] <= best[i]:
            best[i], lam[i] = cv[j], c[j]
    if not _breakpoint_exact(engine):
        step = grid[1] - grid[0]

        def f(lams):
            return engine.norm(xd[None, :] - lams[:, None] * mk)

        rl, refined = golden_section_batch(f, grid[arg] - step, grid[arg] + step,
                                           budget.refine_tol)
        better = refined < best
        best = np.where(better, refined, best)
        lam = np.where(better, rl, lam)
    return (best, lam) if return_argmin else best


def D_m(engine: NormEngine, x: Vec, m: int, budget: ErrorBudget = DEFAULT_BUDGET,
        cap: int | None = DEFAULT_ENUMERATION_CAP) -> float:
    """``inf ||x - lambda 1_A||`` over ``|A| <= m`` and real lambda."""
    xd = _window(x, m)
    best = float(engine.norm(xd))
    for k in range(1, m + 1):
        vals = constant_residuals(engine, xd, _set_masks(len(xd), k, cap), budget)
        best = min(best, float(vals.min()))
    return best


def D_con_m(engine: NormEngine, x: Vec, m: int, budget: ErrorBudget = DEFAULT_BUDGET) -> float:
    """``inf ||x - lambda 1_I||`` over intervals I of length m and real lambda."""
    xd = _window(x, m)
    whole = float(engine.norm(xd))
    if m == 0:
        return whole
    vals = constant_residuals(engine, xd, interval_masks(len(xd), m), budget)
    return float(min(whole, vals.min()))


# -- eta_p ------------------------------------------------------------------------

def _log_eta_objective(p: float, u: float, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    s = t / (A_p(p) * u)
    first = np.log1p(-(t**p))
    second = np.log(-np.expm1(-p * np.log1p(s)))
    return -(first + second) / p


def eta_p(p: float, u: float, n_grid: int = 4096, tol: float = 1e-13) -> float:
    """``min_{0<t<1} (1-t^p)^(-1/p) (1-(1+t/(A_p u))^(-p))^(-1/p)``."""
    if not 0.0 < p < 1.0:
        raise ContractViolation(f"eta_p needs 0 < p < 1, got {p}")
    if not u > 0:
        raise ContractViolation(f"eta_p needs u > 0, got {u}")
    grid = (np.arange(n_grid) + 0.5) / n_grid
    vals = _log_eta_objective(p, u, grid)
    k = int(np.argmin(vals))
    lo = grid[k - 1] if k > 0 else grid[0] / 2
    hi = grid[k + 1] if k < n_grid - 1 else (1.0 + grid[-1]) / 2
    _, v = golden_section_batch(lambda t: _log_eta_objective(p, u, t), [lo], [hi], tol)
    return float(math.exp(min(v[0], vals[k])))
