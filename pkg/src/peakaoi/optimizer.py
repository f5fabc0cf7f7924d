"""Parameter search for each retransmission scheme.

Peak AoI is typically quasiconvex in the age threshold but this is not
guaranteed, so every scalar search scans a coarse grid first and only then
refines by golden section inside the best grid cell. The best point seen
anywhere wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import analytic
from .errors import AoiError, InvalidParam, NoFiniteValue
from .model import (
    ProbFb,
    ProbNoFb,
    SystemParams,
    ThresholdFb,
    ThresholdNoFb,
    WindowFb,
    WindowNoFb,
)
from .simulator import simulate_parallel

__all__ = [
    "OptResult",
    "minimize_scalar",
    "default_w_range",
    "best_window",
    "best_prob",
    "best_threshold_sim",
    "theorem1_residual",
    "DEFAULT_B_MAX",
    "DEFAULT_GRID",
]

DEFAULT_GRID = 64
DEFAULT_B_MAX = 12
DEFAULT_PTX_RESOLUTION = 32
ANALYTIC_W_TOL = 1e-7
ANALYTIC_PTX_TOL = 1e-7
SIM_W_TOL = 0.05

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OptResult:
    best_params: object
    value: float
    stderr: float = 0.0
    evaluations: int = 0
    search_trace: Optional[List[Tuple[object, float]]] = field(default=None, repr=False)


def _better(f, x, best_f, best_x):
    # total order on (value, x): ties go to the smaller parameter
    return f < best_f or (f == best_f and x < best_x)


def minimize_scalar(objective: Callable[[float], float], lo: float, hi: float,
                    tol: float, n_grid: int = DEFAULT_GRID,
                    trace: Optional[list] = None) -> Tuple[float, float]:
    """Grid scan over ``[lo, hi]`` followed by golden-section refinement.

    Non-finite objective values (and NaN) are treated as ``+inf``. Returns the
    best ``(x, f)`` among all evaluated points. Every evaluation is appended to
    ``trace`` when one is given.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise InvalidParam(f"need finite lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise InvalidParam(f"tol must be > 0, got {tol}")
    if n_grid < 3:
        raise InvalidParam(f"n_grid must be >= 3, got {n_grid}")

    best_x, best_f = math.nan, math.inf

    def f(x):
        nonlocal best_x, best_f
        val = objective(x)
        val = float(val) if val == val else math.inf
        if trace is not None:
            trace.append((x, val))
        if math.isnan(best_x) or _better(val, x, best_f, best_x):
            best_x, best_f = x, val
        return val

    grid = np.linspace(lo, hi, n_grid)
    values = [f(float(x)) for x in grid]
    if not any(math.isfinite(v) for v in values):
        raise NoFiniteValue(f"objective is +inf at all {n_grid} grid points in [{lo}, {hi}]")
    i = min(range(n_grid), key=lambda k: (values[k], k))

    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, n_grid - 1)])
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return best_x, best_f


def default_w_range(params: SystemParams, dist) -> Tuple[float, float]:
    """Search interval for the age threshold.

    The lower end is the smallest S/C time (a dead gate); beyond the upper end
    the gate passes with probability above ``1 - 1e-8``.
    """
    return dist.min_support, dist.max_support + 20.0 / params.lam + 10.0 * params.D


def _scheme_flag(scheme):
    if scheme in ("fb", True):
        return True
    if scheme in ("nofb", False):
        return False
    raise InvalidParam(f"scheme must be 'fb' or 'nofb', got {scheme!r}")


def _safe(fn):
    def wrapped(*args):
        try:
            return fn(*args)
        except AoiError:
            return math.inf
    return wrapped


def best_window(params: SystemParams, dist, scheme="fb", W_range=None,
                B_max: int = DEFAULT_B_MAX, tol: float = ANALYTIC_W_TOL,
                n_grid: int = DEFAULT_GRID, keep_trace: bool = False) -> OptResult:
    """Best ``(W, B)`` for the window scheme, ``B`` scanned over ``1..B_max``."""
    feedback = _scheme_flag(scheme)
    if isinstance(B_max, bool) or int(B_max) != B_max or B_max < 1:
        raise InvalidParam(f"B_max must be a positive integer, got {B_max!r}")
    analytic.MDistribution.of(params, dist)  # closed forms need the two-point law
    lo, hi = W_range or default_w_range(params, dist)
    formula = analytic.peak_aoi_window_fb if feedback else analytic.peak_aoi_window_nofb
    cls = WindowFb if feedback else WindowNoFb
    objective = _safe(formula)

    trace = [] if keep_trace else None
    evaluations = 0
    best = None
    for B in range(1, int(B_max) + 1):
        local: list = []
        W, val = minimize_scalar(lambda w: objective(params, dist, w, B), lo, hi, tol,
                                 n_grid=n_grid, trace=local)
        evaluations += len(local)
        if trace is not None:
            trace.extend((cls(W=w, B=B), v) for w, v in local if w > 0)
        if best is None or (val, W, B) < best:
            best = (val, W, B)
    val, W, B = best
    if not math.isfinite(val):
        raise NoFiniteValue("window objective infinite for every B")
    return OptResult(cls(W=W, B=B), val, 0.0, evaluations, trace)


def best_prob(params: SystemParams, dist, scheme="fb", W_range=None,
              pTx_grid_resolution: int = DEFAULT_PTX_RESOLUTION,
              tol: float = ANALYTIC_W_TOL, pTx_tol: float = ANALYTIC_PTX_TOL,
              n_grid: int = DEFAULT_GRID, keep_trace: bool = False) -> OptResult:
    """Best ``(W, pTx)``: grid over ``pTx``, golden refinement around the best
    cell, with ``W`` minimised for every candidate ``pTx``."""
    feedback = _scheme_flag(scheme)
    res = pTx_grid_resolution
    if isinstance(res, bool) or int(res) != res or res < 8:
        raise InvalidParam(f"pTx grid resolution must be >= 8, got {res!r}")
    analytic.MDistribution.of(params, dist)
    res = int(res)
    lo, hi = W_range or default_w_range(params, dist)
    formula = analytic.peak_aoi_prob_fb if feedback else analytic.peak_aoi_prob_nofb
    cls = ProbFb if feedback else ProbNoFb
    objective = _safe(formula)
    if feedback:
        grid = [k / res for k in range(1, res + 1)]
    else:
        grid = [k / (res + 1) for k in range(1, res + 1)]

    trace = [] if keep_trace else None
    evaluations = 0
    inner_cache = {}

    def inner(p):
        nonlocal evaluations
        if p not in inner_cache:
            local: list = []
            W, val = minimize_scalar(lambda w: objective(params, dist, w, p), lo, hi, tol,
                                     n_grid=n_grid, trace=local)
            evaluations += len(local)
            if trace is not None:
                trace.extend((cls(W=w, pTx=p), v) for w, v in local if w > 0)
            inner_cache[p] = (val, W)
        return inner_cache[p]

    for p in grid:
        inner(p)
    i = min(range(res), key=lambda k: (inner(grid[k])[0], grid[k]))
    a = grid[i - 1] if i > 0 else grid[0] / 2.0
    b = grid[i + 1] if i + 1 < res else (grid[i] if feedback else (grid[i] + 1.0) / 2.0)
    if b > a:
        # pTx objective is the W-minimised value; golden section on it
        c = b - _INV_PHI * (b - a)
        d = a + _INV_PHI * (b - a)
        fc, fd = inner(c)[0], inner(d)[0]
        while b - a > pTx_tol:
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - _INV_PHI * (b - a)
                fc = inner(c)[0]
            else:
                a, c, fc = c, d, fd
                d = a + _INV_PHI * (b - a)
                fd = inner(d)[0]

    p_best = min(inner_cache, key=lambda p: (inner_cache[p][0], p))
    val, W = inner_cache[p_best]
    if not math.isfinite(val):
        raise NoFiniteValue("probabilistic objective infinite for every pTx")
    return OptResult(cls(W=W, pTx=p_best), val, 0.0, evaluations, trace)


def best_threshold_sim(params: SystemParams, dist, feedback: bool, W_range=None,
                       n_cycles: int = 10**6, seed: int = 0, tol: float = SIM_W_TOL,
                       n_grid: int = DEFAULT_GRID, n_workers: int = 1,
                       keep_trace: bool = False) -> OptResult:
    """Best threshold by simulation with common random numbers.

    Every candidate ``W`` is simulated from the same ``seed``, which makes the
    objective a deterministic function of ``W``.
    """
    cls = ThresholdFb if feedback else ThresholdNoFb
    if W_range is not None and not math.isfinite(W_range[1]):
        cls(W=W_range[1])  # rejects W = inf without feedback
    lo, hi = W_range or default_w_range(params, dist)
    estimates = {}

    def objective(W):
        if W not in estimates:
            try:
                estimates[W] = simulate_parallel(cls(W=W), params, dist, n_cycles, seed,
                                                 n_workers)
            except AoiError:
                estimates[W] = None
        est = estimates[W]
        return math.inf if est is None else est.mean

    local: list = []
    W, val = minimize_scalar(objective, lo, hi, tol, n_grid=n_grid, trace=local)
    trace = [(cls(W=w), v) for w, v in local if w > 0] if keep_trace else None
    return OptResult(cls(W=W), val, estimates[W].stderr, len(estimates), trace)


def theorem1_residual(params: SystemParams, dist, opt: OptResult) -> float:
    """Distance between an optimised feedback-threshold value and the optimal
    value implied by its threshold."""
    if type(opt.best_params) is not ThresholdFb:
        raise InvalidParam(
            "theorem1_residual needs the result of a feedback threshold search, "
            f"got {type(opt.best_params).__name__}"
        )
    return abs(opt.value - analytic.theorem1_optimal_value(params, opt.best_params.W))
