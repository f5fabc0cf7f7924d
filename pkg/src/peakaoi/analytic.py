"""Closed-form average peak AoI for the window and probabilistic schemes.

All expressions assume the two-point S/C law, so that ``M = C + I`` with
``I ~ Exp(lam)`` has the piecewise exponential density

    f_M(x) = p1 lam exp(-lam (x - m1)) u(x - m1) + p2 lam exp(-lam (x - m2)) u(x - m2).

Peak AoI is assembled as ``1/lam + E[n] E[A] + E[A_n]``: mean initial recharge,
Wald's identity over the generations of one renewal cycle, and the mean
lifetime of the update that is finally delivered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GateNeverPasses, InvalidParam
from .model import (
    ProbFb,
    ProbNoFb,
    ScDistribution,
    SystemParams,
    WindowFb,
    WindowNoFb,
    validate,
)

__all__ = [
    "MDistribution",
    "m_cdf",
    "m_partial_mean",
    "m_cond_mean_below",
    "BPLUS",
    "trunc_geom_pmf",
    "peak_aoi_window_fb",
    "peak_aoi_prob_fb",
    "peak_aoi_window_nofb",
    "peak_aoi_prob_nofb",
    "peak_aoi",
    "theorem1_optimal_value",
]

BPLUS = "B+"
"""Outcome label for 'all B attempts erased' in :func:`trunc_geom_pmf`."""


def _ipow(x: float, n: int) -> float:
    # binary powering keeps small pe**B free of log/exp round trips
    result = 1.0
    while n:
        if n & 1:
            result *= x
        x *= x
        n >>= 1
    return result


def _step(x: float) -> float:
    return 1.0 if x >= 0.0 else 0.0


@dataclass(frozen=True)
class MDistribution:
    """Law of the initial age ``M = C + I`` of a freshly generated update."""

    dist: ScDistribution
    lam: float

    def __post_init__(self):
        if not isinstance(self.dist, ScDistribution):
            raise InvalidParam(
                "closed forms need the two-point S/C family; "
                f"got {type(self.dist).__name__}"
            )
        if not self.lam > 0:
            raise InvalidParam(f"lambda must be > 0, got {self.lam}")

    @classmethod
    def of(cls, params: SystemParams, dist: ScDistribution) -> "MDistribution":
        return cls(dist, params.lam)

    def mean(self) -> float:
        return self.dist.mean() + 1.0 / self.lam

    def pdf(self, x: float) -> float:
        d, lam = self.dist, self.lam
        out = 0.0
        if x >= d.m1:
            out += d.p1 * lam * math.exp(-lam * (x - d.m1))
        if x >= d.m2:
            out += d.p2 * lam * math.exp(-lam * (x - d.m2))
        return out


def m_cdf(md: MDistribution, x: float) -> float:
    """``Pr(M <= x)``; ``x = inf`` returns exactly 1."""
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    d, lam = md.dist, md.lam
    out = 0.0
    # terms switched off by u(x - m) are skipped, not multiplied by zero
    if _step(x - d.m1):
        out += d.p1 * (1.0 - math.exp(-lam * (x - d.m1)))
    if _step(x - d.m2):
        out += d.p2 * (1.0 - math.exp(-lam * (x - d.m2)))
    return out


def m_partial_mean(md: MDistribution, x: float) -> float:
    """``E[M; M <= x]``, the integral of ``a f_M(a)`` up to ``x``."""
    if math.isinf(x):
        return md.mean() if x > 0 else 0.0
    d, lam = md.dist, md.lam
    r = 1.0 / lam
    out = 0.0
    if _step(x - d.m1):
        out += d.p1 * (d.m1 + r - (x + r) * math.exp(-lam * (x - d.m1)))
    if _step(x - d.m2):
        out += d.p2 * (d.m2 + r - (x + r) * math.exp(-lam * (x - d.m2)))
    return out


def m_cond_mean_below(md: MDistribution, W: float) -> float:
    """``E[M | M <= W]``."""
    if math.isinf(W) and W > 0:
        return md.mean()
    q = m_cdf(md, W)
    if q <= 0.0:
        raise GateNeverPasses(f"Pr(C + I <= {W:g}) = 0")
    return m_partial_mean(md, W) / q


def trunc_geom_pmf(pe: float, B: int, v) -> float:
    """Attempt count of one committed update under a budget of ``B`` attempts.

    ``v`` in ``1..B`` means success on attempt ``v``; ``v == BPLUS`` means all
    ``B`` attempts were erased.
    """
    if v == BPLUS:
        return _ipow(pe, B)
    if not 1 <= v <= B:
        return 0.0
    return (1.0 - pe) * _ipow(pe, v - 1)


# --- scheme assembly --------------------------------------------------------


def _gate(params, dist, W):
    md = MDistribution.of(params, dist)
    q = m_cdf(md, W)
    if q <= 0.0:
        raise GateNeverPasses(f"Pr(C + I <= {W:g}) = 0")
    return md, q


def _window_terms(params: SystemParams, dist: ScDistribution, W: float, B: int):
    validate(params, dist, WindowFb(W=W, B=B))
    md, q = _gate(params, dist, W)
    pe, D, r = params.pe, params.D, 1.0 / params.lam
    peB = _ipow(pe, B)
    # (1 - pe^B) E[T | success]; a single attempt is certain success when pe = 0
    geo = (1.0 - peB) / (1.0 - pe)
    weighted_success_T = (geo - B * peB) * D + (geo - (1.0 - peB) - B * peB) * r
    success_T = weighted_success_T / (1.0 - peB)
    mean_T = q * peB * B * (D + r) + q * weighted_success_T
    mean_A = dist.mean() + r + mean_T
    mean_n = 1.0 / ((1.0 - peB) * q)
    return md, mean_n, mean_A, success_T


def peak_aoi_window_fb(params: SystemParams, dist: ScDistribution, W: float, B: int) -> float:
    md, mean_n, mean_A, success_T = _window_terms(params, dist, W, B)
    stopped = m_cond_mean_below(md, W) + success_T
    return 1.0 / params.lam + mean_n * mean_A + stopped


def peak_aoi_window_nofb(params: SystemParams, dist: ScDistribution, W: float, B: int) -> float:
    md, mean_n, mean_A, _ = _window_terms(params, dist, W, B)
    # all B attempts are made whatever happens, B - 1 recharges between them
    stopped = m_cond_mean_below(md, W) + B * params.D + (B - 1) / params.lam
    return 1.0 / params.lam + mean_n * mean_A + stopped


def _prob_terms(params: SystemParams, dist: ScDistribution, W: float, pTx: float):
    validate(params, dist, ProbFb(W=W, pTx=pTx))
    md, q = _gate(params, dist, W)
    pe, D, r = params.pe, params.D, 1.0 / params.lam
    rho = pe * pTx
    mean_n = (1.0 - rho) / (q * pTx * (1.0 - pe))
    gated_T = ((1.0 - pTx) * pe * pTx / (1.0 - rho) ** 2) * (D + r) + (
        pTx * (1.0 - pe) / (1.0 - rho) ** 2
    ) * (D + rho * r)
    mean_A = dist.mean() + r + q * gated_T
    success_T = (D + rho * r) / (1.0 - rho)
    return md, mean_n, mean_A, success_T


def peak_aoi_prob_fb(params: SystemParams, dist: ScDistribution, W: float, pTx: float) -> float:
    md, mean_n, mean_A, success_T = _prob_terms(params, dist, W, pTx)
    stopped = m_cond_mean_below(md, W) + success_T
    return 1.0 / params.lam + mean_n * mean_A + stopped


def prob_nofb_extra_time(params: SystemParams, pTx: float) -> float:
    """Mean transmitter time spent on a delivered update after its delivery."""
    return (params.D + 1.0 / params.lam) * pTx / (1.0 - pTx)


def peak_aoi_prob_nofb(params: SystemParams, dist: ScDistribution, W: float, pTx: float) -> float:
    if not 0.0 < pTx < 1.0:
        raise InvalidParam(f"pTx must lie in (0, 1) without feedback, got {pTx}")
    md, mean_n, mean_A, success_T = _prob_terms(params, dist, W, pTx)
    stopped = (
        m_cond_mean_below(md, W) + success_T + prob_nofb_extra_time(params, pTx)
    )
    return 1.0 / params.lam + mean_n * mean_A + stopped


def peak_aoi(params: SystemParams, dist: ScDistribution, policy) -> float:
    """Closed-form value for ``policy``; raises ``NotImplementedError`` for
    threshold schemes, which are simulation-only."""
    kind = type(policy)
    if kind is WindowFb:
        return peak_aoi_window_fb(params, dist, policy.W, policy.B)
    if kind is WindowNoFb:
        return peak_aoi_window_nofb(params, dist, policy.W, policy.B)
    if kind is ProbFb:
        return peak_aoi_prob_fb(params, dist, policy.W, policy.pTx)
    if kind is ProbNoFb:
        return peak_aoi_prob_nofb(params, dist, policy.W, policy.pTx)
    raise NotImplementedError(f"no closed form for {policy.scheme}")


def theorem1_optimal_value(params: SystemParams, W_th: float) -> float:
    """Optimal peak AoI of the feedback threshold policy expressed through its
    optimal threshold ``W_th``."""
    pe, D, lam = params.pe, params.D, params.lam
    return D / (1.0 - pe) + W_th + D + 1.0 / ((1.0 - pe) * lam)
