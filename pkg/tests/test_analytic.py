"""Closed forms checked against hand values, quadrature and brute-force sums."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from peakaoi.analytic import (
    BPLUS,
    MDistribution,
    m_cdf,
    m_cond_mean_below,
    m_partial_mean,
    peak_aoi,
    peak_aoi_prob_fb,
    peak_aoi_prob_nofb,
    peak_aoi_window_fb,
    peak_aoi_window_nofb,
    theorem1_optimal_value,
    trunc_geom_pmf,
)
from peakaoi.errors import DeadPolicy, GateNeverPasses, InvalidParam
from peakaoi.model import EmpiricalSc, ScDistribution, SystemParams, ThresholdFb, WindowFb

INF = math.inf
THETA10 = ScDistribution.from_theta(10)


def params(lam=1.0, pe=0.0, D=1.0):
    return SystemParams(lam=lam, pe=pe, D=D)


def md(lam=1.0, theta=10):
    return MDistribution(ScDistribution.from_theta(theta), lam)


def density(x, lam, d):
    # independent transcription of f_M for the quadrature oracle
    out = 0.0
    if x >= d.m1:
        out += (1 - d.p2) * lam * math.exp(-lam * (x - d.m1))
    if x >= d.m2:
        out += d.p2 * lam * math.exp(-lam * (x - d.m2))
    return out


# --- M = C + I --------------------------------------------------------------


class TestMDistribution:
    def test_cdf_at_m1(self):
        assert m_cdf(md(), 1.0) == 0.0
        assert m_cdf(md(), 0.3) == 0.0

    def test_cdf_tail(self):
        v = m_cdf(md(), 1e9)
        assert 1 - v < 1e-12

    def test_cdf_at_20(self):
        expected = 15 / 19 * (1 - math.exp(-19))
        assert m_cdf(md(), 20.0) == pytest.approx(expected, rel=1e-15)
        assert round(m_cdf(md(), 20.0), 6) == 0.789474

    def test_cdf_matches_empirical(self):
        rng = np.random.default_rng(20240611)
        n = 10**7
        d = THETA10
        m = np.where(rng.random(n) < d.p2, d.m2, d.m1) + rng.exponential(1.0, n)
        for x in (2.0, 5.0, 20.0, 23.0):
            p = m_cdf(md(), x)
            assert abs(np.mean(m <= x) - p) <= 4 * math.sqrt(p * (1 - p) / n)

    def test_partial_mean_limits(self):
        assert m_partial_mean(md(), 1.0) == 0.0
        assert m_partial_mean(md(), INF) == 6.0
        assert m_partial_mean(md(), 1e4) == pytest.approx(6.0, rel=1e-14)

    @pytest.mark.parametrize("x", [3.0, 15.0, 20.0, 26.5])
    def test_partial_mean_quadrature(self, x):
        d = THETA10
        pts = [p for p in (d.m1, d.m2) if p < x] + [x]
        total = sum(
            integrate.quad(lambda a: a * density(a, 1.0, d), lo, hi, epsabs=1e-13, epsrel=1e-13)[0]
            for lo, hi in zip(pts[:-1], pts[1:])
        )
        assert m_partial_mean(md(), x) == pytest.approx(total, abs=1e-8)

    def test_cdf_quadrature(self):
        d = THETA10
        total = integrate.quad(lambda a: density(a, 1.0, d), 1.0, 20.0)[0] + integrate.quad(
            lambda a: density(a, 1.0, d), 20.0, 24.0)[0]
        assert m_cdf(md(), 24.0) == pytest.approx(total, abs=1e-10)

    def test_cond_mean(self):
        assert m_cond_mean_below(md(), INF) == 6.0
        with pytest.raises(GateNeverPasses):
            m_cond_mean_below(md(), 1.0)

    def test_cond_mean_rejection_sampling(self):
        rng = np.random.default_rng(77)
        n = 10**7
        d = THETA10
        m = np.where(rng.random(n) < d.p2, d.m2, d.m1) + rng.exponential(1.0, n)
        kept = m[m <= 5.0]
        se = kept.std() / math.sqrt(kept.size)
        assert abs(m_cond_mean_below(md(), 5.0) - kept.mean()) <= 3 * se
        assert 1.0 < m_cond_mean_below(md(), 5.0) < 5.0

    @pytest.mark.parametrize("lam,theta", [(0.3, 0), (1.0, 10), (4.0, 45)])
    def test_monotone_on_grid(self, lam, theta):
        m = md(lam, theta)
        xs = np.linspace(0, 80, 4001)
        c = [m_cdf(m, x) for x in xs]
        pm = [m_partial_mean(m, x) for x in xs]
        assert all(b >= a for a, b in zip(c, c[1:]))
        assert all(b >= a - 1e-15 for a, b in zip(pm, pm[1:]))
        assert all(0.0 <= v <= 1.0 for v in c)

    def test_rejects_empirical(self):
        with pytest.raises(InvalidParam):
            MDistribution(EmpiricalSc(np.array([1.0, 2.0])), 1.0)


# --- truncated geometric ----------------------------------------------------


def enumerate_attempts(pe, B):
    """Brute force over erasure patterns of B attempts, stopping at success."""
    probs = {}
    for pattern in itertools.product((False, True), repeat=B):  # True = erased
        w = math.prod(pe if e else 1 - pe for e in pattern)
        first_ok = next((i + 1 for i, e in enumerate(pattern) if not e), None)
        key = BPLUS if first_ok is None else first_ok
        probs[key] = probs.get(key, 0.0) + w
    return probs


class TestTruncGeom:
    def test_no_erasures(self):
        assert trunc_geom_pmf(0.0, 3, 1) == 1.0
        assert [trunc_geom_pmf(0.0, 3, v) for v in (2, 3, BPLUS)] == [0.0, 0.0, 0.0]

    def test_half(self):
        assert trunc_geom_pmf(0.5, 2, 1) == 0.5
        assert trunc_geom_pmf(0.5, 2, 2) == 0.25
        assert trunc_geom_pmf(0.5, 2, BPLUS) == 0.25

    @pytest.mark.parametrize("pe,B", [(0.5, 2), (0.2, 4), (0.9, 6)])
    def test_enumeration(self, pe, B):
        brute = enumerate_attempts(pe, B)
        for v in list(range(1, B + 1)) + [BPLUS]:
            assert trunc_geom_pmf(pe, B, v) == pytest.approx(brute.get(v, 0.0), abs=1e-15)

    def test_out_of_range(self):
        assert trunc_geom_pmf(0.5, 3, 4) == 0.0
        assert trunc_geom_pmf(0.5, 3, 0) == 0.0

    @given(pe=st.floats(0, 0.999), B=st.integers(1, 60))
    def test_sums_to_one_and_mean(self, pe, B):
        pmf = [trunc_geom_pmf(pe, B, v) for v in range(1, B + 1)]
        tail = trunc_geom_pmf(pe, B, BPLUS)
        assert math.fsum(pmf) + tail == pytest.approx(1.0, abs=1e-12)
        mean = math.fsum(v * p for v, p in enumerate(pmf, 1)) + B * tail
        assert mean == pytest.approx((1 - pe**B) / (1 - pe), abs=1e-12)


# --- scheme formulas --------------------------------------------------------


class TestAnchors:
    def test_window_fb_no_erasure(self):
        assert peak_aoi_window_fb(params(), THETA10, INF, 1) == pytest.approx(15, rel=1e-9)

    def test_window_fb_half_erasure(self):
        v = peak_aoi_window_fb(params(pe=0.5), THETA10, INF, 2)
        assert v == pytest.approx(59 / 3, rel=1e-9)

    def test_prob_fb(self):
        assert peak_aoi_prob_fb(params(), THETA10, INF, 1.0) == pytest.approx(15, rel=1e-9)
        assert peak_aoi_prob_fb(params(pe=0.5), THETA10, INF, 1.0) == pytest.approx(19, rel=1e-9)

    def test_window_nofb(self):
        assert peak_aoi_window_nofb(params(), THETA10, INF, 2) == pytest.approx(17, rel=1e-9)

    def test_prob_nofb(self):
        assert peak_aoi_prob_nofb(params(), THETA10, INF, 0.5) == pytest.approx(23, rel=1e-9)

    def test_threshold_line_value(self):
        assert theorem1_optimal_value(params(pe=0.2), 10) == pytest.approx(13.5, rel=1e-15)
        assert theorem1_optimal_value(params(lam=2, pe=0.5), 5) == 9.0
        for w in (0.0, 3.5, 12.0):
            assert theorem1_optimal_value(params(), w) == 3.0 + w


def window_oracle(p, d, W, B, nofb=False):
    """Renewal-reward assembly from enumerated attempt outcomes."""
    m = MDistribution(d, p.lam)
    q = m_cdf(m, W)
    r = 1 / p.lam
    brute = enumerate_attempts(p.pe, B)
    fail = brute.get(BPLUS, 0.0)
    succ = {v: w for v, w in brute.items() if v != BPLUS}
    t_success = sum(w * (v * p.D + (v - 1) * r) for v, w in succ.items()) / (1 - fail)
    mean_T = q * (fail * B * (p.D + r) + (1 - fail) * t_success)
    n_gen = 1 / (q * (1 - fail))
    tail = B * p.D + (B - 1) * r if nofb else t_success
    return r + n_gen * (d.mean() + r + mean_T) + m_cond_mean_below(m, W) + tail


def prob_oracle(p, d, W, pTx, nofb=False, terms=3000):
    """Same assembly with the abandon/success split summed term by term."""
    m = MDistribution(d, p.lam)
    q = m_cdf(m, W)
    r = 1 / p.lam
    pe = p.pe
    abandon = [(pe * pTx) ** k * (1 - pTx) for k in range(terms)]
    success = [(1 - pe) * pe ** (k - 1) * pTx**k for k in range(1, terms)]
    t_gate = math.fsum(w * k * (p.D + r) for k, w in enumerate(abandon)) + math.fsum(
        w * (k * p.D + (k - 1) * r) for k, w in enumerate(success, 1))
    p_success = math.fsum(success)
    t_success = math.fsum(w * (k * p.D + (k - 1) * r) for k, w in enumerate(success, 1)) / p_success
    ext = math.fsum(pTx**k * (1 - pTx) * k * (p.D + r) for k in range(terms)) if nofb else 0.0
    n_gen = 1 / (q * p_success)
    return r + n_gen * (d.mean() + r + q * t_gate) + m_cond_mean_below(m, W) + t_success + ext


GRID = [(lam, pe, W) for lam in (0.5, 1.0, 3.0) for pe in (0.0, 0.3, 0.7) for W in (4.0, 22.0, INF)]


class TestAgainstEnumeration:
    @pytest.mark.parametrize("lam,pe,W", GRID)
    @pytest.mark.parametrize("B", [1, 2, 5])
    def test_window(self, lam, pe, W, B):
        p = params(lam, pe, 1.3)
        assert peak_aoi_window_fb(p, THETA10, W, B) == pytest.approx(
            window_oracle(p, THETA10, W, B), rel=1e-12)
        assert peak_aoi_window_nofb(p, THETA10, W, B) == pytest.approx(
            window_oracle(p, THETA10, W, B, nofb=True), rel=1e-12)

    @pytest.mark.parametrize("lam,pe,W", GRID)
    @pytest.mark.parametrize("pTx", [0.2, 0.6, 0.95])
    def test_prob(self, lam, pe, W, pTx):
        p = params(lam, pe, 0.7)
        assert peak_aoi_prob_fb(p, THETA10, W, pTx) == pytest.approx(
            prob_oracle(p, THETA10, W, pTx), rel=1e-9)
        assert peak_aoi_prob_nofb(p, THETA10, W, pTx) == pytest.approx(
            prob_oracle(p, THETA10, W, pTx, nofb=True), rel=1e-9)


class TestIdentities:
    def test_window_independent_of_B_without_erasures(self):
        vals = [peak_aoi_window_fb(params(pe=0.0), THETA10, 9.0, B) for B in range(1, 9)]
        assert max(vals) - min(vals) == 0.0

    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("pe", [0.0, 0.3, 0.8])
    def test_window_B1_coincide(self, lam, pe):
        p = params(lam, pe)
        for W in (1.5, 8.0, 30.0, INF):
            fb = peak_aoi_window_fb(p, THETA10, W, 1)
            assert peak_aoi_window_nofb(p, THETA10, W, 1) == pytest.approx(fb, rel=1e-12)

    def test_prob_nofb_diverges(self):
        vals = [peak_aoi_prob_nofb(params(), THETA10, 8.0, 1 - 10.0**-k) for k in range(1, 8)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] > 1e6

    def test_prob_nofb_rejects(self):
        with pytest.raises(InvalidParam):
            peak_aoi_prob_nofb(params(), THETA10, 8.0, 1.0)
        with pytest.raises(InvalidParam):
            peak_aoi_prob_fb(params(), THETA10, 8.0, 0.0)

    def test_dead_gate(self):
        with pytest.raises(DeadPolicy):
            peak_aoi_window_fb(params(), THETA10, 1.0, 2)

    def test_dispatch(self):
        p = params(pe=0.5)
        assert peak_aoi(p, THETA10, WindowFb(INF, 2)) == peak_aoi_window_fb(p, THETA10, INF, 2)
        with pytest.raises(NotImplementedError):
            peak_aoi(p, THETA10, ThresholdFb(8.0))


system = st.builds(
    SystemParams,
    lam=st.floats(0.05, 20),
    pe=st.floats(0.0, 0.95),
    D=st.floats(0.05, 10),
)
dists = st.builds(ScDistribution.from_theta, st.floats(0, 60))


@settings(max_examples=200)
@given(p=system, d=dists, W_off=st.floats(0.01, 80), B=st.integers(1, 15), pTx=st.floats(0.01, 0.99))
def test_scheme_properties(p, d, W_off, B, pTx):
    W = d.m1 + W_off
    floor = d.mean() + 2 / p.lam + p.D
    wfb = peak_aoi_window_fb(p, d, W, B)
    wno = peak_aoi_window_nofb(p, d, W, B)
    pfb = peak_aoi_prob_fb(p, d, W, pTx)
    pno = peak_aoi_prob_nofb(p, d, W, pTx)
    for v in (wfb, wno, pfb, pno):
        assert math.isfinite(v) and v > floor
    assert wno >= wfb * (1 - 1e-12)
    ext = (p.D + 1 / p.lam) * pTx / (1 - pTx)
    assert pno - pfb == pytest.approx(ext, rel=1e-9, abs=1e-9 * pno)
