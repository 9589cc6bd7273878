import math

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from fbmh import expansions as ex
from fbmh.errors import DomainError, PoleAtThreeQuarters
from fbmh.ftnorm import norm_fT_sq

GRID = (25.0, 50.0, 100.0, 200.0)
mp.mp.dps = 30


def mp_sigma2(H):
    H = mp.mpf(H)
    a = H * mp.gamma(2 * H)
    return float(a * a * (4 * H - 1) * (1 - 1 / mp.cos(2 * H * mp.pi)))


def test_constants_brownian():
    c = ex.sigma_consts(0.5)
    assert (c.a, c.sigmaH2, c.sigma2) == pytest.approx((0.5, 2.0, 0.5), rel=1e-14)


def test_constants_quarter():
    c = ex.sigma_consts(0.25)
    assert c.a == pytest.approx(math.sqrt(math.pi) / 4, rel=1e-14)
    assert c.sigmaH2 == pytest.approx(2 / math.pi, rel=1e-12)
    assert c.sigma2 == pytest.approx(0.125, rel=1e-12)


def test_constants_point_six():
    # high-precision oracle; the quoted 0.9500830 is off by about 2e-6
    c = ex.sigma_consts(0.6)
    assert c.sigma2 == pytest.approx(mp_sigma2(0.6), rel=1e-13)
    assert c.sigma2 == pytest.approx(0.9500808, abs=1e-7)
    assert c.a == pytest.approx(0.5509012, abs=1e-7)
    assert c.sigmaH2 == pytest.approx(3.1304952, abs=1e-7)


@settings(max_examples=40)
@given(st.floats(0.01, 0.74))
def test_sigma_invariants(H):
    c = ex.sigma_consts(H)
    assert c.sigma2 == c.a * c.a * c.sigmaH2
    assert c.sigmaH2 > 0
    if abs(H - 0.25) > 1e-5:
        assert c.sigma2 == pytest.approx(mp_sigma2(H), rel=1e-9)


def test_quarter_continuity():
    for d in (1e-4, -1e-4):
        assert abs(ex.sigma_consts(0.25 + d).sigmaH2 - 2 / math.pi) <= 1e-3
    # both sides of the switching window agree with the high-precision value
    for H in (0.25 + 0.99e-6, 0.25 - 0.99e-6, 0.25 + 1.01e-6, 0.25 - 1.01e-6, 0.25):
        h = mp.mpf(H)
        want = float((4 * h - 1) * (1 - 1 / mp.cos(2 * h * mp.pi))) if H != 0.25 else 2 / math.pi
        assert ex.sigma_h2(H) == pytest.approx(want, rel=1e-9)


def test_pole():
    with pytest.raises(PoleAtThreeQuarters):
        ex.sigma_consts(0.75)
    with pytest.raises(PoleAtThreeQuarters):
        ex.asymptote_params(0.75 + 1e-10)
    assert ex.a_const(0.75) == pytest.approx(0.75 * math.gamma(1.5))


@pytest.mark.parametrize("H, slope, intercept, tol", [(0.5, 0.5, -0.25, 1e-14),
                                                      (0.25, 0.125, 3 * math.pi / 64, 1e-12),
                                                      (0.3, 0.1690993, 0.1108293, 2e-6)])
def test_asymptote_examples(H, slope, intercept, tol):
    # the quoted H = 0.3 slope rounds a^2 * sigma_H^2 = 0.1995924 * 0.8472136 one digit early
    p = ex.asymptote_params(H)
    assert p.slope == pytest.approx(slope, abs=tol)
    assert p.intercept == pytest.approx(intercept, abs=tol)


def test_asymptote_vs_mpmath():
    h = mp.mpf("0.3")
    a2 = (h * mp.gamma(2 * h)) ** 2
    s2 = mp_sigma2(0.3)
    p = ex.asymptote_params(0.3)
    assert p.slope == pytest.approx(s2, rel=1e-13)
    assert p.intercept == pytest.approx(float(-(4 * h - 1) / 2 * s2 - (2 * h - 1) * (2 * h + 1) * a2), rel=1e-12)


def test_theorem_brownian_exact():
    assert ex.theorem_expansion(10.0, 0.5).value == pytest.approx(9.5, rel=1e-14)


def test_theorem_three_quarters():
    T, c = 50.0, 2 * math.log(2) + 0.5772156649015329
    want = 9 / 8 * (49 * math.log(50) + (c + (math.pi - 3) / 2) * 50 + 1 - c - 13 * math.pi / 16 + 1 / 50)
    e = ex.theorem_expansion(T, 0.75)
    assert e.value == pytest.approx(want, rel=1e-14)
    assert e.remainder_exponent == -2


@settings(max_examples=30)
@given(st.floats(0.05, 0.95).filter(lambda h: abs(h - 0.75) > 1e-6), st.floats(1.0, 1e4))
def test_value_is_sum_of_terms(H, T):
    e = ex.theorem_expansion(T, H)
    assert e.value == pytest.approx(math.fsum(t.at(T) for t in e.terms), rel=1e-12)
    assert e.remainder_exponent == pytest.approx(4 * H - 4)


@pytest.mark.parametrize("H", [0.3, 0.6])
def test_printed_coefficients_miss_h_squared(H):
    # with the H^2 factor the residual decays at the stated order; without it only like T^{4H-2}
    norms = [norm_fT_sq(T, H).total for T in GRID]
    fixed = [n - ex.theorem_expansion(T, H).value for n, T in zip(norms, GRID)]
    printed = [n - ex.theorem_expansion(T, H, as_printed=True).value for n, T in zip(norms, GRID)]
    assert ex.loglog_slope(GRID, fixed) <= 4 * H - 4 + 0.4
    assert ex.loglog_slope(GRID, printed) == pytest.approx(4 * H - 2, abs=0.1)


@pytest.mark.parametrize("beta", [-0.7, -0.3])
def test_a5_constant_beta_chain(beta):
    b, d = mp.mpf(beta), 2 * mp.mpf(beta) + 1
    if beta < -0.5:
        chain = mp.gamma(d + 1) * mp.beta(1 + b, -d)
    else:
        chain = b * mp.gamma(d) * mp.beta(1 + b, 1 - d)
    assert float(chain) == pytest.approx(ex._a5_constant(beta), abs=1e-10)
    assert float(chain) == pytest.approx(float(-mp.gamma(1 + b) ** 2 / (2 * mp.cos(b * mp.pi))), abs=1e-12)


def test_lemma_examples():
    assert ex.lemma_expansion("A4", 10.0).value == pytest.approx(4.2123452, abs=1e-7)
    assert ex.lemma_expansion("A2", 100.0, -0.5).value == pytest.approx(0.1005075, abs=1e-7)
    # the three printed terms at T = 50, beta = -1/2 sum to 0.020414, the quadrature to 0.0204148
    assert ex.lemma_expansion("A3", 50.0, -0.5).value == pytest.approx(0.02 + 0.0004 + 1.75 * 50 ** -3, rel=1e-14)
    assert ex.lemma_oracle("A3", 50.0, -0.5) == pytest.approx(0.0204148, abs=1e-6)


def test_a4_oracle_vs_mpmath():
    # integrand is regular at 0; mpmath handles the (1-t)^{-1/2} end after t = 1 - u^2
    T = 10.0
    g = lambda u: 2 * (1 - mp.e ** (-(1 - u * u) * T)) / (1 - u * u)
    assert ex.a4_integral(T) == pytest.approx(float(mp.quad(g, [0, 0.9, 1])), rel=1e-12)
    assert ex.a4_integral(T) == pytest.approx(4.21235, abs=1e-3)


def test_a5_log_branch_switch():
    e = ex.lemma_expansion("A5", 30.0, -0.5 + 5e-7)
    assert any(t.has_log for t in e.terms)
    assert not any(t.has_log for t in ex.lemma_expansion("A5", 30.0, -0.5 + 5e-6).terms)


def test_a5_oracle_vs_mpmath():
    T, b = 8.0, -0.3
    inner = lambda z: z ** b * mp.e ** (-z) * mp.mpf(z) ** (b + 1) / (b + 1) * mp.hyp1f1(b + 1, b + 2, z)
    want = float(mp.quad(inner, [0, 1, T]))
    assert ex.a5_integral(T, b) == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("lemma, param", [("A2", -0.9), ("A3", -0.2), ("A4", None), ("A5", 0.2),
                                          ("L1", 0.3), ("L2", 0.9), ("L2_34", None)])
def test_lemma_residuals_bounded(lemma, param):
    rows = ex.lemma_residuals(lemma, GRID, param)
    sc = [r["scaled_residual"] for r in rows]
    assert ex.max_over_median(sc) <= 3
    # residual at the largest T stays below 10x the remainder extrapolated from the smallest
    r0 = rows[0]
    p = ex.lemma_expansion(lemma, GRID[0], param).remainder_exponent
    assert abs(rows[-1]["residual"]) <= 10 * abs(r0["residual"]) * (GRID[-1] / GRID[0]) ** p


def test_l1_matches_quarter_of_i1():
    from fbmh.ftnorm import norm_fT_sq as nf
    T, H = 100.0, 0.3
    assert ex.lemma_oracle("L1", T, H) == pytest.approx(nf(T, H).I1 / 4, rel=1e-14)


def test_lemma_domain_errors():
    with pytest.raises(DomainError):
        ex.lemma_expansion("A2", 10.0, 0.2)
    with pytest.raises(DomainError):
        ex.lemma_expansion("A5", 10.0, 0.6)
    with pytest.raises(DomainError):
        ex.lemma_expansion("L2", 10.0, 0.75)
    with pytest.raises(DomainError):
        ex.lemma_expansion("A7", 10.0)
    with pytest.raises(DomainError):
        ex.lemma_expansion("A2", 10.0)
    with pytest.raises(DomainError):
        ex.theorem_expansion(0.0, 0.3)


def test_decay_check_brownian():
    rows = ex.decay_check(0.5, GRID)
    for r in rows:
        assert r["scaled_residual"] == pytest.approx(0.25 * (1 - math.exp(-2 * r["T"])), rel=1e-10)


def test_decay_check_rejects_bad_grid():
    with pytest.raises(DomainError):
        ex.decay_check(0.3, (50.0, 25.0))


def test_loglog_slope_recovers_power():
    assert ex.loglog_slope(GRID, [3 * T ** -1.7 for T in GRID]) == pytest.approx(-1.7, abs=1e-12)
