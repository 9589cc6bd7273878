import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbmh import ftnorm as fn
from fbmh.errors import DomainError, NonConvergence
from fbmh.numerics import QuadratureSpec


def closed(T):
    return T - 0.5 * (1 - math.exp(-2 * T))


@pytest.mark.parametrize("T", [1.0, 5.0, 10.0])
def test_brownian(T):
    c = fn.norm_fT_sq(T, 0.5)
    assert c.branch == "brownian"
    assert c.total == pytest.approx(closed(T), rel=1e-12)
    assert fn.norm_fT_sq(10.0, 0.5).total == pytest.approx(9.5, abs=1e-7)


def test_low_branch_formula_reproduces_brownian_at_beta_zero():
    # the lowH reduction with beta = 0 must collapse to the Brownian closed form
    T, b = 3.0, 0.0
    I1 = 4 * (fn.j1(T, b) + fn.j2(T, b))
    I2 = 2 * (fn.i21(T, b) + fn.i22(T, b))
    total = 0.25 * (I1 + 2 * I2 + fn.i3(T, b))
    assert total == pytest.approx(closed(T), rel=1e-10)


@pytest.mark.parametrize("H, T, tol", [(0.6, 2.0, 0.02), (0.7, 2.0, 0.02), (0.25, 1.0, 0.03),
                                       (0.3, 1.0, 0.03), (0.3, 2.0, 0.03), (0.6, 1.0, 0.03)])
def test_oracle_equivalence(H, T, tol):
    v = fn.norm_fT_sq(T, H).total
    o = fn.norm_fT_sq_bruteforce(T, H, 1024)
    assert v == pytest.approx(o, rel=tol)


def test_bruteforce_brownian():
    assert fn.norm_fT_sq_bruteforce(2.0, 0.5, 1024) == pytest.approx(1.5091578, rel=0.02)


def test_lowH_invariant():
    c = fn.norm_fT_sq(4.0, 0.35)
    assert c.total == pytest.approx(0.35 ** 2 * (c.I1 + 2 * c.I2 + c.I3), rel=1e-15)


def test_highH_invariant():
    c = fn.norm_fT_sq(4.0, 0.65)
    assert c.total == pytest.approx(4 * 0.65 ** 2 * 0.3 ** 2 * (c.J1 + c.J2bar + c.L23pair), rel=1e-15)


@pytest.mark.parametrize("T, beta", [(2.0, -0.4), (20.0, -0.7), (7.0, -0.1)])
def test_j1_plus_j2_identity(T, beta):
    # J1 + J2 = K1 - K2 + M, with M the y-integral written in closed form
    lhs = fn.j1(T, beta) + fn.j2(T, beta)
    rhs = fn.k1(T, beta) - fn.k2(T, beta) + fn.m_term(T, beta)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@pytest.mark.parametrize("T, beta", [(2.0, -0.4), (30.0, -0.8)])
def test_i3_closed_vs_four_terms(T, beta):
    assert fn.i3(T, beta) == pytest.approx(fn.i3_four_terms(T, beta), rel=1e-9)


def test_i3_via_hilbert_kernel_transform():
    # each atom-atom term factorizes into 1D transforms G(s) = int f(t)|t-s|^b sgn(t-s) dt
    # of e^{-t} evaluated at the atoms s = 0 and s = T
    from fbmh.hilbert import _kernel_transform, smooth
    T, beta = 3.0, -0.4
    down = smooth(lambda t: np.exp(-t), lambda t: -np.exp(-t), T)
    g0, gT = _kernel_transform(down, np.array([0.0, T]), beta, 1e-13, 1e-15)
    assert fn.i3(T, beta) == pytest.approx(2 * g0 ** 2 + 2 * gT ** 2, rel=1e-10)


def test_branch_continuity_at_half():
    T = 5.0
    c = closed(T)
    for H in (0.499, 0.501):
        assert abs(fn.norm_fT_sq(T, H).total - c) <= 0.02 * c


def test_examples_at_large_T():
    from fbmh.expansions import sigma_consts, theorem_expansion
    assert fn.norm_over_2T(200.0, 0.3) == pytest.approx(0.1691, abs=0.002)
    # At H = 0.6 the value at T = 200 still carries the T^{4H-3} and 1/T corrections
    # (about -0.014 in total), so it sits 1.47% below the limit 0.9501 rather than
    # within 0.01 of it; check it against the expansion and the 1.5% limit band.
    v = fn.norm_over_2T(200.0, 0.6)
    assert v == pytest.approx(theorem_expansion(200.0, 0.6).value / 400.0, rel=1e-6)
    assert v == pytest.approx(sigma_consts(0.6).sigma2, rel=0.015)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 0.95).filter(lambda h: abs(h - 0.5) > 1e-3), st.floats(0.2, 20.0))
def test_positive(H, T):
    assert fn.norm_fT_sq(T, H).total > 0


@pytest.mark.parametrize("H", [0.2, 0.4, 0.6, 0.8])
def test_monotone_in_T(H):
    vals = [fn.norm_fT_sq(T, H).total for T in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_domain_errors():
    with pytest.raises(DomainError):
        fn.norm_fT_sq(0.0, 0.3)
    with pytest.raises(DomainError):
        fn.norm_fT_sq(1.0, 1.2)


def test_nonconvergence_names_component():
    tight = QuadratureSpec(rel_tol=1e-15, abs_tol=0.0, max_evaluations=2000)
    with pytest.raises(NonConvergence) as e:
        fn.norm_fT_sq(5.0, 0.3, tight)
    assert e.value.component in {"J1", "K1", "J2", "I21", "I22"}
