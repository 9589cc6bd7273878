"""Closed-form asymptotic expansions, the limit constants, and their quadrature oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, PoleAtThreeQuarters
from .hilbert import HurstParam, as_hurst
from .numerics import (EULER_GAMMA, QuadratureSpec, SingularityAnnotation, adaptive_batch,
                       gamma_fn, integrate_1d, integrate_2d, scaled_lower_inc_many)

C_LOG = 2.0 * math.log(2.0) + EULER_GAMMA  # c = 2 log 2 + gamma

LEMMAS = ("A2", "A3", "A4", "A5", "L1", "L2", "L2_34")


@dataclass(frozen=True)
class SigmaConstants:
    a: float
    sigmaH2: float
    sigma2: float


@dataclass(frozen=True)
class Term:
    label: str
    coefficient: float
    T_exponent: float
    has_log: bool = False

    def at(self, T: float) -> float:
        v = self.coefficient * T ** self.T_exponent
        return v * math.log(T) if self.has_log else v


@dataclass(frozen=True)
class ExpansionResult:
    value: float
    terms: Tuple[Term, ...]
    remainder_exponent: float


@dataclass(frozen=True)
class AsymptoteParams:
    slope: float
    intercept: float


def _result(T, terms, remainder):
    terms = tuple(terms)
    return ExpansionResult(float(sum(t.at(T) for t in terms)), terms, float(remainder))


def _check_T(T):
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")


# ---------------------------------------------------------------- constants

def a_const(H) -> float:
    H = as_hurst(H)
    return H.H * gamma_fn(2.0 * H.H)


def sigma_h2(H) -> float:
    """(4H-1)(1 - 1/cos 2H pi), continued through its removable point at H = 1/4."""
    H = as_hurst(H)
    if H.near_three_quarters:
        raise PoleAtThreeQuarters(f"sigma_H^2 has a pole at H = 3/4 (H = {H.H})")
    eps = H.H - 0.25
    if abs(eps) < 1e-6:
        # -(4H-1)/cos(2H pi) = 4 eps / sin(2 pi eps) = (2/pi) x / sin x, x = 2 pi eps
        x = 2.0 * math.pi * eps
        return 4.0 * eps + (2.0 / math.pi) * (1.0 + x * x / 6.0 + 7.0 * x ** 4 / 360.0)
    k = 4.0 * H.H - 1.0
    return k - k / math.cos(2.0 * H.H * math.pi)


def sigma_consts(H) -> SigmaConstants:
    a = a_const(H)
    s = sigma_h2(H)
    return SigmaConstants(a, s, a * a * s)


def asymptote_params(H) -> AsymptoteParams:
    """Line approached by ||f_T||^2 / 2 (an asymptote only for H <= 1/2)."""
    H = as_hurst(H)
    c = sigma_consts(H)
    h = H.H
    return AsymptoteParams(c.sigma2, -0.5 * (4 * h - 1) * c.sigma2 - (2 * h - 1) * (2 * h + 1) * c.a ** 2)


# ---------------------------------------------------------------- theorem

def theorem_expansion(T: float, H, as_printed: bool = False) -> ExpansionResult:
    """Large-T expansion of ||f_T||^2.

    The T^{4H-2} and T^{4H-3} coefficients carry a factor H^2, which both branch
    derivations produce; ``as_printed=True`` drops it.
    """
    _check_T(T)
    H = as_hurst(H)
    h = H.H
    if H.near_three_quarters:
        k = 9.0 / 8.0
        terms = [
            Term("T log T", k, 1.0, True),
            Term("log T", -k, 0.0, True),
            Term("T", k * (C_LOG + 0.5 * (math.pi - 3.0)), 1.0),
            Term("constant", k * (1.0 - C_LOG - 13.0 * math.pi / 16.0), 0.0),
            Term("1/T", k, -1.0),
        ]
        return _result(T, terms, -2.0)
    c = sigma_consts(H)
    a2 = c.a ** 2
    f = 1.0 if as_printed else h * h
    terms = [
        Term("T", 2.0 * a2 * c.sigmaH2, 1.0),
        Term("constant", 2.0 * a2 * (-0.5 * (4 * h - 1) * c.sigmaH2 - (2 * h - 1) * (2 * h + 1)), 0.0),
        Term("T^(4H-2)", f * 4.0 * (2 * h - 1) / (4 * h - 3), 4 * h - 2),
        Term("T^(4H-3)", -f * 8.0 * (2 * h - 1) ** 2 / (4 * h - 3), 4 * h - 3),
    ]
    return _result(T, terms, 4 * h - 4)


# ---------------------------------------------------------------- lemmas

def _a5_constant(beta):
    return -gamma_fn(1.0 + beta) ** 2 / (2.0 * math.cos(beta * math.pi))


def _log_terms():
    return [
        Term("log T", 1.0, 0.0, True),
        Term("2 log 2 + gamma", C_LOG, 0.0),
        Term("T^-1", -0.5, -1.0),
        Term("T^-2", -0.375, -2.0),
    ]


def lemma_expansion(lemma: str, T: float, param: Optional[float] = None) -> ExpansionResult:
    """Truncated expansion of an auxiliary integral.

    ``param`` is beta for A2, A3 and A5, H for L1 and L2, and unused for A4 and L2_34.
    """
    _check_T(T)
    if lemma not in LEMMAS:
        raise DomainError(f"unknown lemma {lemma!r}; expected one of {LEMMAS}")
    if lemma in ("A2", "A3"):
        b = _need(param, lemma)
        if not -1.0 < b < 0.0:
            raise DomainError(f"{lemma} needs beta in (-1, 0), got {b}")
        if lemma == "A2":
            terms = [Term("T^b", 1.0, b), Term("T^(b-1)", -b, b - 1), Term("T^(b-2)", b * (b - 1), b - 2)]
            return _result(T, terms, b - 3)
        terms = [Term("T^2b", 1.0, 2 * b), Term("T^(2b-1)", -2 * b, 2 * b - 1),
                 Term("T^(2b-2)", b * (3 * b - 2), 2 * b - 2)]
        return _result(T, terms, 2 * b - 3)
    if lemma == "A4":
        return _result(T, _log_terms(), -3.0)
    if lemma == "A5":
        b = _need(param, lemma)
        if not -1.0 < b < 0.5:
            raise DomainError(f"A5 needs beta in (-1, 1/2), got {b}")
        if abs(b + 0.5) < 1e-6:
            return _result(T, _log_terms(), -3.0)
        d = 2 * b + 1
        terms = [
            Term("constant", _a5_constant(b), 0.0),
            Term("T^d", 1.0 / d, d),
            Term("T^(d-1)", -0.5, d - 1),
            Term("T^(d-2)", b * (b - 1) / (d - 2), d - 2),
            Term("T^(d-3)", -0.5 * b * (b - 2), d - 3),
        ]
        return _result(T, terms, d - 4)
    if lemma == "L1":
        h = _need(param, lemma)
        if not 0.0 < h < 0.75:
            raise DomainError(f"L1 needs H in (0, 3/4), got {h}")
        g2 = gamma_fn(2 * h) ** 2
        s = sigma_h2(h)
        terms = [
            Term("T", 0.5 * g2 * s, 1.0),
            Term("constant", -0.5 * g2 * s * (4 * h + 1) / 2 - 2 * h * h * g2, 0.0),
            Term("T^(4H-2)", 1.0 / (2 * (4 * h - 3)), 4 * h - 2),
            Term("T^(4H-3)", -(4 * h - 2) / (4 * h - 3), 4 * h - 3),
        ]
        return _result(T, terms, 4 * h - 4)
    if lemma == "L2":
        h = _need(param, lemma)
        if not 0.5 < h < 1.0 or abs(h - 0.75) < 1e-9:
            raise DomainError(f"L2 needs H in (1/2, 3/4) or (3/4, 1), got {h}")
        b = 2 * h - 2
        g2 = gamma_fn(1 + b) ** 2
        s = (2 * b + 3) * (1 - 1 / math.cos(b * math.pi))
        terms = [
            Term("T", 0.5 * g2 * s, 1.0),
            Term("constant", 0.5 * g2 * (-s * (2 * b + 3) / 2 - (b + 1) * (b + 3)), 0.0),
            Term("T^(2b+2)", 1.0 / ((b + 1) * (2 * b + 1)), 2 * b + 2),
            Term("T^(2b+1)", -2.0 / (2 * b + 1), 2 * b + 1),
        ]
        return _result(T, terms, 2 * b)
    # L2_34
    terms = [
        Term("T log T", 2.0, 1.0, True),
        Term("log T", -2.0, 0.0, True),
        Term("T", 2.0 * (C_LOG + 0.5 * (math.pi - 3.0)), 1.0),
        Term("constant", 2.0 * (1.0 - C_LOG - 13.0 * math.pi / 16.0), 0.0),
        Term("1/T", 2.0, -1.0),
    ]
    return _result(T, terms, -2.0)


def _need(param, lemma):
    if param is None:
        raise DomainError(f"{lemma} needs a parameter")
    return float(param)


# ---------------------------------------------------------------- oracles

ORACLE_1D = QuadratureSpec(rel_tol=1e-14, abs_tol=1e-17, max_evaluations=50_000_000)


def a3_integral(T: float, beta: float, spec: Optional[QuadratureSpec] = None) -> float:
    """int_{x+z>=T} e^{x+z-2T} x^beta z^beta over [0, T]^2."""
    from .ftnorm import NORM_SPEC
    s = SingularityAnnotation("lower", beta)
    f = lambda x, z: np.exp(x + z - 2.0 * T) * x ** beta * z ** beta
    return integrate_2d(f, "band_upper", T, (s, s), spec or NORM_SPEC).value


def a4_integral(T: float, spec: Optional[QuadratureSpec] = None) -> float:
    """int_0^1 (1-t)^{-1/2} (1 - e^{-tT}) / t dt."""
    f = lambda t: (1.0 - t) ** -0.5 * (-np.expm1(-t * T)) / t
    return integrate_1d(f, 0.0, 1.0, [SingularityAnnotation("upper", -0.5)], spec or ORACLE_1D).value


def a5_integral(T: float, beta: float) -> float:
    """int_{0<=x<=z<=T} e^{x-z} x^beta z^beta = int_0^T z^beta S(beta, z) dz."""
    fn = lambda own, z: z ** beta * scaled_lower_inc_many(beta, z.ravel(), 1e-15, 1e-18).reshape(z.shape)
    # z^beta S(beta, z) ~ z^(2 beta + 1) / (beta + 1) near 0
    v, _, _ = adaptive_batch(fn, 0.0, T, 2.0 * beta + 1.0, 0.0, 1e-14, 1e-17)
    return float(v[0])


def lemma_oracle(lemma: str, T: float, param: Optional[float] = None) -> float:
    """Direct quadrature of the integral that ``lemma_expansion`` approximates."""
    from . import ftnorm
    _check_T(T)
    if lemma == "A2":
        return float(scaled_lower_inc_many(_need(param, lemma), T, 1e-15, 1e-18)[0])
    if lemma == "A3":
        return a3_integral(T, _need(param, lemma))
    if lemma == "A4":
        return a4_integral(T)
    if lemma == "A5":
        return a5_integral(T, _need(param, lemma))
    if lemma == "L1":
        b = 2 * _need(param, lemma) - 1
        return ftnorm.j1(T, b) + ftnorm.j2(T, b)
    if lemma in ("L2", "L2_34"):
        b = 2 * (0.75 if lemma == "L2_34" else _need(param, lemma)) - 2
        return ftnorm.j1(T, b) + ftnorm.j2bar(T, b) + ftnorm.l23pair(T, b)
    raise DomainError(f"unknown lemma {lemma!r}")


def lemma_residuals(lemma: str, T_grid: Sequence[float], param: Optional[float] = None) -> List[dict]:
    """Oracle minus expansion, and the same scaled by T^(-remainder exponent)."""
    rows = []
    for T in T_grid:
        e = lemma_expansion(lemma, T, param)
        o = lemma_oracle(lemma, T, param)
        r = o - e.value
        rows.append({"T": float(T), "oracle": o, "expansion": e.value, "residual": r,
                     "scaled_residual": abs(r) * T ** (-e.remainder_exponent)})
    return rows


def decay_check(H, T_grid: Sequence[float], spec: Optional[QuadratureSpec] = None) -> List[dict]:
    """|||f_T||^2/(2T) - sigma^2| scaled by T^min(1, 3-4H) on each grid point."""
    from .ftnorm import norm_over_2T
    H = as_hurst(H)
    if H.near_three_quarters:
        raise PoleAtThreeQuarters("decay_check is undefined at H = 3/4")
    if list(T_grid) != sorted(T_grid) or len(set(T_grid)) != len(T_grid):
        raise DomainError("T_grid must be strictly increasing")
    s2 = sigma_consts(H).sigma2
    p = min(1.0, 3.0 - 4.0 * H.H)
    rows = []
    for T in T_grid:
        v = norm_over_2T(T, H, spec)
        rows.append({"T": float(T), "norm_over_2T": v, "residual": v - s2,
                     "scaled_residual": abs(v - s2) * T ** p})
    return rows


def max_over_median(values: Sequence[float]) -> float:
    v = np.abs(np.asarray(values, dtype=float))
    return float(v.max() / np.median(v))


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log|y| against log x."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.abs(np.asarray(ys, float))), 1)[0])
