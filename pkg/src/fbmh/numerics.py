"""Special functions and adaptive quadrature for integrands with algebraic endpoint singularities.

Every panel is integrated with a 15-point rule and checked against an 8-point rule.
A panel touching an annotated singular edge uses Gauss-Jacobi nodes for the weight
``(distance)**exponent``, so an integrand ``x**b * smooth(x)`` converges
spectrally instead of algebraically. All other panels use Gauss-Legendre nodes.
The initial mesh is graded geometrically (ratio 1/4) toward both ends of every
interval; after that, panels are bisected adaptively.

Many independent integrals ("owners") are refined in a single vectorized loop.
The 2D routines rely on this: the inner integrals for all outer nodes are
computed together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .errors import DomainError, NonConvergence

EULER_GAMMA = 0.57721566490153286061

# Lanczos approximation, g = 7, n = 9 (the widely published coefficient set).
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _lanczos(x):
    # valid for x >= 0.5
    xm = x - 1.0
    acc = np.full_like(xm, _LANCZOS_COEF[0])
    for k in range(1, 9):
        acc = acc + _LANCZOS_COEF[k] / (xm + k)
    t = xm + _LANCZOS_G + 0.5
    p = t ** (0.5 * (xm + 0.5))
    return _SQRT_2PI * p * (p * np.exp(-t)) * acc


def gamma_fn(x):
    """Gamma function for positive real arguments (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)) or np.any(~np.isfinite(xa)):
        raise DomainError(f"gamma_fn needs finite x > 0, got {x!r}")
    small = xa < 0.5
    out = np.empty_like(xa)
    if np.any(~small):
        out[~small] = _lanczos(xa[~small])
    if np.any(small):
        xs = xa[small]
        out[small] = math.pi / (np.sin(math.pi * xs) * _lanczos(1.0 - xs))
    return float(out) if out.ndim == 0 else out


def euler_gamma():
    """The Euler-Mascheroni constant."""
    return EULER_GAMMA


def euler_gamma_quadrature(spec=None):
    """Euler's constant from int_0^1 (1 - e^{-u} - e^{-1/u}) / u du."""

    def f(u):
        with np.errstate(over="ignore"):
            return (-np.expm1(-u) - np.exp(-1.0 / u)) / u

    return integrate_1d(f, 0.0, 1.0, spec=spec)


def lower_inc_gamma(a, x):
    """Non-normalized lower incomplete gamma int_0^x e^{-t} t^(a-1) dt (vectorized)."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    out = gamma_fn(a) * special.gammainc(a, x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SingularityAnnotation:
    """Integrand behaves like ``distance**exponent`` at an edge or interior point."""

    edge: str = "lower"  # 'lower' | 'upper' | 'interior'
    exponent: float = 0.0
    location: Optional[float] = None

    def __post_init__(self):
        if self.edge not in ("lower", "upper", "interior"):
            raise ValueError(f"unknown edge {self.edge!r}")
        if not self.exponent > -1.0:
            raise DomainError(f"exponent {self.exponent} is not integrable (needs > -1)")
        if self.edge == "interior" and self.location is None:
            raise ValueError("interior singularity needs a location")


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_evaluations: int = 40_000_000


DEFAULT_1D = QuadratureSpec()
DEFAULT_2D = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-12)


@dataclass(frozen=True)
class IntegralResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------- rules

_N_HI, _N_LO = 15, 8
_EPS = np.finfo(float).eps


@lru_cache(maxsize=None)
def _rule(side, exponent):
    """Nodes on [-1, 1] and the two weight vectors (15-pt, 8-pt) over the joint node set.

    Jacobi weights are divided by the weight function, so the rule applies
    directly to the full integrand.
    """
    if side == 0 or exponent == 0.0:
        t_hi, w_hi = np.polynomial.legendre.leggauss(_N_HI)
        t_lo, w_lo = np.polynomial.legendre.leggauss(_N_LO)
    else:
        def jac(n):
            if side == 1:
                t, w = special.roots_jacobi(n, 0.0, exponent)
                return t, w / (1.0 + t) ** exponent
            t, w = special.roots_jacobi(n, exponent, 0.0)
            return t, w / (1.0 - t) ** exponent

        t_hi, w_hi = jac(_N_HI)
        t_lo, w_lo = jac(_N_LO)
    t = np.concatenate([t_hi, t_lo])
    W_hi = np.concatenate([w_hi, np.zeros(_N_LO)])
    W_lo = np.concatenate([np.zeros(_N_HI), w_lo])
    return t, W_hi, W_lo


def _eval_panels(fn, a, b, own, side, pexp):
    q = np.empty(a.size)
    qabs = np.empty(a.size)
    err = np.empty(a.size)
    keys = np.where(side == 0, 0.0, pexp)
    for s in (0, 1, 2):
        sel_s = side == s
        if not sel_s.any():
            continue
        for e in (np.unique(keys[sel_s]) if s else (0.0,)):
            idx = np.nonzero(sel_s & (keys == e))[0]
            t, W_hi, W_lo = _rule(s, float(e))
            half = 0.5 * (b[idx] - a[idx])
            X = a[idx, None] + half[:, None] * (t + 1.0)
            O = np.broadcast_to(own[idx, None], X.shape)
            F = np.asarray(fn(O, X), dtype=float)
            if F.shape != X.shape:
                F = np.broadcast_to(F, X.shape)
            if not np.all(np.isfinite(F)):
                raise NonConvergence("integrand returned non-finite values")
            q_hi = half * (F @ W_hi)
            q[idx] = q_hi
            qabs[idx] = half * (np.abs(F) @ np.abs(W_hi))
            err[idx] = np.abs(q_hi - half * (F @ W_lo))
    return q, qabs, err


_INIT_FRACTIONS = np.array([0.0, 1 / 16, 1 / 4, 1 / 2, 3 / 4, 15 / 16, 1.0])


def adaptive_batch(fn, lo, hi, lo_exp=0.0, hi_exp=0.0, rel_tol=1e-10, abs_tol=1e-12,
                   max_evaluations=40_000_000, component=None):
    """Integrate many 1D integrals at once.

    ``fn(owner, x)`` receives integer owner indices and abscissae of equal shape
    and returns integrand values. Owner ``k`` is integrated over ``[lo[k], hi[k]]``.
    The exponent arrays mark ``(x - lo)**lo_exp`` / ``(hi - x)**hi_exp`` endpoint
    behaviour (0 means regular).

    Returns ``(values, error_estimates, evaluations)``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    K = lo.size
    lo_exp = np.broadcast_to(np.asarray(lo_exp, dtype=float), (K,))
    hi_exp = np.broadcast_to(np.asarray(hi_exp, dtype=float), (K,))
    if np.any(~(hi > lo)):
        raise DomainError("adaptive_batch needs lo < hi for every owner")
    if np.any(lo_exp <= -1.0) or np.any(hi_exp <= -1.0):
        raise DomainError("endpoint exponents must exceed -1")

    m = _INIT_FRACTIONS.size - 1
    w = hi - lo
    a = (lo[:, None] + w[:, None] * _INIT_FRACTIONS[:-1]).ravel()
    b = (lo[:, None] + w[:, None] * _INIT_FRACTIONS[1:]).ravel()
    b.reshape(K, m)[:, -1] = hi
    own = np.repeat(np.arange(K), m)
    side = np.zeros(a.size, dtype=np.int8)
    pexp = np.zeros(a.size)
    first = np.arange(K) * m
    last = first + m - 1
    side[first[lo_exp != 0]] = 1
    pexp[first] = lo_exp
    side[last[hi_exp != 0]] = 2
    pexp[last] = np.where(hi_exp != 0, hi_exp, pexp[last])

    npts = _N_HI + _N_LO
    q, qabs, err = _eval_panels(fn, a, b, own, side, pexp)
    evals = a.size * npts
    while True:
        I = np.bincount(own, q, K)
        A = np.bincount(own, qabs, K)
        E = np.bincount(own, err, K)
        n = np.bincount(own, minlength=K)
        tol = np.maximum(abs_tol, np.maximum(rel_tol * np.abs(I), 64 * _EPS * A))
        bad = E > tol
        if not bad.any():
            break
        split = bad[own] & (err > tol[own] / (2.0 * n[own]))
        scale = np.maximum(np.abs(a), np.abs(b))
        split &= (b - a) > 8 * _EPS * scale + 1e-300
        if not split.any():
            raise NonConvergence(
                f"panels reached floating-point resolution with error {E[bad].max():.3g} "
                f"above tolerance {tol[bad].min():.3g}", component)
        ns = int(split.sum())
        if evals + 2 * ns * npts > max_evaluations:
            raise NonConvergence(
                f"evaluation budget {max_evaluations} exhausted; worst error "
                f"{E[bad].max():.3g} vs tolerance {tol[bad].min():.3g}", component)
        sa, sb = a[split], b[split]
        mid = 0.5 * (sa + sb)
        sown, sside, sexp = own[split], side[split], pexp[split]
        na = np.concatenate([sa, mid])
        nb = np.concatenate([mid, sb])
        nown = np.concatenate([sown, sown])
        nside = np.concatenate([np.where(sside == 1, 1, 0), np.where(sside == 2, 2, 0)]).astype(np.int8)
        nexp = np.concatenate([sexp, sexp])
        nq, nqabs, nerr = _eval_panels(fn, na, nb, nown, nside, nexp)
        evals += 2 * ns * npts
        keep = ~split
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        own = np.concatenate([own[keep], nown])
        side = np.concatenate([side[keep], nside])
        pexp = np.concatenate([pexp[keep], nexp])
        q = np.concatenate([q[keep], nq])
        qabs = np.concatenate([qabs[keep], nqabs])
        err = np.concatenate([err[keep], nerr])
    return I, E, evals


def _vectorized(f):
    def g(x):
        y = f(x)
        if np.shape(y) != np.shape(x):
            y = np.vectorize(f, otypes=[float])(x)
        return y
    return g


def integrate_1d(f: Callable, a: float, b: float,
                 singularities: Sequence[SingularityAnnotation] = (),
                 spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """Integrate ``f`` over ``[a, b]``.

    Interior singularities split the interval, and each piece gets the declared
    exponent at the matching edge. Raises ``NonConvergence`` when the budget runs
    out before the tolerance is met.
    """
    spec = spec or DEFAULT_1D
    if not b > a:
        raise DomainError(f"integrate_1d needs a < b, got [{a}, {b}]")
    g = _vectorized(f)
    points = {a: 0.0, b: 0.0}
    lower = upper = 0.0
    interior = {}
    for s in singularities:
        if s.edge == "lower":
            lower = s.exponent
        elif s.edge == "upper":
            upper = s.exponent
        else:
            if not a < s.location < b:
                raise DomainError(f"interior singularity {s.location} outside ({a}, {b})")
            interior[s.location] = s.exponent
    points.update({p: 0.0 for p in interior})
    xs = sorted(points)
    lo = np.array(xs[:-1])
    hi = np.array(xs[1:])
    lo_exp = np.array([lower if x == a else interior.get(x, 0.0) for x in xs[:-1]])
    hi_exp = np.array([upper if x == b else interior.get(x, 0.0) for x in xs[1:]])
    n = lo.size
    vals, errs, evals = adaptive_batch(lambda own, x: g(x), lo, hi, lo_exp, hi_exp,
                                       spec.rel_tol, spec.abs_tol / n, spec.max_evaluations)
    return IntegralResult(float(vals.sum()), float(errs.sum()), int(evals))


def scaled_lower_inc(beta: float, T: float, spec: Optional[QuadratureSpec] = None) -> float:
    """e^{-T} * int_0^T e^x x^beta dx for beta in (-1, 0]."""
    if not (-1.0 < beta <= 0.0):
        raise DomainError(f"beta must lie in (-1, 0], got {beta}")
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    spec = spec or DEFAULT_1D
    return float(scaled_lower_inc_many(beta, T, spec.rel_tol, spec.abs_tol)[0])


def scaled_lower_inc_many(beta, T, rel_tol=1e-12, abs_tol=1e-15):
    """Vectorized e^{-T} int_0^T e^x x^beta dx for any beta > -1 and T >= 0.

    e^{x-T} is evaluated as a single exponential of a non-positive number, so
    nothing overflows for large T.
    """
    T = np.atleast_1d(np.asarray(T, dtype=float))
    if beta <= -1.0:
        raise DomainError(f"beta must exceed -1, got {beta}")
    out = np.zeros(T.shape)
    pos = T > 0
    if not pos.any():
        return out
    if beta == 0.0:
        out[pos] = -np.expm1(-T[pos])
        return out
    Tp = T[pos]

    def fn(own, x):
        return np.exp(x - Tp[own]) * x ** beta

    vals, _, _ = adaptive_batch(fn, np.zeros(Tp.size), Tp, beta, 0.0, rel_tol, abs_tol)
    out[pos] = vals
    return out


# ---------------------------------------------------------------- 2D

_DOMAINS = {
    "rectangle": ("A", "A'", "B1", "B2", "B1'", "B2'"),
    "triangle": ("A", "B1", "B2"),          # 0 <= x <= z <= T
    "triangle_upper": ("A'", "B1'", "B2'"),  # 0 <= z <= x <= T
    "band_lower": ("A", "A'"),               # x + z <= T
    "band_upper": ("B1", "B2", "B1'", "B2'"),  # x + z >= T
}


def _piece(name, T, ax, az):
    """Outer range, outer exponent, inner range, inner exponent and the map to (x, z).

    A  : x <= z, x + z <= T in (s, u): x = s u, z = s (1 - u), Jacobian s.
    B1 : x <= T/2, T - x <= z <= T: z = T - x v, Jacobian x.
    B2 : T/2 <= x <= z <= T: z = x + (T - x) v, Jacobian T - x.
    Primed pieces swap the roles of x and z.
    """
    if name in ("A", "A'"):
        def m(o, v):
            p = o * v
            return (p, o - p, o) if name == "A" else (o - p, p, o)
        e_in = ax if name == "A" else az
        return (0.0, T), ax + az + 1.0, (0.0, 0.5), e_in, m
    if name in ("B1", "B1'"):
        def m(o, v):
            q = T - o * v
            return (o, q, o) if name == "B1" else (q, o, o)
        e_out = ax if name == "B1" else az
        return (0.0, 0.5 * T), (e_out + 1.0 if e_out != 0.0 else 0.0), (0.0, 1.0), 0.0, m

    def m(o, v):
        q = o + (T - o) * v
        return (o, q, T - o) if name == "B2" else (q, o, T - o)
    return (0.5 * T, T), 0.0, (0.0, 1.0), 0.0, m


def integrate_2d(f: Callable, domain: str, T: float,
                 singularities: Sequence[Optional[SingularityAnnotation]] = (None, None),
                 spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """Integrate ``f(x, z)`` over a subset of ``[0, T]^2``.

    ``domain`` is one of 'rectangle', 'triangle' (x <= z), 'triangle_upper'
    (z <= x), 'band_lower' (x + z <= T) or 'band_upper' (x + z >= T).
    ``singularities`` holds at most one lower-edge annotation per axis, i.e.
    ``f ~ x**ax`` near x = 0 and ``f ~ z**az`` near z = 0. The domain is cut
    along x = z and x + z = T, so an integrand with kinks only on those lines
    is smooth on every piece. ``f`` must accept numpy arrays.
    """
    spec = spec or DEFAULT_2D
    if domain not in _DOMAINS:
        raise DomainError(f"unknown domain {domain!r}")
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    exps = []
    for s in singularities:
        if s is None:
            exps.append(0.0)
        elif s.edge != "lower":
            raise DomainError("2D singularities are supported on the x=0 / z=0 edges only")
        else:
            exps.append(float(s.exponent))
    ax, az = exps
    total = err = 0.0
    evals = 0
    for name in _DOMAINS[domain]:
        v, e, n = _integrate_piece(f, name, T, ax, az, spec)
        total += v
        err += e
        evals += n
    return IntegralResult(total, err, evals)


def _integrate_piece(f, name, T, ax, az, spec, component=None):
    (o0, o1), e_out, (v0, v1), e_in, m = _piece(name, T, ax, az)
    inner_rel = 0.1 * spec.rel_tol
    inner_abs = 0.1 * spec.abs_tol / max(T, 1.0)
    count = [0]
    worst = [0.0]
    if spec.rel_tol < 1e-6:
        # An inner error d moves the piece by at most d * (o1 - o0); a rough pilot
        # value lets inner integrals that are negligible for the total stop early
        # instead of chasing their own roundoff.
        pilot = QuadratureSpec(rel_tol=1e-6, abs_tol=spec.abs_tol, max_evaluations=spec.max_evaluations)
        pv, _, pn = _integrate_piece(f, name, T, ax, az, pilot, component)
        count[0] += pn
        inner_abs = max(inner_abs, 0.1 * spec.rel_tol * abs(pv) / (o1 - o0))

    def outer(own, o):
        flat = o.ravel()

        def inner(idx, v):
            x, z, jac = m(flat[idx], v)
            return f(x, z) * jac

        vals, errs, n = adaptive_batch(inner, np.full(flat.size, v0), np.full(flat.size, v1),
                                       e_in, 0.0, inner_rel, inner_abs,
                                       spec.max_evaluations, component)
        count[0] += n
        scale = np.maximum(np.abs(vals), inner_abs)
        worst[0] = max(worst[0], float(np.max(errs / scale)))
        return vals.reshape(o.shape)

    vals, errs, _ = adaptive_batch(outer, o0, o1, e_out, 0.0, spec.rel_tol,
                                   spec.abs_tol, spec.max_evaluations, component)
    if count[0] > spec.max_evaluations:
        raise NonConvergence(f"2D evaluation budget exhausted ({count[0]})", component)
    v = float(vals[0])
    return v, float(errs[0]) + worst[0] * abs(v), count[0]
