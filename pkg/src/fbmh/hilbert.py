"""The canonical Hilbert space of fBm on [0, T].

Functions of bounded variation are stored as piecewise-smooth pieces. Their
Lebesgue-Stieltjes measure nu_g (derivative density, atoms at jumps and at the
ends of the support) drives the inner product

    <f, g> = H * int int f(t) |t - s|^(2H-1) sgn(t - s) dt nu_g(ds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .errors import DomainError
from .numerics import (DEFAULT_1D, QuadratureSpec, adaptive_batch, gamma_fn,
                       scaled_lower_inc_many)

BROWNIAN_TOL = 1e-12
QUARTER_EPS = 1e-6
THREE_QUARTER_EPS = 1e-9


@dataclass(frozen=True)
class HurstParam:
    H: float

    def __post_init__(self):
        H = float(self.H)
        if not (0.0 < H < 1.0) or not math.isfinite(H):
            raise DomainError(f"Hurst parameter must lie in (0, 1), got {self.H!r}")
        object.__setattr__(self, "H", H)

    @property
    def beta_low(self) -> float:
        return 2.0 * self.H - 1.0

    @property
    def beta_high(self) -> float:
        return 2.0 * self.H - 2.0

    @property
    def branch(self) -> str:
        if abs(self.H - 0.5) <= BROWNIAN_TOL:
            return "brownian"
        return "lowH" if self.H < 0.5 else "highH"

    @property
    def beta(self) -> float:
        """The exponent used by the reductions of the current branch."""
        return self.beta_high if self.branch == "highH" else self.beta_low

    @property
    def near_quarter(self) -> bool:
        return abs(self.H - 0.25) < QUARTER_EPS

    @property
    def near_three_quarters(self) -> bool:
        return abs(self.H - 0.75) < THREE_QUARTER_EPS


def as_hurst(H) -> HurstParam:
    return H if isinstance(H, HurstParam) else HurstParam(H)


class FbmCovariance:
    """R(s, t) = (s^2H + t^2H - |s - t|^2H) / 2, vectorized."""

    def __init__(self, H):
        self.H = as_hurst(H)

    def __call__(self, s, t):
        h2 = 2.0 * self.H.H
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        out = 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(s - t) ** h2)
        return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- BV functions

def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Piece:
    """A C^1 function on [lo, hi] together with its derivative (both vectorized)."""

    lo: float
    hi: float
    fn: Callable
    dfn: Callable


@dataclass(frozen=True)
class BVFunction:
    """Piecewise C^1 function on [0, T], zero outside its pieces.

    Jumps sit at piece boundaries. Values at a boundary are right limits.
    """

    T: float
    pieces: Tuple[Piece, ...]

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"T must be positive, got {self.T}")
        ps = tuple(sorted(self.pieces, key=lambda p: p.lo))
        prev = 0.0
        for p in ps:
            if not (0.0 <= p.lo < p.hi <= self.T):
                raise DomainError(f"piece [{p.lo}, {p.hi}] is not inside [0, {self.T}]")
            if p.lo < prev:
                raise DomainError("pieces overlap")
            prev = p.hi
        object.__setattr__(self, "pieces", ps)

    @property
    def breakpoints(self) -> List[float]:
        return sorted({p.lo for p in self.pieces} | {p.hi for p in self.pieces})

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k, p in enumerate(self.pieces):
            last = k == len(self.pieces) - 1 or self.pieces[k + 1].lo > p.hi
            sel = (x >= p.lo) & ((x < p.hi) | (last & (x == p.hi)))
            if sel.any():
                out[sel] = p.fn(x[sel])
        return float(out) if out.ndim == 0 else out

    def _piece_at(self, lo, hi):
        for p in self.pieces:
            if p.lo <= lo and hi <= p.hi:
                return p
        return None

    def combine(self, other: "BVFunction", a: float = 1.0, b: float = 1.0) -> "BVFunction":
        """a*self + b*other."""
        if other.T != self.T:
            raise DomainError("functions live on different intervals")
        cuts = sorted(set(self.breakpoints) | set(other.breakpoints))
        out = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            terms = [(c, p) for c, p in ((a, self._piece_at(lo, hi)), (b, other._piece_at(lo, hi)))
                     if p is not None and c != 0.0]
            if not terms:
                continue
            out.append(Piece(lo, hi, _lin(terms, "fn"), _lin(terms, "dfn")))
        return BVFunction(self.T, tuple(out))

    def __add__(self, other):
        return self.combine(other)

    def __sub__(self, other):
        return self.combine(other, 1.0, -1.0)

    def __mul__(self, c):
        c = float(c)
        return BVFunction(self.T, tuple(Piece(p.lo, p.hi, _lin([(c, p)], "fn"), _lin([(c, p)], "dfn"))
                                        for p in self.pieces))

    __rmul__ = __mul__


def _lin(terms, attr):
    def f(x):
        return sum(c * getattr(p, attr)(x) for c, p in terms)
    return f


def indicator(a: float, b: float, T: float) -> BVFunction:
    """1_[a, b] on [0, T]."""
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    return BVFunction(T, (Piece(float(a), float(b), one, _zero),))


def smooth(fn: Callable, dfn: Callable, T: float, lo: float = 0.0, hi: Optional[float] = None) -> BVFunction:
    return BVFunction(T, (Piece(float(lo), float(T if hi is None else hi), fn, dfn),))


def ou_kernel(t: float, T: float, theta: float = 1.0) -> BVFunction:
    """h_t(u) = e^{theta (u - t)} 1_[0, t](u), the fOU integrand."""
    if not 0 < t <= T:
        raise DomainError(f"need 0 < t <= T, got t={t}, T={T}")
    f = lambda u: np.exp(theta * (np.asarray(u, dtype=float) - t))
    df = lambda u: theta * np.exp(theta * (np.asarray(u, dtype=float) - t))
    return smooth(f, df, T, 0.0, t)


@dataclass(frozen=True)
class StieltjesMeasure:
    density: Tuple[Tuple[float, float, Callable], ...]
    atoms: Tuple[Tuple[float, float], ...]

    def total_mass(self, spec: Optional[QuadratureSpec] = None) -> float:
        from .numerics import integrate_1d
        m = sum(w for _, w in self.atoms)
        for lo, hi, d in self.density:
            m += integrate_1d(d, lo, hi, spec=spec).value
        return m


def measure_of(g: BVFunction) -> StieltjesMeasure:
    """nu_g: density g' plus atoms +g(0+) at 0, -g(T-) at T and right-minus-left jumps."""
    atoms = {}
    ps = g.pieces
    for k, p in enumerate(ps):
        left = float(p.fn(np.array([p.lo]))[0])
        if k > 0 and ps[k - 1].hi == p.lo:
            left -= float(ps[k - 1].fn(np.array([p.lo]))[0])
        atoms[p.lo] = atoms.get(p.lo, 0.0) + left
        if k == len(ps) - 1 or ps[k + 1].lo > p.hi:
            atoms[p.hi] = atoms.get(p.hi, 0.0) - float(p.fn(np.array([p.hi]))[0])
    return StieltjesMeasure(tuple((p.lo, p.hi, p.dfn) for p in ps),
                            tuple((x, m) for x, m in sorted(atoms.items()) if m != 0.0))


def _kernel_transform(f: BVFunction, s, alpha, rel_tol, abs_tol):
    """G(s) = int_0^T f(t) |t - s|^alpha sgn(t - s) dt for every entry of s.

    Each piece is integrated in the distance r = |t - s| so the singular point
    r = 0 is exact and no rounding of t - s can reach it.
    """
    s = np.asarray(s, dtype=float).ravel()
    los, his, lex, sgn, own, pid = [], [], [], [], [], []
    idx = np.arange(s.size)
    for i, p in enumerate(f.pieces):
        L = s > p.lo  # part of the piece to the left of s: t = s - r
        if L.any():
            sl = s[L]
            los.append(np.maximum(sl - p.hi, 0.0))
            his.append(sl - p.lo)
            lex.append(np.where(sl <= p.hi, alpha, 0.0))
            sgn.append(np.full(sl.size, -1.0))
            own.append(idx[L])
            pid.append(np.full(sl.size, i))
        R = s < p.hi  # right of s: t = s + r
        if R.any():
            sr = s[R]
            los.append(np.maximum(p.lo - sr, 0.0))
            his.append(p.hi - sr)
            lex.append(np.where(sr >= p.lo, alpha, 0.0))
            sgn.append(np.full(sr.size, 1.0))
            own.append(idx[R])
            pid.append(np.full(sr.size, i))
    out = np.zeros(s.size)
    if not los:
        return out
    lo = np.concatenate(los)
    hi = np.concatenate(his)
    keep = hi > lo
    lo, hi, lex = lo[keep], hi[keep], np.concatenate(lex)[keep]
    sgn, own, pid = np.concatenate(sgn)[keep], np.concatenate(own)[keep], np.concatenate(pid)[keep]
    if lo.size == 0:
        return out

    def fn(k, r):
        t = s[own[k]] + sgn[k] * r
        fv = np.empty(r.shape)
        pk = pid[k]
        for i, p in enumerate(f.pieces):
            m = pk == i
            if m.any():
                fv[m] = p.fn(np.clip(t[m], p.lo, p.hi))
        return fv * r ** alpha * sgn[k]

    vals, _, _ = adaptive_batch(fn, lo, hi, lex, 0.0, rel_tol, abs_tol)
    return np.bincount(own, vals, s.size)


def inner_product(f: BVFunction, g: BVFunction, H, spec: Optional[QuadratureSpec] = None) -> float:
    """<f, g> in the fBm Hilbert space on [0, T].

    At H = 1/2 this is the L^2 product. Otherwise the atoms of nu_g give 1D
    singular integrals and its density gives an iterated integral.
    """
    H = as_hurst(H)
    spec = spec or DEFAULT_1D
    if f.T != g.T:
        raise DomainError("f and g must share the interval [0, T]")
    if H.branch == "brownian":
        return _l2_product(f, g, spec)
    alpha = H.beta_low
    inner_rel = 0.1 * spec.rel_tol
    inner_abs = 0.1 * spec.abs_tol / max(f.T, 1.0)
    nu = measure_of(g)
    total = 0.0
    if nu.atoms:
        locs = np.array([x for x, _ in nu.atoms])
        masses = np.array([m for _, m in nu.atoms])
        total += float(masses @ _kernel_transform(f, locs, alpha, inner_rel, inner_abs))
    fb = f.breakpoints
    segs = []
    for lo, hi, d in nu.density:
        cuts = [lo] + [b for b in fb if lo < b < hi] + [hi]
        segs += [(a, b, d) for a, b in zip(cuts[:-1], cuts[1:])]
    if segs:
        lo = np.array([a for a, _, _ in segs])
        hi = np.array([b for _, b, _ in segs])

        def outer(own, s):
            dens = np.empty(s.shape)
            for k, (_, _, d) in enumerate(segs):
                m = own == k
                if m.any():
                    dens[m] = d(s[m])
            G = _kernel_transform(f, s, alpha, inner_rel, inner_abs).reshape(s.shape)
            return dens * G

        vals, _, _ = adaptive_batch(outer, lo, hi, 0.0, 0.0, spec.rel_tol, spec.abs_tol,
                                    spec.max_evaluations, "inner_product")
        total += float(vals.sum())
    return H.H * total


def _l2_product(f, g, spec):
    cuts = sorted(set(f.breakpoints) | set(g.breakpoints))
    lo, hi = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if f._piece_at(a, b) is not None and g._piece_at(a, b) is not None:
            lo.append(a)
            hi.append(b)
    if not lo:
        return 0.0
    segs = list(zip(lo, hi))

    def fn(own, x):
        out = np.empty(x.shape)
        for k, (a, b) in enumerate(segs):
            m = own == k
            if m.any():
                out[m] = f._piece_at(a, b).fn(x[m]) * g._piece_at(a, b).fn(x[m])
        return out

    vals, _, _ = adaptive_batch(fn, np.array(lo), np.array(hi), 0.0, 0.0,
                                spec.rel_tol, spec.abs_tol, spec.max_evaluations)
    return float(vals.sum())


def discrete_norm_oracle_2d(f2: Callable, H, n: int, T: float) -> float:
    """Step-function approximation of the tensor-square norm of f2 on [0, T]^2.

    f2 is sampled at cell midpoints and contracted twice against the exact
    covariance of the fBm increments over the n cells.
    """
    H = as_hurst(H)
    if n < 8:
        raise DomainError("n must be at least 8")
    h = T / n
    M = increment_covariance(H, n, h)
    mid = (np.arange(n) + 0.5) * h
    F = np.asarray(f2(mid[:, None], mid[None, :]), dtype=float)
    F = np.broadcast_to(F, (n, n))
    return float(np.sum((F.T @ M @ F) * M))


def increment_covariance(H, n: int, h: float) -> np.ndarray:
    """E[dB_i dB_k] for n consecutive increments of length h (Toeplitz)."""
    H = as_hurst(H)
    from scipy.linalg import toeplitz
    d = np.arange(n, dtype=float)
    h2 = 2.0 * H.H
    c = 0.5 * h ** h2 * (np.abs(d + 1) ** h2 + np.abs(d - 1) ** h2 - 2.0 * d ** h2)
    return toeplitz(c)


# ---------------------------------------------------------------- fOU covariances

def _phi(v, s, alpha):
    """G(v) for f = h_s: S(alpha, s - v) - e^{v - s} gamma(alpha + 1, v)."""
    v = np.asarray(v, dtype=float)
    lower = gamma_fn(alpha + 1.0) * special.gammainc(alpha + 1.0, v)
    return scaled_lower_inc_many(alpha, s - v) - np.exp(v - s) * lower


def rho1(t: float, s: float, H, spec: Optional[QuadratureSpec] = None) -> float:
    """E[eta_t eta_s] = <h_t, h_s> for the fOU process with theta = 1.

    Uses the closed inner transform of h_s, leaving one regular 1D integral.
    """
    H = as_hurst(H)
    if t < 0 or s < 0:
        raise DomainError("times must be non-negative")
    t, s = sorted((float(t), float(s)))
    if t == 0.0:
        return 0.0
    spec = spec or DEFAULT_1D
    if H.branch == "brownian":
        return 0.5 * (math.exp(t - s) - math.exp(-t - s))
    alpha = H.beta_low
    phi0 = float(_phi(np.array([0.0]), s, alpha)[0])
    phit = float(_phi(np.array([t]), s, alpha)[0])
    vals, _, _ = adaptive_batch(lambda own, v: np.exp(v - t) * _phi(v.ravel(), s, alpha).reshape(v.shape),
                                0.0, t, 0.0, 0.0, spec.rel_tol, spec.abs_tol)
    return H.H * (math.exp(-t) * phi0 - phit + float(vals[0]))


def ou_variance(t, H):
    """E[eta_t^2] = H (e^{-t} S(2H-1, t) + gamma(2H, t)), vectorized in t."""
    H = as_hurst(H)
    t = np.asarray(t, dtype=float)
    tt = np.atleast_1d(t)
    alpha = H.beta_low
    out = H.H * (np.exp(-tt) * scaled_lower_inc_many(alpha, tt)
                 + gamma_fn(2.0 * H.H) * special.gammainc(2.0 * H.H, tt))
    return float(out[0]) if t.ndim == 0 else out


def b_T(T: float, H, spec: Optional[QuadratureSpec] = None) -> float:
    """(1/T) int_0^T E[eta_t^2] dt."""
    H = as_hurst(H)
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    spec = spec or DEFAULT_1D
    vals, _, _ = adaptive_batch(lambda own, t: ou_variance(t.ravel(), H).reshape(t.shape),
                                0.0, T, 0.0, 0.0, spec.rel_tol, spec.abs_tol)
    return float(vals[0]) / T
