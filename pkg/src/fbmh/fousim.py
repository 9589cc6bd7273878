"""fBm paths, the fractional Ornstein-Uhlenbeck process, and Monte Carlo for E[W_T^2]."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import linalg, signal

from .errors import DomainError, EmbeddingFailure, TailWarning
from .hilbert import as_hurst, ou_variance, rho1
from .numerics import DEFAULT_1D, QuadratureSpec, adaptive_batch

CHUNK = 256


@dataclass(frozen=True)
class McConfig:
    seed: int
    n_steps: int
    n_paths: int
    T: float
    H: float
    theta: float = 1.0

    def __post_init__(self):
        n = int(self.n_steps)
        if n < 2 or n & (n - 1):
            raise DomainError(f"n_steps must be a power of two, got {self.n_steps}")
        if int(self.n_paths) < 2:
            raise DomainError("n_paths must be at least 2")
        if not self.theta > 0:
            raise DomainError("theta must be positive")
        if not self.T > 0:
            raise DomainError("T must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        as_hurst(self.H)

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int


def fgn_autocov(H, n: int) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at lags 0..n-1."""
    h2 = 2.0 * as_hurst(H).H
    k = np.arange(n, dtype=float)
    return 0.5 * (np.abs(k + 1) ** h2 + np.abs(k - 1) ** h2 - 2.0 * k ** h2)


@lru_cache(maxsize=16)
def _sampler(H: float, n: int, method: str):
    """('circulant', sqrt eigenvalues) or ('dense', Cholesky factor)."""
    g = fgn_autocov(H, n + 1)
    if method == "circulant":
        row = np.concatenate([g, g[-2:0:-1]])
        lam = np.fft.fft(row).real
        if lam.min() >= -1e-10 * lam.max():
            return "circulant", np.sqrt(np.clip(lam, 0.0, None) / row.size)
    C = linalg.toeplitz(g[:n])
    for jitter in (0.0, 1e-12, 1e-10, 1e-8):
        try:
            return "dense", np.linalg.cholesky(C + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            continue
    raise EmbeddingFailure(f"no valid sampler for H={H}, n={n}")


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one path, determined by (seed, index) alone."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def fgn_block(H, n: int, seed: int, start: int, stop: int, method: str = "circulant") -> np.ndarray:
    """Unit-step fGn for paths start..stop-1, shape (stop-start, n)."""
    kind, S = _sampler(as_hurst(H).H, n, method)
    m = stop - start
    if kind == "circulant":
        Z = np.empty((m, S.size), dtype=complex)
        for j in range(m):
            rng = path_rng(seed, start + j)
            Z[j] = rng.standard_normal(S.size) + 1j * rng.standard_normal(S.size)
        return np.fft.fft(Z * S, axis=1).real[:, :n]
    Z = np.empty((m, n))
    for j in range(m):
        Z[j] = path_rng(seed, start + j).standard_normal(n)
    return Z @ S.T


def _workers():
    try:
        return max(1, int(os.environ.get("FBMH_THREADS", "1")))
    except ValueError:
        return 1


def _chunks(n_paths):
    return [(s, min(s + CHUNK, n_paths)) for s in range(0, n_paths, CHUNK)]


def fbm_increments(cfg: McConfig, start: int = 0, stop: Optional[int] = None, method: str = "circulant"):
    stop = cfg.n_paths if stop is None else stop
    return fgn_block(cfg.H, cfg.n_steps, cfg.seed, start, stop, method) * cfg.dt ** as_hurst(cfg.H).H


def fbm_path(cfg: McConfig, method: str = "circulant") -> Tuple[np.ndarray, np.ndarray]:
    """Grid times and paths of shape (n_paths, n_steps + 1) with B(0) = 0."""
    dB = fbm_increments(cfg, method=method)
    B = np.zeros((cfg.n_paths, cfg.n_steps + 1))
    np.cumsum(dB, axis=1, out=B[:, 1:])
    return cfg.times, B


def fou_from_increments(dB: np.ndarray, dt: float, theta: float = 1.0) -> np.ndarray:
    """eta_{k+1} = e^{-theta dt} eta_k + e^{-theta dt / 2} dB_k with eta_0 = 0."""
    phi = math.exp(-theta * dt)
    psi = math.exp(-0.5 * theta * dt)
    eta = signal.lfilter([psi], [1.0, -phi], dB, axis=-1)
    pad = [(0, 0)] * (eta.ndim - 1) + [(1, 0)]
    return np.pad(eta, pad)


def fou_path(fbm: np.ndarray, dt: float, theta: float = 1.0) -> np.ndarray:
    """fOU path(s) driven by fBm sampled on a uniform grid with spacing dt."""
    fbm = np.asarray(fbm, dtype=float)
    return fou_from_increments(np.diff(fbm, axis=-1), dt, theta)


@lru_cache(maxsize=32)
def _variance_on_grid(H: float, T: float, n: int, theta: float, coarse: int = 512) -> np.ndarray:
    """E[eta_t^2] on the MC grid: exact values on a coarse grid, linearly interpolated."""
    t = np.linspace(0.0, T, n + 1)
    tc = np.linspace(0.0, T, min(coarse, n) + 1)
    if theta == 1.0:
        vc = ou_variance(tc, H)
    else:
        # rescaling: eta under theta equals theta^{-H} eta(theta t) under theta = 1
        vc = theta ** (-2.0 * H) * ou_variance(theta * tc, H)
    return np.interp(t, tc, vc)


def _wt_block(cfg: McConfig, start: int, stop: int, centre: np.ndarray) -> np.ndarray:
    dB = fbm_increments(cfg, start, stop)
    eta = fou_from_increments(dB, cfg.dt, cfg.theta)
    dev = eta * eta - centre
    integral = cfg.dt * (dev[:, 1:-1].sum(axis=1) + 0.5 * (dev[:, 0] + dev[:, -1]))
    return integral / math.sqrt(cfg.T)


def wt_samples(cfg: McConfig) -> np.ndarray:
    """W_T = T^{-1/2} int_0^T (eta_t^2 - E eta_t^2) dt for every path (trapezoid rule)."""
    centre = _variance_on_grid(as_hurst(cfg.H).H, float(cfg.T), int(cfg.n_steps), float(cfg.theta))
    chunks = _chunks(cfg.n_paths)
    workers = min(_workers(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda c: _wt_block(cfg, c[0], c[1], centre), chunks))
    else:
        parts = [_wt_block(cfg, a, b, centre) for a, b in chunks]
    return np.concatenate(parts)


def mc_wt_variance(cfg: McConfig) -> McEstimate:
    """Sample mean of W_T^2 with its standard error."""
    w2 = wt_samples(cfg) ** 2
    n = w2.size
    return McEstimate(float(w2.mean()), float(w2.std(ddof=1) / math.sqrt(n)), n)


# ---------------------------------------------------------------- stationary covariance

def default_anchor(r: float) -> float:
    return max(50.0, 10.0 * r)


def rho_stationary(r: float, H, t_anchor: Optional[float] = None) -> float:
    """rho(r) = E[Z_r Z_0], approximated by E[eta_t eta_{t+r}] at a late time t."""
    if r < 0:
        raise DomainError("lag must be non-negative")
    t = default_anchor(r) if t_anchor is None else float(t_anchor)
    return rho1(t, t + r, H)


def default_r_max(H) -> float:
    return 60.0 if as_hurst(H).H <= 0.5 else 200.0


def rho_sq_tail(H, r_max: float) -> float:
    """Power-law estimate of int_{r_max}^inf rho^2, from rho at r_max / 2 and r_max."""
    r1, r2 = 0.5 * r_max, r_max
    p1, p2 = rho_stationary(r1, H), rho_stationary(r2, H)
    if p1 == 0.0 or p2 == 0.0 or p1 * p2 < 0 or abs(p2) >= abs(p1):
        return math.inf
    p = math.log(abs(p2 / p1)) / math.log(2.0)
    if 2.0 * p >= -1.0:
        return math.inf
    return p2 * p2 * r2 / (-2.0 * p - 1.0)


def rho_sq_integral(H, r_max: Optional[float] = None, spec: Optional[QuadratureSpec] = None,
                    tail_tol: float = 0.01) -> float:
    """int_0^{r_max} rho(r)^2 dr; warns when the neglected tail looks larger than tail_tol."""
    H = as_hurst(H)
    if not 0.0 < H.H < 0.75:
        raise DomainError(f"rho_sq_integral needs H in (0, 3/4), got {H.H}")
    r_max = default_r_max(H) if r_max is None else float(r_max)
    spec = spec or QuadratureSpec(rel_tol=1e-7, abs_tol=1e-10)

    def fn(own, r):
        flat = r.ravel()
        vals = np.array([rho_stationary(x, H) for x in flat])
        return (vals * vals).reshape(r.shape)

    v, _, _ = adaptive_batch(fn, 0.0, r_max, 0.0, 0.0, spec.rel_tol, spec.abs_tol)
    value = float(v[0])
    tail = rho_sq_tail(H, r_max)
    if tail > tail_tol * abs(value):
        warnings.warn(f"estimated tail beyond r_max={r_max} is {tail:.3g}, "
                      f"more than {tail_tol:.0%} of {value:.6g}", TailWarning, stacklevel=2)
    return value
