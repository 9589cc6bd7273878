"""The ten acceptance checks, shared by the test suite and ``fbmh verify-all``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from . import expansions as ex
from .ftnorm import brownian_closed_form, norm_fT_sq, norm_fT_sq_bruteforce, norm_over_2T
from .fousim import McConfig, mc_wt_variance, rho_sq_integral
from .hilbert import b_T

T_GRID = (25.0, 50.0, 100.0, 200.0)
MC_SEED = 0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: List[str] = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.title} ({self.seconds:.1f}s)"


def c1_brownian():
    ok, d = True, []
    for T in (1.0, 5.0, 10.0):
        v = norm_fT_sq(T, 0.5).total
        rel = abs(v / brownian_closed_form(T) - 1.0)
        ok &= rel <= 1e-8
        d.append(f"T={T:g}: rel err {rel:.2e}")
    return ok, d


def c2_oracle():
    ok, d = True, []
    for H in (0.25, 0.3, 0.6, 0.7):
        for T in (1.0, 2.0):
            v = norm_fT_sq(T, H).total
            o = norm_fT_sq_bruteforce(T, H, 1024)
            rel = abs(v / o - 1.0)
            ok &= rel <= 0.03
            d.append(f"H={H} T={T:g}: engine {v:.6f} oracle {o:.6f} rel {rel:.2e}")
    return ok, d


def c3_limit():
    ok, d = True, []
    for H in (0.25, 0.3, 0.5, 0.6):
        v = norm_over_2T(200.0, H)
        s = ex.sigma_consts(H).sigma2
        rel = abs(v / s - 1.0)
        ok &= rel <= 0.015
        d.append(f"H={H}: {v:.6f} vs sigma^2 {s:.6f} rel {rel:.2e}")
    return ok, d


def c4_theorem_order():
    ok, d = True, []
    for H, bound in ((0.3, 4 * 0.3 - 4 + 0.4), (0.6, 4 * 0.6 - 4 + 0.4), (0.75, -1.6)):
        res = [norm_fT_sq(T, H).total - ex.theorem_expansion(T, H).value for T in T_GRID]
        s = ex.loglog_slope(T_GRID, res)
        ok &= s <= bound
        d.append(f"H={H}: slope {s:.3f} (bound {bound:.2f})")
    return ok, d


def c5_decay():
    ok, d = True, []
    for H in (0.25, 0.3, 0.6):
        sc = [r["scaled_residual"] for r in ex.decay_check(H, T_GRID)]
        q = ex.max_over_median(sc)
        ok &= q <= 3.0
        d.append(f"H={H}: max/median {q:.3f}")
    return ok, d


def c6_asymptote():
    p = ex.asymptote_params(0.3)
    gaps = [abs(norm_fT_sq(T, 0.3).total / 2 - (p.slope * T + p.intercept)) for T in T_GRID]
    dec = all(b < a for a, b in zip(gaps, gaps[1:]))
    s = ex.loglog_slope(T_GRID, gaps)
    q = ex.asymptote_params(0.5)
    g5 = abs(norm_fT_sq(200.0, 0.5).total / 2 - (q.slope * 200.0 + q.intercept))
    ok = dec and s <= -0.4 and g5 <= 1e-6
    return ok, [f"H=0.3: gaps decreasing {dec}, slope {s:.3f} (bound -0.4)",
                f"H=0.5: gap at T=200 {g5:.2e}"]


LEMMA_SUITE = (
    [("A2", b) for b in (-0.9, -0.5, -0.1)]
    + [("A3", b) for b in (-0.5, -0.2)]
    + [("A4", None)]
    + [("A5", b) for b in (-0.7, -0.5, -0.3, 0.2)]
    + [("L1", h) for h in (0.3, 0.6)]
    + [("L2", h) for h in (0.6, 0.9)]
    + [("L2_34", None)]
)


def c7_lemmas():
    ok, d = True, []
    for lemma, p in LEMMA_SUITE:
        sc = [r["scaled_residual"] for r in ex.lemma_residuals(lemma, T_GRID, p)]
        q = ex.max_over_median(sc)
        ok &= q <= 3.0
        d.append(f"{lemma}({'' if p is None else p}): max/median {q:.3f}")
    return ok, d


def c8_monte_carlo(seed: int = MC_SEED):
    ok, d = True, []
    for H in (0.5, 0.6, 0.3):
        est = mc_wt_variance(McConfig(seed=seed, n_steps=4096, n_paths=2000, T=50.0, H=H))
        s = ex.sigma_consts(H).sigma2
        z = (est.mean - s) / est.std_error
        good = abs(z) <= 3.0 or (H == 0.3 and abs(est.mean - s) <= 0.02)
        ok &= good
        d.append(f"H={H}: mean {est.mean:.4f} +- {est.std_error:.4f} vs {s:.4f} (z={z:+.2f})")
    return ok, d


def c9_rho_integral():
    ok, d = True, []
    for H in (0.25, 0.5, 0.6):
        v = rho_sq_integral(H)
        t = ex.sigma_consts(H).sigma2 / 4
        rel = abs(v / t - 1.0)
        ok &= rel <= 0.05
        d.append(f"H={H}: {v:.6f} vs sigma^2/4 {t:.6f} rel {rel:.2e}")
    return ok, d


def c10_bT():
    ok, d = True, []
    for H in (0.3, 0.6):
        a = ex.sigma_consts(H).a
        gaps = [b_T(T, H) - a for T in T_GRID]
        s = ex.loglog_slope(T_GRID, gaps)
        ok &= s <= -0.6
        d.append(f"H={H}: slope {s:.3f}")
    return ok, d


CRITERIA: Dict[int, tuple] = {
    1: ("Brownian exactness", c1_brownian),
    2: ("Oracle equivalence", c2_oracle),
    3: ("Limit sigma^2", c3_limit),
    4: ("Expansion residual order", c4_theorem_order),
    5: ("Decay bound", c5_decay),
    6: ("Oblique asymptote", c6_asymptote),
    7: ("Auxiliary expansion suite", c7_lemmas),
    8: ("Monte Carlo E[W_T^2]", c8_monte_carlo),
    9: ("Integral of rho^2", c9_rho_integral),
    10: ("b_T rate", c10_bT),
}


def run_criterion(k: int) -> CriterionResult:
    title, fn = CRITERIA[k]
    t = time.perf_counter()
    ok, details = fn()
    return CriterionResult(k, title, bool(ok), details, time.perf_counter() - t)


def run_all(which=None) -> List[CriterionResult]:
    return [run_criterion(k) for k in (which or sorted(CRITERIA))]
