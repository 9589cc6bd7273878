"""Norms in the Hilbert space of fractional Brownian motion, their large-T expansions,
and quadrature and Monte Carlo cross-checks."""

from .errors import DomainError, EmbeddingFailure, NonConvergence, PoleAtThreeQuarters, TailWarning
from .expansions import (asymptote_params, decay_check, lemma_expansion, lemma_oracle,
                         sigma_consts, theorem_expansion)
from .fousim import McConfig, fbm_path, fou_path, mc_wt_variance, rho_sq_integral
from .ftnorm import norm_fT_sq, norm_fT_sq_bruteforce, norm_over_2T
from .hilbert import BVFunction, FbmCovariance, HurstParam, b_T, inner_product, ou_variance, rho1
from .numerics import QuadratureSpec, SingularityAnnotation, euler_gamma, integrate_1d, integrate_2d

__version__ = "0.1.0"
