"""Randomized reference classifier for two-class supports.

A deterministic support ``d`` for a class is replaced by a beta random
variable with mean ``d``; parameters follow the mean-matching family
``lambda = c * d``, ``mu = c * (1 - d)`` with concentration ``c``.  The class
probability is ``Pr[D_h > D_other]`` for independent ``D_h``, ``D_other``::

    p_h = integral_0^1  pdf_h(u) * cdf_other(u) du

Quadrature
----------
With ``m = 1/2`` the integral is split as::

    p_h = int_0^m pdf_h cdf_o du + (1 - cdf_h(m)) - int_m^1 pdf_h (1 - cdf_o) du

Near ``u = 0`` the first integrand behaves like ``u**(lambda_h + lambda_o - 1)``
and near ``u = 1`` the last one like ``(1 - u)**(mu_h + mu_o - 1)``; for the
mean-matching family both exponents equal ``c - 1``.  Each piece is mapped to
``s in [0, 1]`` by ``u = m * s**q`` (resp. ``1 - u = m * s**q``) with
``q = max(1, 5 / c)``, which turns the endpoint behaviour into ``s**4`` or
smoother, and then integrated by composite Simpson.  Because the two beta laws
of a pair mirror each other (``D_2 ~ 1 - D_1``) the upper piece of ``p_1`` is
the lower piece of ``p_2`` and vice versa, so two integrals serve both classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

SUPPORT_CLAMP = 1e-6
DEFAULT_CONCENTRATION = 2.0
DEFAULT_QUAD_POINTS = 1025
MIN_QUAD_POINTS = 64

_SPLIT = 0.5
_SMOOTHING_ORDER = 5.0
_CHUNK = 2048


class RRCNumericError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BetaParams:
    lam: float
    mu: float

    @property
    def mean(self) -> float:
        return self.lam / (self.lam + self.mu)


@dataclass(frozen=True)
class RRCConfig:
    concentration: float = DEFAULT_CONCENTRATION
    quad_points: int = DEFAULT_QUAD_POINTS
    # "integral": independent supports, as in the pairwise integral above.
    # "sum-to-one": D_1 + D_2 = 1, giving p_1 = 1 - cdf_1(1/2).
    method: str = "integral"

    def __post_init__(self):
        if not self.concentration > 0:
            raise ValueError(f"concentration must be > 0, got {self.concentration}")
        if self.quad_points < MIN_QUAD_POINTS:
            raise ValueError(f"quad_points must be >= {MIN_QUAD_POINTS}")
        if self.method not in ("integral", "sum-to-one"):
            raise ValueError(f"unknown RRC method {self.method!r}")


def _check_params(a, b):
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
        raise ValueError("beta parameters must be > 0")


def clamp_support(d):
    return np.clip(d, SUPPORT_CLAMP, 1.0 - SUPPORT_CLAMP)


def beta_params(d: float, concentration: float = DEFAULT_CONCENTRATION) -> BetaParams:
    if not concentration > 0:
        raise ValueError(f"concentration must be > 0, got {concentration}")
    d = float(clamp_support(d))
    return BetaParams(concentration * d, concentration * (1.0 - d))


def _log_pdf(u, a, b):
    with np.errstate(divide="ignore", invalid="ignore"):
        return special.xlogy(a - 1.0, u) + special.xlog1py(b - 1.0, -u) - special.betaln(a, b)


def beta_pdf(u, params: BetaParams):
    _check_params(params.lam, params.mu)
    u = np.asarray(u, dtype=np.float64)
    if np.any((u < 0) | (u > 1)):
        raise ValueError("u must lie in [0, 1]")
    out = np.exp(_log_pdf(u, params.lam, params.mu))
    return float(out) if out.ndim == 0 else out


def beta_cdf(u, params: BetaParams):
    """Regularised incomplete beta function ``I_u(lambda, mu)``."""
    _check_params(params.lam, params.mu)
    u = np.asarray(u, dtype=np.float64)
    if np.any((u < 0) | (u > 1)):
        raise ValueError("u must lie in [0, 1]")
    out = special.betainc(params.lam, params.mu, u)
    return float(out) if out.ndim == 0 else out


def _simpson_weights(n: int) -> np.ndarray:
    if n % 2 == 0:
        n += 1
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * (n - 1))


def _lower_integral(a_h, b_h, a_o, b_o, s, w, q):
    """``int_0^{1/2} pdf(u; a_h, b_h) * cdf(u; a_o, b_o) du`` for column-vector params."""
    u = _SPLIT * s[1:] ** q
    log_jac = np.log(_SPLIT * q) + (q - 1.0) * np.log(s[1:])
    with np.errstate(under="ignore"):
        f = np.exp(_log_pdf(u, a_h, b_h) + log_jac) * special.betainc(a_o, b_o, u)
    # integrand -> 0 at s = 0 (behaves like s**4 or a higher power).
    # Row-wise reduction rather than a matrix product keeps every row's result
    # independent of how many rows are evaluated together.
    return np.sum(f * w[1:], axis=1)


def _rrc_arrays(d1: np.ndarray, d2: np.ndarray, cfg: RRCConfig) -> tuple[np.ndarray, np.ndarray]:
    # Parameters come from both columns so that swapping the pair swaps the
    # result bit for bit.
    c = cfg.concentration
    lam1, mu1 = c * d1, c * d2
    if cfg.method == "sum-to-one":
        return special.betaincc(lam1, mu1, _SPLIT), special.betaincc(mu1, lam1, _SPLIT)
    n = cfg.quad_points + (1 - cfg.quad_points % 2)
    s = np.linspace(0.0, 1.0, n)
    w = _simpson_weights(n)
    q = max(1.0, _SMOOTHING_ORDER / c)
    p1 = np.empty_like(d1)
    p2 = np.empty_like(d1)
    for start in range(0, d1.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        a1, b1 = lam1[sl, None], mu1[sl, None]
        # class 2 ~ Beta(b1, a1)
        i12 = _lower_integral(a1, b1, b1, a1, s, w, q)
        i21 = _lower_integral(b1, a1, a1, b1, s, w, q)
        p1[sl] = i12 + special.betaincc(a1[:, 0], b1[:, 0], _SPLIT) - i21
        p2[sl] = i21 + special.betaincc(b1[:, 0], a1[:, 0], _SPLIT) - i12
    return p1, p2


def rrc_probabilities(supports, cfg: RRCConfig = RRCConfig()) -> np.ndarray:
    """Vectorised RRC class probabilities.

    ``supports`` is an ``(n, 2)`` array of support pairs (or a single pair);
    each pair is renormalised to sum to one and clamped to
    ``[1e-6, 1 - 1e-6]``.  Returns an array of the same shape.
    """
    sp = np.asarray(supports, dtype=np.float64)
    single = sp.ndim == 1
    sp2 = np.atleast_2d(sp)
    if sp2.shape[1] != 2:
        raise ValueError("supports must have two columns")
    if not np.isfinite(sp2).all():
        raise RRCNumericError("non-finite support value")
    if np.any(sp2 < 0):
        raise ValueError("supports must be non-negative")
    total = sp2[:, 0] + sp2[:, 1]
    if np.any(total <= 0):
        raise RRCNumericError("support pair sums to zero")
    d1 = clamp_support(sp2[:, 0] / total)
    d2 = clamp_support(sp2[:, 1] / total)
    p1, p2 = _rrc_arrays(d1, d2, cfg)
    if not (np.isfinite(p1).all() and np.isfinite(p2).all()):
        raise RRCNumericError("non-finite RRC probability")
    # Keep the smaller probability and complement it, so each pair sums to one
    # exactly while swapping the classes still swaps the output bit for bit.
    small = np.clip(np.minimum(p1, p2), 0.0, 0.5)
    first_small = p1 <= p2
    out = np.column_stack([np.where(first_small, small, 1.0 - small),
                           np.where(first_small, 1.0 - small, small)])
    # identical beta laws for both classes: the answer is exactly 1/2
    out[d1 == d2] = 0.5
    return out[0] if single else out


def rrc_probability(sp, concentration: float = DEFAULT_CONCENTRATION,
                    quad_points: int = DEFAULT_QUAD_POINTS, method: str = "integral"):
    """``(p_m1, p_m2)`` for one support pair."""
    p = rrc_probabilities(np.asarray(sp, dtype=np.float64),
                          RRCConfig(concentration, quad_points, method))
    return float(p[0]), float(p[1])
