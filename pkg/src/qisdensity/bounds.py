"""Read-noise bounds under which the bit density stays at its ideal value."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bitdensity import (
    DEFAULT_POLICY,
    PgModel,
    Quantizer,
    SeriesPolicy,
    bit_density,
    gaussian_cdf_terms,
    ideal_density,
    poisson_window,
)
from .special import phi_inv, poisson_pmf

__all__ = [
    "TABLE1_ALPHAS",
    "Tolerance",
    "PwlCdf",
    "IntegerThetaConfig",
    "SigmaRange",
    "sigma_max_theorem1",
    "table1",
    "pwl_cdf_build",
    "pwl_cdf_eval",
    "sigma_max_coarse",
    "sigma_max_general_q",
    "sigma_range_search",
    "integer_theta_residue",
]

TABLE1_ALPHAS = tuple(10.0 ** -e for e in range(3, 13))

SEARCH_SIGMA_MAX = 4.0
SEARCH_SIGMA_MIN = 1e-6
_COARSE_STEP = 0.05
_FINE_STEP = 1e-3


@dataclass(frozen=True)
class Tolerance:
    """Relative-error tolerance alpha."""
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5), got {self.alpha!r}")


def _alpha(tol) -> float:
    return tol.alpha if isinstance(tol, Tolerance) else Tolerance(float(tol)).alpha


@dataclass(frozen=True)
class PwlCdf:
    """Piecewise-linear stand-in for ``k -> Phi((k - q) / sigma)``."""
    q: float
    a: float     # slope at k = q, 1 / sqrt(2 pi sigma^2)
    b: float     # intercept, 0.5 - q a
    ell: float   # lower breakpoint, value 0
    u: float     # upper breakpoint, value 1


@dataclass(frozen=True)
class IntegerThetaConfig:
    """Integer exposure with the threshold half a count below it."""
    theta: int
    q: float
    q_bar: int     # ceiling of q, equals theta
    q_under: int   # floor of q, equals theta - 1

    def __post_init__(self):
        if int(self.theta) != self.theta or self.theta < 1:
            raise ValueError(f"theta must be an integer >= 1, got {self.theta!r}")
        if self.q != self.theta - 0.5 or self.q_bar != self.theta or self.q_under != self.theta - 1:
            raise ValueError("IntegerThetaConfig requires q = theta - 0.5, q_bar = theta, q_under = theta - 1")

    @classmethod
    def from_theta(cls, theta: int) -> "IntegerThetaConfig":
        theta = int(theta)
        return cls(theta=theta, q=theta - 0.5, q_bar=theta, q_under=theta - 1)


@dataclass(frozen=True)
class SigmaRange:
    """Outcome of :func:`sigma_range_search`."""
    sigma: float
    method: str          # "bisection" or "grid"
    at_floor: bool = False   # criterion already failed at the smallest probe


def _theorem1_constants():
    theta = 1.0
    d_star = -math.expm1(-theta)
    return d_star, poisson_pmf(theta, 2)


def sigma_max_theorem1(tol) -> float:
    """Largest read noise keeping the ``theta = 1, q = 0.5`` residue within ``alpha``.

    Solves ``P(2) (1 - Phi(1.5 / sigma)) = alpha D*`` for sigma.
    """
    alpha = _alpha(tol)
    d_star, p2 = _theorem1_constants()
    arg = 1.0 - alpha * d_star / p2
    if not 0.0 < arg < 1.0:
        raise ValueError(f"alpha={alpha!r} puts the quantile argument outside (0, 1)")
    return (2.0 - 0.5) / phi_inv(arg)


def table1(alphas: Iterable = TABLE1_ALPHAS) -> list[tuple[float, float]]:
    return [(_alpha(a), sigma_max_theorem1(a)) for a in alphas]


def pwl_cdf_build(q: float, sigma: float) -> PwlCdf:
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma!r}")
    a = 1.0 / math.sqrt(2.0 * math.pi * sigma * sigma)
    half_width = 0.5 * math.sqrt(2.0 * math.pi) * sigma
    return PwlCdf(q=q, a=a, b=0.5 - q * a, ell=q - half_width, u=q + half_width)


def pwl_cdf_eval(pwl: PwlCdf, k):
    """0 below ``ell``, linear in between, 1 above ``u``."""
    k = np.asarray(k, dtype=float)
    # 0.5 + a (k - q) equals a k + b and is exactly 0.5 at k = q
    out = np.clip(0.5 + pwl.a * (k - pwl.q), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def sigma_max_coarse() -> float:
    """Read-noise level at which the linear CDF ramp spans exactly [0, 1]."""
    return 1.0 / math.sqrt(2.0 * math.pi)


def sigma_max_general_q(q: float, tol) -> float:
    """``min(-q / Phi^-1(alpha), (1 - q) / Phi^-1(1 - alpha))`` for ``0 < q < 1``."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    alpha = _alpha(tol)
    return min(-q / phi_inv(alpha), (1.0 - q) / phi_inv(1.0 - alpha))


def sigma_range_search(theta: float, q: float, tol,
                       policy: SeriesPolicy = DEFAULT_POLICY) -> SigmaRange:
    """Largest sigma such that ``|D(s) - D*| / D* <= alpha`` for every ``s`` up to it.

    The relative error is probed on a coarse grid over ``[0, 4]``. When the
    probes are non-decreasing the boundary is bracketed there and bisected;
    otherwise a fine scan (step 1e-3) locates the first failing point before
    bisecting. Both paths return the first exit from the tolerance band.
    """
    alpha = _alpha(tol)
    quantizer = Quantizer(q)
    d_star = ideal_density(theta, quantizer)
    if d_star <= 0:
        raise ValueError("sigma_range_search needs D* > 0")
    k, pmf = poisson_window(theta, policy)

    def rel_err(sigma: float) -> float:
        d = float(np.dot(pmf, gaussian_cdf_terms(k, q, sigma)))
        return abs(d - d_star) / d_star

    def ok(sigma: float) -> bool:
        return rel_err(sigma) <= alpha

    if not ok(SEARCH_SIGMA_MIN):
        return SigmaRange(sigma=0.0, method="grid", at_floor=True)

    coarse = np.arange(_COARSE_STEP, SEARCH_SIGMA_MAX + _COARSE_STEP / 2, _COARSE_STEP)
    errs = np.array([rel_err(s) for s in coarse])
    monotone = bool(np.all(np.diff(errs) >= 0))

    if monotone:
        method = "bisection"
        grid = np.concatenate([[SEARCH_SIGMA_MIN], coarse])
        passed = np.concatenate([[True], errs <= alpha])
    else:
        method = "grid"
        fine = np.arange(_FINE_STEP, SEARCH_SIGMA_MAX + _FINE_STEP / 2, _FINE_STEP)
        grid = np.concatenate([[SEARCH_SIGMA_MIN], fine])
        passed = np.array([True] + [ok(s) for s in fine])

    failing = np.flatnonzero(~passed)
    if failing.size == 0:
        return SigmaRange(sigma=float(grid[-1]), method=method)
    lo, hi = float(grid[failing[0] - 1]), float(grid[failing[0]])
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return SigmaRange(sigma=lo, method=method)


def integer_theta_residue(cfg: IntegerThetaConfig, sigma: float,
                          policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """``D(sigma) - D*`` at an integer exposure with ``q = theta - 0.5``, full series."""
    if not sigma >= 0:
        raise ValueError(f"sigma must be >= 0, got {sigma!r}")
    res = bit_density(PgModel(float(cfg.theta), sigma), Quantizer(cfg.q), policy)
    return res.d - res.d_star
