"""Exposure estimation by inverting the bit density."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitdensity import (
    DEFAULT_POLICY,
    Quantizer,
    SeriesPolicy,
    gaussian_cdf_terms,
    poisson_window,
)
from .simulate import BitPlaneSet, empirical_density

__all__ = [
    "BracketingError",
    "SaturationError",
    "EstimateResult",
    "MapEstimate",
    "invert_ideal",
    "invert_density",
    "density_slope",
    "estimate_map",
]

THETA_CAP = 1e4
MAX_ITER = 200
D_TOL = 1e-12


class BracketingError(ValueError):
    """The observed density lies outside what any exposure can produce."""


class SaturationError(BracketingError):
    """Every frame reported 1; no finite exposure matches."""


@dataclass(frozen=True)
class EstimateResult:
    theta_hat: float
    iterations: int
    converged: bool


def invert_ideal(d: float, quantizer: Quantizer = Quantizer(0.5)) -> float:
    """Zero read-noise inverse, ``-log(1 - d)``, for ``0 < q < 1``."""
    if not 0.0 < quantizer.q < 1.0:
        raise ValueError("invert_ideal needs 0 < q < 1")
    if d >= 1.0:
        raise SaturationError("density 1: the jots are saturated")
    if not d >= 0.0:
        raise ValueError(f"density must lie in [0, 1), got {d!r}")
    return -math.log1p(-d)


def _density(theta: float, q: float, sigma: float, policy: SeriesPolicy) -> float:
    k, pmf = poisson_window(theta, policy)
    return float(np.dot(pmf, gaussian_cdf_terms(k, q, sigma)))


def density_slope(theta: float, quantizer: Quantizer, sigma: float,
                  policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """dD/dtheta, using dP(k)/dtheta = P(k-1) - P(k)."""
    k, pmf = poisson_window(theta, policy)
    g = gaussian_cdf_terms(np.append(k, k[-1] + 1), quantizer.q, sigma)
    return float(np.dot(pmf, g[1:] - g[:-1]))


def invert_density(d: float, quantizer: Quantizer, sigma: float,
                   policy: SeriesPolicy = DEFAULT_POLICY) -> EstimateResult:
    """Solve ``D(theta) = d`` for theta by bisection.

    The upper bracket starts at 1 and doubles until ``D`` exceeds ``d``,
    up to ``theta = 1e4``. Bisection stops once ``|D(theta) - d| <= 1e-12``
    or after 200 halvings.
    """
    if not sigma >= 0:
        raise ValueError(f"sigma must be >= 0, got {sigma!r}")
    if d >= 1.0:
        raise SaturationError("density 1: the jots are saturated")
    q = quantizer.q
    floor = _density(0.0, q, sigma, policy)
    if not d > floor:
        raise BracketingError(f"density {d!r} is at or below D(theta=0) = {floor!r}")

    lo, hi = 0.0, 1.0
    while _density(hi, q, sigma, policy) < d:
        lo, hi = hi, 2.0 * hi
        if hi > THETA_CAP:
            raise BracketingError(f"density {d!r} not reached for theta <= {THETA_CAP:g}")

    mid, err = hi, math.inf
    for it in range(1, MAX_ITER + 1):
        mid = 0.5 * (lo + hi)
        dm = _density(mid, q, sigma, policy)
        err = abs(dm - d)
        if err <= D_TOL:
            return EstimateResult(mid, it, True)
        if dm < d:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * np.finfo(float).eps * hi:
            break
    return EstimateResult(mid, it, err <= D_TOL)


@dataclass(frozen=True)
class MapEstimate:
    """Per-pixel estimates. Flagged pixels carry NaN in ``theta_hat``."""
    theta_hat: np.ndarray    # (height, width)
    density: np.ndarray      # empirical bit density
    stderr: np.ndarray       # binomial standard error pushed through dtheta/dD
    saturated: np.ndarray    # density == 1
    failed: np.ndarray       # solver error or non-convergence

    @property
    def flagged(self) -> np.ndarray:
        return self.saturated | self.failed


def estimate_map(planes: BitPlaneSet, quantizer: Quantizer, sigma: float,
                 policy: SeriesPolicy = DEFAULT_POLICY) -> MapEstimate:
    """Invert the empirical density of every pixel.

    Pixels at or below the zero-exposure density ``D(0)`` get ``theta_hat = 0``,
    the boundary of the admissible range. Saturated pixels are flagged.
    """
    density = empirical_density(planes)
    shape = density.shape
    theta_hat = np.full(shape, np.nan)
    stderr = np.full(shape, np.nan)
    saturated = density >= 1.0
    failed = np.zeros(shape, dtype=bool)
    floor = _density(0.0, quantizer.q, sigma, policy)

    for value in np.unique(density[~saturated]):
        where = density == value
        if value <= floor:
            theta_hat[where] = 0.0
            continue
        try:
            res = invert_density(float(value), quantizer, sigma, policy)
        except BracketingError:
            failed[where] = True
            continue
        if not res.converged:
            failed[where] = True
            continue
        theta_hat[where] = res.theta_hat
        slope = density_slope(res.theta_hat, quantizer, sigma, policy)
        stderr[where] = math.sqrt(value * (1.0 - value) / planes.frames) / slope
    return MapEstimate(theta_hat, density, stderr, saturated, failed)
