"""Scalar special functions used throughout the package.

Every function accepts a float or an array and returns the same shape.
Domain violations raise ``ValueError``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

__all__ = [
    "erfc",
    "phi_cdf",
    "phi_sf",
    "phi_pdf",
    "phi_inv",
    "poisson_logpmf",
    "poisson_pmf",
    "poisson_gaussian_approx",
]

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Rational approximation of the normal quantile (relative error ~1.15e-9),
# used only as the starting point for Newton polishing.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _unwrap(x, out):
    return float(out) if np.ndim(x) == 0 else out


def _reject_nan(x, name="x"):
    if np.any(np.isnan(x)):
        raise ValueError(f"{name} must not be NaN")


def erfc(x):
    """Complementary error function, 1 - erf(x)."""
    x = np.asarray(x, dtype=float)
    _reject_nan(x)
    return _unwrap(x, _sp.erfc(x))


def phi_cdf(x):
    """Standard normal CDF. ``+inf`` maps to 1 and ``-inf`` to 0."""
    x = np.asarray(x, dtype=float)
    _reject_nan(x)
    # erfc of a positive argument keeps full relative accuracy in the lower tail
    return _unwrap(x, 0.5 * _sp.erfc(-x / SQRT2))


def phi_sf(x):
    """Standard normal survival function 1 - Phi(x), accurate in the upper tail."""
    x = np.asarray(x, dtype=float)
    _reject_nan(x)
    return _unwrap(x, 0.5 * _sp.erfc(x / SQRT2))


def phi_pdf(x):
    x = np.asarray(x, dtype=float)
    return _unwrap(x, INV_SQRT_2PI * np.exp(-0.5 * x * x))


def _quantile_guess(p: float) -> float:
    """Rational initial guess for the lower half, 0 < p <= 0.5."""
    if p < _P_LOW:
        t = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]
        den = (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        return num / den
    r = p - 0.5
    s = r * r
    num = (((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]) * r
    den = ((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0
    return num / den


def _phi_inv_scalar(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"phi_inv requires 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        # 1 - p is exact for p in [0.5, 1); the lower tail keeps relative accuracy
        return -_phi_inv_scalar(1.0 - p)
    x = _quantile_guess(p)
    for _ in range(2):
        # Newton step with the Gaussian density as derivative of the CDF
        cdf = 0.5 * math.erfc(-x / SQRT2)
        x -= (cdf - p) / (INV_SQRT_2PI * math.exp(-0.5 * x * x))
    return x


def phi_inv(p):
    """Standard normal quantile, the inverse of :func:`phi_cdf` on (0, 1)."""
    arr = np.asarray(p, dtype=float)
    _reject_nan(arr, "p")
    if arr.ndim == 0:
        return _phi_inv_scalar(float(arr))
    return np.array([_phi_inv_scalar(float(v)) for v in arr.ravel()]).reshape(arr.shape)


def poisson_logpmf(theta, k):
    """Log of the Poisson pmf, ``k log(theta) - theta - log(k!)``."""
    theta = np.asarray(theta, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(np.isnan(theta)) or np.any(np.isnan(k)):
        raise ValueError("theta and k must not be NaN")
    if np.any(theta < 0):
        raise ValueError("theta must be >= 0")
    if np.any(k < 0):
        raise ValueError("k must be >= 0")
    if np.any(k != np.floor(k)):
        raise ValueError("k must be an integer")
    # xlogy gives 0 * log(0) = 0, so theta = 0 puts all mass at k = 0
    out = _sp.xlogy(k, theta) - theta - _sp.gammaln(k + 1.0)
    return float(out) if out.ndim == 0 else out


def poisson_pmf(theta, k):
    """Poisson probability of ``k`` counts at mean ``theta``, via log space."""
    out = np.exp(poisson_logpmf(theta, k))
    return float(out) if np.ndim(out) == 0 else out


def poisson_gaussian_approx(theta, k):
    """Normal density with mean and variance ``theta``, evaluated at ``k``.

    This is the large-``theta`` stand-in for the Poisson pmf.
    """
    theta = np.asarray(theta, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(np.isnan(theta)) or np.any(theta <= 0):
        raise ValueError("theta must be > 0 for the Gaussian approximation")
    out = np.exp(-((k - theta) ** 2) / (2.0 * theta)) / np.sqrt(2.0 * np.pi * theta)
    return float(out) if out.ndim == 0 else out
