"""Independent reference computations used as test oracles.

Nothing here imports the package under test.
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate, stats

mp.mp.dps = 40


def erfc_quad(x: float) -> float:
    """erfc(x) = 2/sqrt(pi) * integral_x^inf exp(-t^2) dt by adaptive quadrature."""
    val, _ = integrate.quad(lambda t: math.exp(-t * t), x, math.inf, epsabs=0, epsrel=1e-13)
    return 2.0 / math.sqrt(math.pi) * val


def phi_quad(x: float) -> float:
    if x <= 0:
        val, _ = integrate.quad(lambda t: math.exp(-0.5 * t * t), -math.inf, x,
                                epsabs=0, epsrel=1e-13)
        return val / math.sqrt(2 * math.pi)
    return 1.0 - phi_quad(-x)


def bisect(f, lo, hi, target, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def density_mp(theta, q, sigma, terms=None):
    """Bit density summed in 40-digit arithmetic."""
    theta, q, sigma = mp.mpf(theta), mp.mpf(q), mp.mpf(sigma)
    if terms is None:
        terms = int(theta + 20 * mp.sqrt(theta) + 40)
    total = mp.mpf(0)
    for k in range(terms):
        pk = mp.e ** (-theta) * theta ** k / mp.factorial(k)
        total += pk * mp.ncdf((k - q) / sigma)
    return total


def ideal_mp(theta, q):
    theta = mp.mpf(theta)
    first = max(0, math.ceil(q))
    below = sum(mp.e ** (-theta) * theta ** k / mp.factorial(k) for k in range(first))
    return 1 - below


def density_scipy(theta, q, sigma, terms=400):
    k = np.arange(terms)
    return float(np.sum(stats.poisson.pmf(k, theta) * stats.norm.cdf((k - q) / sigma)))


def pg_pdf_scipy(x, theta, sigma, terms=50):
    k = np.arange(terms)
    return float(np.sum(stats.poisson.pmf(k, theta) * stats.norm.pdf(x, loc=k, scale=sigma)))
