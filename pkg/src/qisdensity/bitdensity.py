"""Bit density of one-bit Poisson-Gaussian measurements.

The analog readout is ``X = Poisson(theta) + N(0, sigma^2)`` and the jot reports
``Y = 1`` when ``X >= q``. The bit density is ``D = P(Y = 1)``, evaluated as

    D = sum_k P_theta(k) * G_sigma(k),    G_sigma(k) = Phi((k - q) / sigma),

where ``P_theta`` is the Poisson pmf. Residues are always reported as
``D* - D`` where ``D*`` is the zero read-noise density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .special import INV_SQRT_2PI, phi_cdf, phi_sf, poisson_pmf

__all__ = [
    "PgModel",
    "Quantizer",
    "SeriesPolicy",
    "DensityResult",
    "DEFAULT_POLICY",
    "series_length",
    "poisson_window",
    "gaussian_cdf_terms",
    "gaussian_sf_terms",
    "pg_pdf",
    "bit_density",
    "ideal_density",
    "residue_direct",
    "residue_k2",
]


@dataclass(frozen=True)
class PgModel:
    """Poisson-Gaussian observation model parameters."""
    theta: float   # quanta exposure, mean photoelectrons per exposure
    sigma: float   # read noise standard deviation, electrons

    def __post_init__(self):
        for name in ("theta", "sigma"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")


@dataclass(frozen=True)
class Quantizer:
    """One-bit comparator. A reading exactly at ``q`` yields 1."""
    q: float

    def __post_init__(self):
        if not math.isfinite(self.q):
            raise ValueError(f"threshold q must be finite, got {self.q!r}")


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation policy for the infinite Poisson sums."""
    tail_mass: float = 1e-16
    k_max_cap: int = 10**6

    def __post_init__(self):
        if not 0.0 < self.tail_mass < 1e-6:
            raise ValueError(f"tail_mass must lie in (0, 1e-6), got {self.tail_mass!r}")
        if self.k_max_cap < 50:
            raise ValueError(f"k_max_cap must be >= 50, got {self.k_max_cap!r}")


DEFAULT_POLICY = SeriesPolicy()


@dataclass(frozen=True)
class DensityResult:
    d: float         # bit density D
    d_star: float    # ideal (sigma = 0) density D*
    residue: float   # d_star - d, as stored
    k_used: int      # number of series terms summed


def series_length(theta: float, policy: SeriesPolicy = DEFAULT_POLICY) -> int:
    """Largest index ``K`` to sum up to (inclusive).

    ``K`` is at least ``theta + 10 sqrt(theta) + 10`` and is grown until the
    Poisson mass above ``K`` drops below ``policy.tail_mass``. Because every
    Gaussian weight is at most 1, that mass bounds the truncation error.
    """
    k = math.ceil(theta + 10.0 * math.sqrt(theta) + 10.0)
    step = math.ceil(math.sqrt(theta)) + 10
    k = min(k, policy.k_max_cap)
    while k < policy.k_max_cap and _sp.pdtrc(k, theta) >= policy.tail_mass:
        k = min(k + step, policy.k_max_cap)
    return k


def poisson_window(theta: float, policy: SeriesPolicy = DEFAULT_POLICY):
    """Return ``(k, pmf)`` arrays over the truncation window ``0..K``."""
    k = np.arange(series_length(theta, policy) + 1, dtype=float)
    return k, poisson_pmf(theta, k)


def gaussian_cdf_terms(k, q: float, sigma: float):
    """``G_sigma(k) = Phi((k - q) / sigma)``; at ``sigma = 0`` the comparator step."""
    k = np.asarray(k, dtype=float)
    if sigma == 0:
        return (k >= q).astype(float)
    # a tiny sigma may overflow the ratio to +-inf, which is the right limit
    with np.errstate(over="ignore"):
        return phi_cdf((k - q) / sigma)


def gaussian_sf_terms(k, q: float, sigma: float):
    """``1 - G_sigma(k)`` computed without cancellation."""
    k = np.asarray(k, dtype=float)
    if sigma == 0:
        return (k < q).astype(float)
    with np.errstate(over="ignore"):
        return phi_sf((k - q) / sigma)


def pg_pdf(x, model: PgModel, policy: SeriesPolicy = DEFAULT_POLICY):
    """Density of the analog reading ``X`` at ``x``."""
    if model.sigma == 0:
        raise ValueError("pg_pdf needs sigma > 0; at sigma = 0 X is discrete, use poisson_pmf")
    k, pmf = poisson_window(model.theta, policy)
    x = np.asarray(x, dtype=float)
    z = (x[..., None] - k) / model.sigma
    out = (pmf * np.exp(-0.5 * z * z)).sum(axis=-1) * (INV_SQRT_2PI / model.sigma)
    return float(out) if out.ndim == 0 else out


def ideal_density(theta: float, quantizer: Quantizer) -> float:
    """Zero read-noise density: Poisson mass at or above ``ceil(q)``."""
    if not math.isfinite(theta) or theta < 0:
        raise ValueError(f"theta must be finite and >= 0, got {theta!r}")
    q = quantizer.q
    if 0 < q < 1:
        return -math.expm1(-theta)
    first = math.ceil(q)
    if first <= 0:
        return 1.0
    if theta == 0:
        return 0.0
    k, pmf = poisson_window(theta)
    return float(pmf[k >= first].sum())


def bit_density(model: PgModel, quantizer: Quantizer,
                policy: SeriesPolicy = DEFAULT_POLICY) -> DensityResult:
    """Bit density ``D`` together with ``D*`` and the residue ``D* - D``."""
    k, pmf = poisson_window(model.theta, policy)
    d = float(np.dot(pmf, gaussian_cdf_terms(k, quantizer.q, model.sigma)))
    d = min(max(d, 0.0), 1.0)
    d_star = ideal_density(model.theta, quantizer)
    return DensityResult(d=d, d_star=d_star, residue=d_star - d, k_used=k.size)


def residue_direct(model: PgModel, quantizer: Quantizer,
                   policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """``D* - D`` summed term by term.

    Indices at or above the threshold contribute the mass they lose,
    ``P(k) (1 - G(k))``; indices below it subtract the mass they gain,
    ``P(k) G(k)``. For ``0 < q < 1`` this is the familiar
    ``sum_{k>=1} P(k)(1 - G(k)) - P(0) G(0)``.
    """
    k, pmf = poisson_window(model.theta, policy)
    above = k >= quantizer.q
    lost = np.dot(pmf[above], gaussian_sf_terms(k[above], quantizer.q, model.sigma))
    gained = np.dot(pmf[~above], gaussian_cdf_terms(k[~above], quantizer.q, model.sigma))
    return float(lost - gained)


def residue_k2(model: PgModel, quantizer: Quantizer) -> float:
    """Residue from the ``k = 2`` term alone: ``P(2) (1 - G(2))``.

    Only meaningful at ``theta = 1, q = 0.5``, where the ``k = 0`` and ``k = 1``
    terms cancel exactly. Other parameters raise ``ValueError``.
    """
    if model.theta != 1.0 or quantizer.q != 0.5:
        raise ValueError("residue_k2 holds only for theta = 1 and q = 0.5")
    return poisson_pmf(1.0, 2) * float(gaussian_sf_terms(2.0, 0.5, model.sigma))
