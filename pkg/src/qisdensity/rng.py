"""Counter-based random draws.

Every draw is a pure function of ``(master_seed, pixel, frame, slot)``: the
first three are mixed into a substream key, and ``slot`` numbers the uniforms
consumed inside that substream. No generator state is carried between draws,
so any partition of the work over workers yields identical numbers.

Slot layout within a substream:

    0, 1          Box-Muller pair for the Gaussian read noise
    2             Poisson inversion (small theta)
    2 + 2r, 3 + 2r  rejection round r of the Poisson sampler (large theta)
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp

_M64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_FRAME_MUL = np.uint64(0xD1B54A32D192ED03)
_PIXEL_MUL = np.uint64(0xC2B2AE3D27D4EB4F)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

SLOT_NORMAL = 0
SLOT_POISSON = 2
POISSON_INVERSION_MAX_THETA = 30.0
_MAX_REJECTION_ROUNDS = 64


def mix64(z):
    """SplitMix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def substream_keys(master_seed: int, pixel, frame):
    """Substream key for each (pixel, frame) pair; broadcasts like numpy."""
    seed = np.uint64(int(master_seed) & _M64)
    pixel = np.asarray(pixel, dtype=np.uint64)
    frame = np.asarray(frame, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = mix64(seed + _GOLDEN)
        k = mix64(base ^ (pixel * _PIXEL_MUL + _GOLDEN))
        return mix64(k + frame * _FRAME_MUL)


def uniforms(keys, slot: int):
    """Uniform draws in the open interval (0, 1), one per key."""
    with np.errstate(over="ignore"):
        bits = mix64(keys + np.uint64(slot + 1) * _GOLDEN)
    return ((bits >> _S11).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def normals(keys):
    """Standard normal draws by the Box-Muller transform."""
    u1 = uniforms(keys, SLOT_NORMAL)
    u2 = uniforms(keys, SLOT_NORMAL + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _inversion_cap(theta):
    """Per-mean cap on the search; the CDF is 1 to double precision well before it."""
    return (np.asarray(theta) + 40.0 * np.sqrt(theta) + 60).astype(np.int64)


def _inversion_table(theta: float) -> np.ndarray:
    """Poisson CDF at 0..cap, accumulated exactly as the sequential search does."""
    cap = int(_inversion_cap(theta))
    cdf = np.empty(cap + 1)
    p = float(np.exp(-theta))
    acc = p
    cdf[0] = acc
    for k in range(1, cap + 1):
        p *= theta / k
        acc += p
        cdf[k] = acc
    return cdf


def _poisson_inversion_loop(u, theta):
    k = np.zeros(u.shape, dtype=np.int64)
    p = np.exp(-theta) * np.ones(u.shape)
    cdf = p.copy()
    cap = _inversion_cap(theta)
    active = u > cdf
    while active.any():
        k[active] += 1
        p[active] *= theta[active] / k[active]
        cdf[active] += p[active]
        active &= (u > cdf) & (k < cap)
    return k


def _poisson_inversion(keys, theta, table_limit: int = 64):
    """Sequential-search inversion: smallest k with CDF(k) >= u.

    Batches with few distinct means use a precomputed CDF table and binary
    search; the result is identical to the sequential search.
    """
    u = uniforms(keys, SLOT_POISSON)
    levels, which = np.unique(theta, return_inverse=True)
    if levels.size > table_limit:
        return _poisson_inversion_loop(u, theta)
    out = np.empty(u.shape, dtype=np.int64)
    for i, level in enumerate(levels):
        sel = which == i if levels.size > 1 else slice(None)
        cdf = _inversion_table(float(level))
        out[sel] = np.minimum(np.searchsorted(cdf, u[sel], side="left"), cdf.size - 1)
    return out


def _poisson_ptrs(keys, lam):
    """Transformed rejection with squeeze (Hormann's PTRS) for lam >= 10."""
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)

    out = np.full(keys.shape, -1, dtype=np.int64)
    pending = np.ones(keys.shape, dtype=bool)
    for r in range(_MAX_REJECTION_ROUNDS):
        idx = np.flatnonzero(pending)
        if idx.size == 0:
            break
        kk = keys[idx]
        U = uniforms(kk, SLOT_POISSON + 2 * r) - 0.5
        V = uniforms(kk, SLOT_POISSON + 2 * r + 1)
        us = 0.5 - np.abs(U)
        li, a_, b_ = lam[idx], a[idx], b[idx]
        k = np.floor((2.0 * a_ / us + b_) * U + li + 0.43)
        quick = (us >= 0.07) & (V <= vr[idx])
        valid = (k >= 0) & ~((us < 0.013) & (V > us))
        lhs = np.log(V) + np.log(invalpha[idx]) - np.log(a_ / (us * us) + b_)
        with np.errstate(invalid="ignore"):
            rhs = -li + k * loglam[idx] - _sp.gammaln(k + 1.0)
        accept = quick | (valid & (lhs <= rhs))
        out[idx[accept]] = k[accept].astype(np.int64)
        pending[idx[accept]] = False
    if pending.any():
        # probability of reaching here is below 0.1**64
        out[pending] = np.round(lam[pending]).astype(np.int64)
    return out


def poissons(keys, theta):
    """Poisson draws, inversion for small means and PTRS above 30."""
    keys = np.asarray(keys, dtype=np.uint64)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), keys.shape)
    out = np.zeros(keys.shape, dtype=np.int64)
    small = theta <= POISSON_INVERSION_MAX_THETA
    if small.any():
        out[small] = _poisson_inversion(keys[small], theta[small])
    if (~small).any():
        out[~small] = _poisson_ptrs(keys[~small], theta[~small])
    return out
