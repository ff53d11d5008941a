"""Monte-Carlo generation of one-bit QIS bit planes.

Each bit is produced from the substream keyed by ``(master_seed, pixel, frame)``
(see :mod:`qisdensity.rng`), so the planes are a pure function of the exposure
map and the configuration, whatever the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .bitdensity import Quantizer

__all__ = [
    "CapacityError",
    "ExposureMap",
    "SimConfig",
    "BitPlaneSet",
    "Substream",
    "sample_analog",
    "draw_analog",
    "quantize",
    "simulate_planes",
    "empirical_density",
    "MAX_BITS",
]

MAX_BITS = 1 << 40
# draws per work unit; bounds peak memory of the vectorised kernels
_CHUNK_DRAWS = 1 << 21


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class ExposureMap:
    """Per-pixel quanta exposure, ``theta[row, col]``."""
    width: int
    height: int
    theta: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("exposure map must be at least 1x1")
        theta = np.asarray(self.theta, dtype=float)
        if theta.size != self.width * self.height:
            raise ValueError(
                f"exposure map has {theta.size} entries, expected {self.width * self.height}")
        if not np.all(np.isfinite(theta)) or np.any(theta < 0):
            raise ValueError("exposure map entries must be finite and >= 0")
        object.__setattr__(self, "theta", theta.reshape(self.height, self.width))

    @classmethod
    def constant(cls, width: int, height: int, theta: float) -> "ExposureMap":
        return cls(width, height, np.full((height, width), float(theta)))


@dataclass(frozen=True)
class SimConfig:
    frames: int
    sigma: float
    q: float
    master_seed: int = 0

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError("sigma must be finite and >= 0")
        if not math.isfinite(self.q):
            raise ValueError("q must be finite")


@dataclass(frozen=True)
class BitPlaneSet:
    """Packed bit planes, ``bits[frame, row, byte]``.

    Rows are padded to whole bytes with zero bits; the leftmost pixel sits in
    the most significant bit.
    """
    width: int
    height: int
    frames: int
    bits: np.ndarray

    def __post_init__(self):
        if min(self.width, self.height, self.frames) < 1:
            raise ValueError("width, height and frames must all be >= 1")
        bits = np.asarray(self.bits, dtype=np.uint8)
        expected = self.frames * self.height * self.row_bytes
        if bits.size != expected:
            raise ValueError(f"payload has {bits.size} bytes, expected {expected}")
        object.__setattr__(self, "bits", bits.reshape(self.frames, self.height, self.row_bytes))

    @property
    def row_bytes(self) -> int:
        return (self.width + 7) // 8

    def to_bytes(self) -> bytes:
        return self.bits.tobytes()

    def unpack(self) -> np.ndarray:
        """Boolean array ``[frame, row, col]`` without padding bits."""
        return np.unpackbits(self.bits, axis=-1, count=self.width).astype(bool)

    @classmethod
    def from_bool(cls, planes) -> "BitPlaneSet":
        planes = np.asarray(planes, dtype=bool)
        frames, height, width = planes.shape
        return cls(width, height, frames, np.packbits(planes, axis=-1))


@dataclass(frozen=True)
class Substream:
    """Deterministic substream for one (pixel, frame) cell."""
    master_seed: int
    pixel: int = 0
    frame: int = 0

    @property
    def key(self):
        return rng.substream_keys(self.master_seed, self.pixel, self.frame)


def _analog(keys, theta, sigma: float):
    x = rng.poissons(keys, theta).astype(float)
    if sigma > 0:
        x += sigma * rng.normals(keys)
    return x


def sample_analog(theta: float, sigma: float, stream: Substream) -> float:
    """One draw of ``Poisson(theta) + N(0, sigma^2)``."""
    if theta < 0 or sigma < 0:
        raise ValueError("theta and sigma must be >= 0")
    return float(_analog(np.atleast_1d(stream.key), theta, sigma)[0])


def draw_analog(theta: float, sigma: float, size: int, master_seed: int = 0,
                frame: int = 0) -> np.ndarray:
    """``size`` independent draws, from substreams ``(master_seed, 0..size-1, frame)``."""
    if theta < 0 or sigma < 0:
        raise ValueError("theta and sigma must be >= 0")
    keys = rng.substream_keys(master_seed, np.arange(size, dtype=np.uint64), frame)
    return _analog(keys, theta, sigma)


def quantize(x, quantizer: Quantizer):
    """``1`` where ``x >= q``, else ``0``."""
    y = (np.asarray(x) >= quantizer.q).astype(np.uint8)
    return int(y) if y.ndim == 0 else y


def _simulate_block(theta_rows, row0: int, f0: int, f1: int, width: int,
                    cfg: SimConfig) -> np.ndarray:
    rows = theta_rows.shape[0]
    pixel = (row0 + np.arange(rows, dtype=np.uint64))[:, None] * np.uint64(width) \
        + np.arange(width, dtype=np.uint64)[None, :]
    frame = np.arange(f0, f1, dtype=np.uint64)[:, None, None]
    keys = rng.substream_keys(cfg.master_seed, pixel[None, :, :], frame)
    x = _analog(keys, np.broadcast_to(theta_rows, keys.shape), cfg.sigma)
    return np.packbits(x >= cfg.q, axis=-1)


def simulate_planes(exposure: ExposureMap, cfg: SimConfig, workers: int = 1,
                    block_draws: int = _CHUNK_DRAWS) -> BitPlaneSet:
    """Draw ``cfg.frames`` bit planes for the exposure map.

    ``workers`` and ``block_draws`` only change the schedule, never the output.
    """
    width, height = exposure.width, exposure.height
    total = cfg.frames * width * height
    if total > MAX_BITS:
        raise CapacityError(f"{total} bits exceeds the 2**40 capacity limit")
    rows_per_block = max(1, block_draws // (cfg.frames * width))
    frames_per_block = max(1, block_draws // (rows_per_block * width))
    blocks = [(r0, f0)
              for r0 in range(0, height, rows_per_block)
              for f0 in range(0, cfg.frames, frames_per_block)]
    out = np.zeros((cfg.frames, height, (width + 7) // 8), dtype=np.uint8)

    def work(block):
        r0, f0 = block
        r1 = min(r0 + rows_per_block, height)
        f1 = min(f0 + frames_per_block, cfg.frames)
        out[f0:f1, r0:r1, :] = _simulate_block(exposure.theta[r0:r1], r0, f0, f1, width, cfg)

    if workers <= 1:
        for block in blocks:
            work(block)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, blocks))
    return BitPlaneSet(width, height, cfg.frames, out)


def empirical_density(planes: BitPlaneSet) -> np.ndarray:
    """Fraction of ones per pixel over all frames, shape ``(height, width)``."""
    counts = np.zeros((planes.height, planes.width), dtype=np.int64)
    step = max(1, _CHUNK_DRAWS // (planes.height * planes.width))
    for f0 in range(0, planes.frames, step):
        chunk = np.unpackbits(planes.bits[f0:f0 + step], axis=-1, count=planes.width)
        counts += chunk.sum(axis=0, dtype=np.int64)
    return counts / planes.frames
