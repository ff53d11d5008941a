"""Readers and writers for exposure maps (QEM1) and bit planes (QBP1).

QEM1 is text::

    QEM1
    <width> <height>
    <height lines of width theta values separated by single spaces>

QBP1 is binary: the magic ``b"QBP1"``, then width, height and frames as
little-endian uint32, then the packed payload of :class:`BitPlaneSet`.
"""

from __future__ import annotations

import math
import os
import struct

import numpy as np

from .simulate import BitPlaneSet, ExposureMap

__all__ = [
    "FormatError",
    "parse_exposure_map",
    "read_exposure_map",
    "format_exposure_map",
    "write_exposure_map",
    "parse_bitplanes",
    "read_bitplanes",
    "write_bitplanes",
]

QEM_MAGIC = "QEM1"
QBP_MAGIC = b"QBP1"
_HEADER = struct.Struct("<4sIII")


class FormatError(ValueError):
    """Malformed QEM1/QBP1 content. ``line`` or ``field`` locates the problem."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.line = line
        self.field = field


def parse_exposure_map(text: str) -> ExposureMap:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln.rstrip("\r") for ln in lines]
    if not lines or lines[0] != QEM_MAGIC:
        raise FormatError(f"expected magic {QEM_MAGIC!r}", line=1)
    if len(lines) < 2:
        raise FormatError("missing '<width> <height>' line", line=2)
    dims = lines[1].split(" ")
    try:
        width, height = (int(v) for v in dims)
    except ValueError:
        raise FormatError(f"expected '<width> <height>', got {lines[1]!r}", line=2) from None
    if width < 1 or height < 1:
        raise FormatError("width and height must be >= 1", line=2)
    if len(lines) - 2 != height:
        raise FormatError(f"expected {height} rows, found {len(lines) - 2}", line=len(lines) + 1)

    theta = np.empty((height, width))
    for row, ln in enumerate(lines[2:]):
        lineno = row + 3
        tokens = ln.split(" ")
        if len(tokens) != width:
            raise FormatError(f"expected {width} values, found {len(tokens)}", line=lineno)
        for col, tok in enumerate(tokens):
            try:
                v = float(tok)
            except ValueError:
                raise FormatError(f"not a number: {tok!r}", line=lineno) from None
            if not math.isfinite(v) or v < 0:
                raise FormatError(f"theta must be finite and >= 0, got {tok!r}", line=lineno)
            theta[row, col] = v
    return ExposureMap(width, height, theta)


def read_exposure_map(path: str | os.PathLike) -> ExposureMap:
    with open(path, "r", encoding="ascii", newline="") as fh:
        return parse_exposure_map(fh.read())


def format_exposure_map(exposure: ExposureMap) -> str:
    rows = [" ".join(repr(float(v)) for v in row) for row in exposure.theta]
    return "\n".join([QEM_MAGIC, f"{exposure.width} {exposure.height}", *rows]) + "\n"


def write_exposure_map(path: str | os.PathLike, exposure: ExposureMap) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_exposure_map(exposure))


def parse_bitplanes(data: bytes) -> BitPlaneSet:
    if len(data) < _HEADER.size:
        raise FormatError(f"file has {len(data)} bytes, header needs {_HEADER.size}",
                          field="header")
    magic, width, height, frames = _HEADER.unpack_from(data)
    if magic != QBP_MAGIC:
        raise FormatError(f"expected {QBP_MAGIC!r}, got {magic!r}", field="magic")
    for name, value in (("width", width), ("height", height), ("frames", frames)):
        if value < 1:
            raise FormatError("must be >= 1", field=name)
    expected = frames * height * ((width + 7) // 8)
    payload = data[_HEADER.size:]
    if len(payload) != expected:
        raise FormatError(f"expected {expected} bytes for {width}x{height}x{frames}, "
                          f"got {len(payload)}", field="payload")
    bits = np.frombuffer(payload, dtype=np.uint8).copy()
    return BitPlaneSet(width, height, frames, bits)


def read_bitplanes(path: str | os.PathLike) -> BitPlaneSet:
    with open(path, "rb") as fh:
        return parse_bitplanes(fh.read())


def write_bitplanes(path: str | os.PathLike, planes: BitPlaneSet) -> None:
    header = _HEADER.pack(QBP_MAGIC, planes.width, planes.height, planes.frames)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(planes.to_bytes())
