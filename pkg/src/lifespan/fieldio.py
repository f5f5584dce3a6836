"""LSL1 binary field format.

Layout (little-endian): magic ``LSL1``; three u64 grid sizes; f64 box length;
u64 component count; then (re, im) f64 pairs over ascending wavenumbers
(fftshift order), components outermost.
"""

from __future__ import annotations

import struct

import numpy as np

from .spectral import Grid, SpectralField, SpectralVectorField

MAGIC = b"LSL1"
_HEADER = struct.Struct("<4sQQQdQ")


class FormatError(ValueError):
    pass


def dumps(a) -> bytes:
    grid = a.grid
    coeffs = a.coeffs if isinstance(a, SpectralVectorField) else a.coeffs[None]
    body = np.fft.fftshift(coeffs, axes=(-3, -2, -1)).astype("<c16", copy=False)
    head = _HEADER.pack(MAGIC, grid.n, grid.n, grid.n, float(grid.box_len), coeffs.shape[0])
    return head + body.tobytes()


def loads(buf: bytes):
    if len(buf) < _HEADER.size:
        raise FormatError("truncated header")
    magic, n1, n2, n3, box, ncomp = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if not (n1 == n2 == n3):
        raise FormatError("only cubic grids are supported")
    if ncomp not in (1, 3):
        raise FormatError(f"component count must be 1 or 3, got {ncomp}")
    count = ncomp * n1 * n2 * n3
    body = buf[_HEADER.size:]
    if len(body) != 16 * count:
        raise FormatError(f"payload holds {len(body)} bytes, expected {16 * count}")
    coeffs = np.frombuffer(body, dtype="<c16").reshape(ncomp, n1, n2, n3)
    coeffs = np.fft.ifftshift(coeffs, axes=(-3, -2, -1)).astype(complex)
    grid = Grid(int(n1), box_len=box)
    if ncomp == 1:
        return SpectralField(grid, coeffs[0])
    return SpectralVectorField(grid, coeffs)


def write_field(path, a):
    with open(path, "wb") as fh:
        fh.write(dumps(a))


def read_field(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
