"""Netpbm graymap (P2 ASCII / P5 binary) I/O and CSV emission.

Intensities are mapped to ``[0, 1]`` by dividing by ``maxval``; writing clamps
to ``[0, 1]`` and quantizes with round-half-up.  Samples with ``maxval > 255``
are 16-bit big-endian in P5, per the Netpbm format.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PgmError",
    "PgmHeaderError",
    "PgmTruncatedError",
    "PgmMagicError",
    "PgmHeader",
    "read_pgm",
    "write_pgm",
    "write_kernel_pgm",
    "write_csv",
    "write_kernel_csv",
    "read_kernel_csv",
    "format_float",
]


class PgmError(ValueError):
    code = 1


class PgmMagicError(PgmError):
    code = 10


class PgmHeaderError(PgmError):
    code = 11


class PgmTruncatedError(PgmError):
    code = 12


@dataclass(frozen=True)
class PgmHeader:
    magic: str
    width: int
    height: int
    maxval: int
    offset: int  # byte offset of the first sample


def _tokens(data: bytes, start: int, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    pos = start
    n = len(data)
    while len(out) < count:
        while pos < n and (data[pos : pos + 1].isspace() or data[pos : pos + 1] == b"#"):
            if data[pos : pos + 1] == b"#":
                while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        begin = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if begin == pos:
            raise PgmHeaderError("malformed header: unexpected end of data")
        out.append(data[begin:pos])
    return out, pos


def parse_header(data: bytes) -> PgmHeader:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmMagicError(f"unsupported magic {magic!r}; expected P2 or P5")
    toks, pos = _tokens(data, 2, 3)
    try:
        width, height, maxval = (int(t) for t in toks)
    except ValueError:
        raise PgmHeaderError(f"malformed header: non-integer field in {toks!r}") from None
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise PgmHeaderError(f"malformed header: width={width} height={height} maxval={maxval}")
    if magic == b"P5":
        # exactly one whitespace byte separates header from raster
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise PgmHeaderError("malformed header: missing separator before raster")
        pos += 1
    return PgmHeader(magic.decode(), width, height, maxval, pos)


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    hdr = parse_header(data)
    n = hdr.width * hdr.height
    if hdr.magic == "P5":
        dtype = np.dtype(">u2") if hdr.maxval > 255 else np.dtype("u1")
        need = n * dtype.itemsize
        raw = data[hdr.offset : hdr.offset + need]
        if len(raw) < need:
            raise PgmTruncatedError(f"truncated payload: {len(raw)} of {need} bytes")
        vals = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    else:
        words = data[hdr.offset :].split()
        if len(words) < n:
            raise PgmTruncatedError(f"truncated payload: {len(words)} of {n} samples")
        try:
            vals = np.array([int(w) for w in words[:n]], dtype=np.float64)
        except ValueError:
            raise PgmHeaderError("malformed raster: non-integer sample") from None
    if vals.max(initial=0) > hdr.maxval:
        raise PgmHeaderError("malformed raster: sample exceeds maxval")
    return (vals / hdr.maxval).reshape(hdr.height, hdr.width)


def quantize(img, maxval: int) -> np.ndarray:
    a = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(a * maxval + 0.5).astype(np.int64)


def write_pgm(img, path, maxval: int = 255) -> None:
    """Write a binary P5 graymap."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or not np.all(np.isfinite(a)):
        raise ValueError("write_pgm needs a finite 2D image")
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval must lie in [1, 65535], got {maxval}")
    q = quantize(a, maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(q.astype(dtype).tobytes())


def write_kernel_pgm(k, path, maxval: int = 255) -> None:
    """Write a kernel as a graymap scaled so its peak maps to ``maxval``."""
    k = np.asarray(k, dtype=np.float64)
    peak = k.max()
    write_pgm(k / peak if peak > 0 else k, path, maxval)


def format_float(v: float) -> str:
    return repr(float(v))


def write_csv(path, header, rows) -> None:
    """CSV with a header row, Unix line endings and round-trippable floats."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_kernel_csv(k, path) -> None:
    """Raw kernel values, one row per kernel row, no header."""
    k = np.asarray(k, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in k:
            w.writerow([format_float(v) for v in row])


def read_kernel_csv(path) -> np.ndarray:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return np.loadtxt(path, delimiter=",", ndmin=2)
