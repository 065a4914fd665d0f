"""Matrix and frame I/O.

Formats
-------
csv
    Comma-separated rows. A first line that does not parse as numbers is
    treated as a header and skipped. Values are written with 17
    significant digits.
f64le
    ``b"GDMX"``, then rows and cols as little-endian uint64, then the
    entries in row-major order as little-endian float64.
PGM
    Binary greymap (``P5``) frames with ``maxval <= 255``.
"""

from __future__ import annotations

import csv
import io as _io
import os
import struct
from pathlib import Path

import numpy as np

from .exceptions import FormatError

__all__ = [
    "MAGIC",
    "infer_format",
    "load_frames",
    "load_matrix",
    "read_pgm",
    "save_matrix",
    "write_pgm",
]

MAGIC = b"GDMX"
_HEADER = struct.Struct("<4sQQ")
FORMATS = ("csv", "f64le")


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    return "csv" if suffix in (".csv", ".txt") else "f64le"


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _parse_csv(text: str, name: str) -> np.ndarray:
    rows = []
    width = None
    lines = text.splitlines()
    for lineno, fields in enumerate(csv.reader(lines), start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        try:
            row = [float(f) for f in fields]
        except ValueError:
            if lineno == 1 and not rows:
                continue
            raise FormatError(f"{name}: line {lineno}: non-numeric field") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise FormatError(f"{name}: line {lineno}: expected {width} fields, got {len(row)}")
        if not all(np.isfinite(row)):
            raise FormatError(f"{name}: line {lineno}: NaN or Inf entry")
        rows.append(row)
    if not rows:
        raise FormatError(f"{name}: no numeric rows")
    return np.array(rows, dtype=np.float64)


def _parse_f64le(data: bytes, name: str) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise FormatError(f"{name}: byte 0: truncated header ({len(data)} bytes)")
    magic, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{name}: byte 0: bad magic {magic!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise FormatError(
            f"{name}: byte {min(len(data), expected)}: expected {expected} bytes, got {len(data)}")
    arr = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise FormatError(f"{name}: byte {_HEADER.size + 8 * int(bad[0])}: NaN or Inf entry")
    return arr.astype(np.float64)


def load_matrix(path, fmt: str | None = None) -> np.ndarray:
    """Read a matrix in ``csv`` or ``f64le`` format (inferred from the suffix)."""
    fmt = fmt or infer_format(path)
    name = str(path)
    if fmt == "csv":
        return _parse_csv(Path(path).read_text(), name)
    if fmt == "f64le":
        return _parse_f64le(Path(path).read_bytes(), name)
    raise FormatError(f"unknown matrix format {fmt!r}")


def save_matrix(path, a, fmt: str | None = None) -> None:
    """Write ``a`` atomically (temporary file plus rename)."""
    fmt = fmt or infer_format(path)
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise FormatError(f"expected a 2-D matrix, got shape {a.shape}")
    if fmt == "csv":
        buf = _io.StringIO()
        for row in a:
            buf.write(",".join(format(v, ".17g") for v in row))
            buf.write("\n")
        _atomic_write(path, buf.getvalue().encode())
    elif fmt == "f64le":
        header = _HEADER.pack(MAGIC, a.shape[0], a.shape[1])
        _atomic_write(path, header + a.astype("<f8").tobytes(order="C"))
    else:
        raise FormatError(f"unknown matrix format {fmt!r}")


def _pgm_tokens(data: bytes, count: int, name: str):
    # Header tokens of a netpbm file, skipping comments; returns (tokens, offset).
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise FormatError(f"{name}: truncated PGM header")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Binary PGM as a ``uint8`` array of shape ``(height, width)``."""
    name = str(path)
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data, 4, name)
    if tokens[0] != b"P5":
        raise FormatError(f"{name}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"{name}: malformed PGM header") from None
    if not 0 < maxval <= 255:
        raise FormatError(f"{name}: maxval {maxval} not supported")
    pixels = data[offset:offset + width * height]
    if len(pixels) != width * height:
        raise FormatError(f"{name}: expected {width * height} pixels, got {len(pixels)}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)


def write_pgm(path, frame) -> None:
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise FormatError("frame must be 2-D")
    img = np.clip(np.round(frame), 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    _atomic_write(path, header + img.tobytes())


def load_frames(directory, transpose: bool = False) -> tuple[np.ndarray, tuple[int, int]]:
    """Stack the ``*.pgm`` files of ``directory`` (sorted by name) as rows.

    Pixel ``(i, j)`` of a ``width``-wide frame lands in column ``j + i*width``;
    values are divided by 255. Returns the matrix and the frame shape
    ``(height, width)``. ``transpose=True`` returns frames as columns.
    """
    files = sorted(Path(directory).glob("*.pgm"))
    if not files:
        raise FormatError(f"{directory}: no .pgm files")
    shape = None
    rows = []
    for f in files:
        img = read_pgm(f)
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            raise FormatError(f"{f}: frame shape {img.shape} differs from {shape}")
        rows.append(img.reshape(-1).astype(np.float64) / 255.0)
    x = np.vstack(rows)
    return (x.T.copy() if transpose else x), shape
