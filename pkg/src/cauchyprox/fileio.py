"""PGM/PNG image I/O and CSV writing with atomic replacement."""

from __future__ import annotations

import csv
import io
import os
import re
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["read_pgm", "write_pgm", "pgm_bytes", "read_image", "csv_bytes", "fmt", "atomic_write"]

_TOKEN = re.compile(rb"(?:\s*(?:#[^\n]*\n)?)*\s*(\S+)")


def read_pgm(path) -> np.ndarray:
    """Read a binary 8-bit PGM (P5). Comments in the header are skipped."""
    data = Path(path).read_bytes()
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ValueError(f"{path}: truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    if fields[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {fields[0]!r})")
    try:
        cols, rows, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise ValueError(f"{path}: malformed PGM header") from None
    if not 0 < maxval < 256:
        raise ValueError(f"{path}: only 8-bit PGM is supported (maxval {maxval})")
    # exactly one whitespace byte separates the header from the raster
    pos += 1
    if len(data) - pos < rows * cols:
        raise ValueError(f"{path}: truncated PGM raster")
    raster = np.frombuffer(data, dtype=np.uint8, count=rows * cols, offset=pos)
    return raster.reshape(rows, cols).astype(float)


def pgm_bytes(img) -> bytes:
    """Encode an image as 8-bit P5, rounding and clipping to ``[0, 255]``."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2-D image")
    px = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return b"P5\n%d %d\n255\n" % (px.shape[1], px.shape[0]) + px.tobytes()


def write_pgm(path, img) -> None:
    atomic_write(path, pgm_bytes(img))


def read_image(path) -> np.ndarray:
    """PGM directly; PNG and other formats through Pillow if it is installed."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    try:
        from PIL import Image
    except ImportError:
        raise ValueError(f"{path}: reading {path.suffix} needs Pillow (pip install pillow)") from None
    with Image.open(path) as im:
        if im.mode not in ("L", "P", "1"):
            raise ValueError(f"{path}: expected an 8-bit grayscale image, got mode {im.mode}")
        return np.asarray(im.convert("L"), dtype=float)


def fmt(v) -> str:
    """Shortest round-trip text for numbers; ``repr`` is exact for floats."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue().encode()


def atomic_write(path, data: bytes) -> None:
    """Write to a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
