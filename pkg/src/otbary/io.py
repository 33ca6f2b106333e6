"""PGM (P2/P5) and dense CSV readers and writers for grid data.

Image row ``r``, column ``c`` maps to grid index ``[r, c]``.  Pixel
intensity is read as raw (unnormalized) mass.
"""

from __future__ import annotations

import io as _io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import OTBaryError

MAX_MAXVAL = 65535


class FormatError(OTBaryError):
    """A file could not be parsed; the message names the file."""


@dataclass(frozen=True, eq=False)
class PgmImage:
    pixels: np.ndarray
    maxval: int
    binary: bool


def _header_tokens(data: bytes, count: int, path) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the last one.
    """
    tokens: list[bytes] = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise FormatError(f"{path}: truncated PGM header")
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def _int_token(tok: bytes, what: str, path) -> int:
    if not tok.isdigit():
        raise FormatError(f"{path}: bad PGM {what} {tok!r}")
    return int(tok)


def parse_pgm(data: bytes, path="<bytes>") -> PgmImage:
    (magic, w, h, mv), pos = _header_tokens(data, 4, path)
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a P2/P5 PGM file (magic {magic!r})")
    width = _int_token(w, "width", path)
    height = _int_token(h, "height", path)
    maxval = _int_token(mv, "maxval", path)
    if width < 1 or height < 1:
        raise FormatError(f"{path}: empty image {width}x{height}")
    if not 1 <= maxval <= MAX_MAXVAL:
        raise FormatError(f"{path}: maxval {maxval} outside [1, {MAX_MAXVAL}]")
    count = width * height
    if magic == b"P5":
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise FormatError(f"{path}: missing separator before P5 raster")
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raster = data[pos : pos + count * dtype.itemsize]
        if len(raster) < count * dtype.itemsize:
            raise FormatError(f"{path}: P5 raster truncated")
        pixels = np.frombuffer(raster, dtype=dtype).astype(np.int64)
    else:
        body = data[pos:].split()
        if len(body) < count:
            raise FormatError(f"{path}: P2 raster has {len(body)} values, expected {count}")
        try:
            pixels = np.array([int(t) for t in body[:count]], dtype=np.int64)
        except ValueError as err:
            raise FormatError(f"{path}: non-integer P2 pixel") from err
    if pixels.min() < 0 or pixels.max() > maxval:
        raise FormatError(f"{path}: pixel values outside [0, {maxval}]")
    return PgmImage(pixels.reshape(height, width), maxval, magic == b"P5")


def format_pgm(image: PgmImage) -> bytes:
    """Canonical encoding: single-space header fields, one newline each."""
    px = np.asarray(image.pixels, dtype=np.int64)
    if px.ndim != 2:
        raise ValueError("PGM pixels must be 2D")
    if not 1 <= image.maxval <= MAX_MAXVAL:
        raise ValueError(f"maxval {image.maxval} outside [1, {MAX_MAXVAL}]")
    if px.min() < 0 or px.max() > image.maxval:
        raise ValueError("pixel values outside [0, maxval]")
    h, w = px.shape
    magic = "P5" if image.binary else "P2"
    header = f"{magic}\n{w} {h}\n{image.maxval}\n".encode("ascii")
    if image.binary:
        dtype = ">u2" if image.maxval > 255 else "u1"
        return header + px.astype(dtype).tobytes()
    rows = "\n".join(" ".join(str(v) for v in row) for row in px)
    return header + rows.encode("ascii") + b"\n"


def read_pgm(path) -> PgmImage:
    try:
        data = Path(path).read_bytes()
    except OSError as err:
        raise FormatError(f"{path}: cannot read ({err.strerror})") from err
    return parse_pgm(data, path)


def write_pgm(path, image: PgmImage) -> None:
    Path(path).write_bytes(format_pgm(image))


def mass_to_pgm(mass: np.ndarray, maxval: int = 255, binary: bool = True) -> PgmImage:
    """Rescale masses so the peak maps to ``maxval``."""
    m = np.asarray(mass, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    peak = m.max()
    scaled = np.zeros(m.shape) if peak <= 0 else m / peak * maxval
    return PgmImage(np.rint(scaled).astype(np.int64), maxval, binary)


def read_csv(path) -> np.ndarray:
    """Dense comma-separated values; a single row or column reads as 1D."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise FormatError(f"{path}: cannot read ({err.strerror})") from err
    try:
        arr = np.loadtxt(_io.StringIO(text), delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as err:
        raise FormatError(f"{path}: malformed CSV ({err})") from err
    if arr.size == 0:
        raise FormatError(f"{path}: empty CSV")
    if 1 in arr.shape:
        return arr.ravel()
    return arr


def format_csv(values: np.ndarray) -> str:
    """Shortest round-trip repr per value, row-major."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in a)


def write_csv(path, values: np.ndarray) -> None:
    Path(path).write_text(format_csv(values))


def read_grid_file(path) -> np.ndarray:
    """Raw mass array from a ``.pgm`` or ``.csv`` file (chosen by content)."""
    p = Path(path)
    try:
        head = p.open("rb").read(2)
    except OSError as err:
        raise FormatError(f"{path}: cannot read ({err.strerror})") from err
    if head in (b"P2", b"P5"):
        return read_pgm(p).pixels.astype(np.float64)
    return read_csv(p)
