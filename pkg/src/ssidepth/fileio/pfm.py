"""Portable float map (PFM) reader and writer.

Header: "Pf" (one channel) or "PF" (three channels), a "<width> <height>" line,
and a scale line whose sign encodes byte order (negative = little-endian).
Samples follow as 32-bit floats, rows stored bottom-up.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import BinaryIO, Optional

import numpy as np

from ..errors import InvalidInputError
from ..model.grids_model import NormalGrid, ScalarGrid, ValidMask

log = logging.getLogger(__name__)


def _read_line(f: BinaryIO) -> str:
    buff = b""
    while True:
        c = f.read(1)
        if not c:
            raise InvalidInputError("unexpected end of PFM header")
        if c == b"\n":
            return buff.decode("ascii").strip()
        buff += c


def read_pfm(path: str | Path) -> np.ndarray:
    """Return a float32 array of shape (h, w) or (h, w, 3), top row first."""
    p = Path(path)
    with p.open("rb") as f:
        ident = _read_line(f)
        if ident == "Pf":
            channels = 1
        elif ident == "PF":
            channels = 3
        else:
            raise InvalidInputError(f"{p}: not a PFM file (identifier {ident!r})")
        dims = _read_line(f).split()
        if len(dims) != 2:
            raise InvalidInputError(f"{p}: malformed PFM dimensions line")
        try:
            width, height = int(dims[0]), int(dims[1])
            scale = float(_read_line(f))
        except ValueError as e:
            raise InvalidInputError(f"{p}: malformed PFM header") from e
        if width < 1 or height < 1 or scale == 0:
            raise InvalidInputError(f"{p}: malformed PFM header")
        dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
        count = width * height * channels
        data = np.frombuffer(f.read(count * 4), dtype=dtype)
    if data.size != count:
        raise InvalidInputError(f"{p}: truncated PFM payload ({data.size} of {count} samples)")
    shape = (height, width) if channels == 1 else (height, width, 3)
    log.debug("read %s (%dx%d, %d channel(s))", p, width, height, channels)
    return np.flipud(data.reshape(shape)).astype(np.float32)


def write_pfm(path: str | Path, data: np.ndarray) -> Path:
    arr = np.asarray(data)
    if arr.ndim == 2:
        ident = "Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        ident = "PF"
    else:
        raise InvalidInputError(f"PFM holds (h, w) or (h, w, 3) data (got shape {arr.shape})")
    height, width = arr.shape[:2]
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    payload = np.ascontiguousarray(np.flipud(arr).astype("<f4"))
    with p.open("wb") as f:
        f.write(f"{ident}\n{width} {height}\n-1.0\n".encode("ascii"))
        f.write(payload.tobytes())
    return p


def read_grid(path: str | Path) -> ScalarGrid:
    arr = read_pfm(path)
    if arr.ndim != 2:
        raise InvalidInputError(f"{path}: expected a single-channel PFM")
    return ScalarGrid(arr)


def write_grid(path: str | Path, grid: ScalarGrid) -> Path:
    return write_pfm(path, grid.data)


def read_normals(path: str | Path, valid: Optional[ValidMask] = None) -> NormalGrid:
    """Three-channel PFM; zero vectors mark invalid pixels; vectors are renormalized and oriented."""
    arr = read_pfm(path)
    if arr.ndim != 3:
        raise InvalidInputError(f"{path}: expected a three-channel PFM")
    return NormalGrid.ingest(arr.astype(np.float64), valid)


def write_normals(path: str | Path, normals: NormalGrid) -> Path:
    vec = np.where(normals.valid.flags[..., None], normals.vectors, 0.0)
    return write_pfm(path, vec)
