from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import InvalidArgumentError, InvalidInputError
from ..model.grids_model import ScalarGrid, ValidMask

log = logging.getLogger(__name__)

UINT16_MAX = 65535


def _open(path: str | Path) -> Image.Image:
    p = Path(path)
    try:
        img = Image.open(p)
        img.load()
    except (OSError, ValueError) as e:
        raise InvalidInputError(f"{p}: cannot read PNG ({e})") from e
    return img


def read_png16(path: str | Path, scale: float = 1.0) -> ScalarGrid:
    """16-bit grayscale PNG scaled by a user-supplied factor (value = raw * scale)."""
    if not scale > 0:
        raise InvalidArgumentError(f"PNG value scale must be positive (got {scale})")
    img = _open(path)
    if img.mode not in ("I;16", "I;16B", "I", "L"):
        raise InvalidInputError(f"{path}: expected a grayscale PNG (mode {img.mode})")
    raw = np.asarray(img, dtype=np.float64)
    return ScalarGrid(raw * scale)


def write_png16(path: str | Path, grid: ScalarGrid, scale: float = 1.0) -> Path:
    if not scale > 0:
        raise InvalidArgumentError(f"PNG value scale must be positive (got {scale})")
    raw = np.rint(grid.data / scale)
    if raw.min() < 0 or raw.max() > UINT16_MAX:
        raise InvalidInputError("grid values do not fit a 16-bit PNG at this scale")
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(raw.astype(np.uint16)).save(p, format="PNG")
    return p


def read_rgb(path: str | Path) -> np.ndarray:
    """uint8 array of shape (h, w, 3)."""
    img = _open(path).convert("RGB")
    return np.asarray(img, dtype=np.uint8).copy()


def write_rgb(path: str | Path, rgb: np.ndarray) -> Path:
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidArgumentError(f"RGB image must have shape (h, w, 3) (got {arr.shape})")
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(np.asarray(arr, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(p, format="PNG")
    return p


def read_mask(path: str | Path) -> ValidMask:
    """Any non-zero sample is a valid pixel."""
    img = _open(path)
    arr = np.asarray(img)
    if arr.ndim == 3:
        arr = arr.max(axis=2)
    return ValidMask(arr != 0)


def write_mask(path: str | Path, mask: ValidMask) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.where(mask.flags, 255, 0).astype(np.uint8)).save(p, format="PNG")
    return p
