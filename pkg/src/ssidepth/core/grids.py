from __future__ import annotations

import logging
from typing import List, Optional, Tuple

import numpy as np

from ..constants import MIN_LEVEL_SIZE
from ..errors import InvalidArgumentError
from ..model.grids_model import ChannelStack, ScalarGrid, ValidMask

log = logging.getLogger(__name__)

RESIZE_METHODS = ("bilinear", "area")


# ---------------------------------------------------------------------------
# resampling matrices
# ---------------------------------------------------------------------------

def _bilinear_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Corner-aligned linear interpolation weights, shape (n_out, n_in)."""
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    if n_in == 1:
        weights[:, 0] = 1.0
        return weights
    pos = np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)
    lo = np.minimum(np.floor(pos).astype(np.int64), n_in - 2)
    frac = pos - lo
    rows = np.arange(n_out)
    weights[rows, lo] = 1.0 - frac
    weights[rows, lo + 1] += frac
    return weights


def _area_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Overlap-weighted box weights, shape (n_out, n_in); every row sums to one."""
    ratio = n_in / n_out
    starts = np.arange(n_out) * ratio
    ends = starts + ratio
    left = np.arange(n_in, dtype=np.float64)
    overlap = np.clip(np.minimum(ends[:, None], left[None, :] + 1.0)
                      - np.maximum(starts[:, None], left[None, :]), 0.0, None)
    return overlap / ratio


def _resample_matrix(n_in: int, n_out: int, method: str) -> np.ndarray:
    if n_in == n_out:
        return np.eye(n_in)
    if method == "bilinear":
        return _bilinear_matrix(n_in, n_out)
    if method == "area":
        return _area_matrix(n_in, n_out)
    raise InvalidArgumentError(f"unknown resize method {method!r} (expected one of {RESIZE_METHODS})")


def _check_target(new_width: int, new_height: int) -> None:
    if new_width < 2 or new_height < 2:
        raise InvalidArgumentError(
            f"resize target must be at least 2x2 (got {new_width}x{new_height})")


def resize_array(data: np.ndarray, new_width: int, new_height: int, method: str = "bilinear") -> np.ndarray:
    """Separable resampling of a (h, w) array: out = Ry @ data @ Rx^T."""
    _check_target(new_width, new_height)
    h, w = data.shape
    ry = _resample_matrix(h, new_height, method)
    rx = _resample_matrix(w, new_width, method)
    return ry @ data @ rx.T


def resize_grid(grid: ScalarGrid, new_width: int, new_height: int, method: str = "bilinear") -> ScalarGrid:
    """Resample to new dimensions; resizing to the same dimensions returns identical values."""
    if (new_width, new_height) == (grid.width, grid.height):
        _check_target(new_width, new_height)
        return grid
    return ScalarGrid(resize_array(grid.data, new_width, new_height, method))


def resize_mask(mask: ValidMask, new_width: int, new_height: int) -> ValidMask:
    """Nearest-neighbour resampling of a validity mask on the same corner-aligned lattice."""
    _check_target(new_width, new_height)

    def nearest(n_in: int, n_out: int) -> np.ndarray:
        if n_in == 1:
            return np.zeros(n_out, dtype=np.int64)
        pos = np.arange(n_out) * (n_in - 1) / (n_out - 1)
        return np.clip(np.rint(pos).astype(np.int64), 0, n_in - 1)

    rows = nearest(mask.height, new_height)
    cols = nearest(mask.width, new_width)
    return ValidMask(mask.flags[np.ix_(rows, cols)])


def resize_channels(stack: ChannelStack, new_width: int, new_height: int, method: str = "bilinear") -> ChannelStack:
    _check_target(new_width, new_height)
    ry = _resample_matrix(stack.height, new_height, method)
    rx = _resample_matrix(stack.width, new_width, method)
    return ChannelStack(np.einsum("yh,chw,xw->cyx", ry, stack.data, rx))


# ---------------------------------------------------------------------------
# 2x2 box pooling
# ---------------------------------------------------------------------------

def _blocks(data: np.ndarray) -> np.ndarray:
    h, w = data.shape[:2]
    h2, w2 = h // 2, w // 2
    cropped = data[:2 * h2, :2 * w2]
    return cropped.reshape((h2, 2, w2, 2) + data.shape[2:])


def pool2(data: np.ndarray, flags: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Average each 2x2 block over its valid pixels.

    Returns (pooled, counts). Blocks without valid support hold 0 and count 0.
    Odd trailing rows/columns are dropped. Trailing axes (e.g. vector
    components) are pooled independently.
    """
    if data.shape[0] < 2 or data.shape[1] < 2:
        raise InvalidArgumentError(f"cannot halve a {data.shape[1]}x{data.shape[0]} grid")
    if flags is None:
        flags = np.ones(data.shape[:2], dtype=bool)
    weights = flags.astype(np.float64)
    counts = _blocks(weights).sum(axis=(1, 3))
    w = weights.reshape(weights.shape + (1,) * (data.ndim - 2))
    sums = _blocks(data * w).sum(axis=(1, 3))
    safe = np.where(counts > 0, counts, 1.0)
    pooled = sums / safe.reshape(safe.shape + (1,) * (data.ndim - 2))
    return pooled, counts


def pool2_adjoint(upstream: np.ndarray, flags: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Transpose of pool2 with respect to the fine-level data (masks held fixed)."""
    h, w = flags.shape[:2]
    scale = np.where(counts > 0, upstream / np.where(counts > 0, counts, 1.0), 0.0)
    out = np.zeros((h, w), dtype=np.float64)
    h2, w2 = counts.shape
    out[:2 * h2, :2 * w2] = np.repeat(np.repeat(scale, 2, axis=0), 2, axis=1)
    return out * flags


def downsample_by_2(grid: ScalarGrid) -> ScalarGrid:
    pooled, _ = pool2(grid.data)
    return ScalarGrid(pooled)


def downsample_masked(grid: ScalarGrid, mask: ValidMask) -> Tuple[ScalarGrid, ValidMask]:
    """Box average over valid pixels only; blocks with no valid pixel become invalid."""
    mask.require_shape(grid)
    pooled, counts = pool2(grid.data, mask.flags)
    return ScalarGrid(pooled), ValidMask(counts > 0)


def check_pyramid(width: int, height: int, num_scales: int) -> None:
    """Every level of a num_scales pyramid must be at least MIN_LEVEL_SIZE on each side."""
    if num_scales < 1:
        raise InvalidArgumentError(f"num_scales must be >= 1 (got {num_scales})")
    w, h = width, height
    for level in range(num_scales):
        if w < MIN_LEVEL_SIZE or h < MIN_LEVEL_SIZE:
            raise InvalidArgumentError(
                f"{width}x{height} grid is too small for {num_scales} scales "
                f"(level {level} would be {w}x{h})")
        w, h = w // 2, h // 2


def masked_pyramid(data: np.ndarray, flags: np.ndarray, num_scales: int) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Levels as (data, flags, counts-from-previous-level); level 0 has counts None-equivalent ones."""
    levels = [(data, flags, flags.astype(np.float64))]
    for _ in range(1, num_scales):
        prev_data, prev_flags, _ = levels[-1]
        pooled, counts = pool2(prev_data, prev_flags)
        levels.append((pooled, counts > 0, counts))
    return levels
