from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from ...errors import InvalidArgumentError, InvalidInputError
from ...fileio.png import read_mask
from ...fileio.pfm import read_grid, read_normals
from ...model.grids_model import CameraIntrinsics, NormalGrid, ScalarGrid, ValidMask

# (result payload, seeds used)
ActionOutput = Tuple[Dict[str, Any], Dict[str, int]]


def existing(path: Optional[str], what: str) -> Optional[Path]:
    if path is None:
        return None
    p = Path(path).expanduser()
    if not p.is_file():
        raise FileNotFoundError(f"{what} file not found: {p}")
    return p


def load_grid(path: Optional[str], what: str) -> Optional[ScalarGrid]:
    p = existing(path, what)
    return read_grid(p) if p is not None else None


def load_mask(path: Optional[str], like: ScalarGrid) -> ValidMask:
    p = existing(path, "mask")
    if p is None:
        return ValidMask.like(like)
    mask = read_mask(p)
    mask.require_shape(like)
    return mask


def load_normals(path: Optional[str]) -> Optional[NormalGrid]:
    p = existing(path, "normals")
    return read_normals(p) if p is not None else None


def parse_intrinsics(value: Optional[str]) -> Optional[CameraIntrinsics]:
    """`fx,fy,cx,cy` or a JSON file holding {fx, fy, cx, cy}."""
    if value is None:
        return None
    p = Path(value).expanduser()
    if p.is_file():
        try:
            return CameraIntrinsics.from_mapping(json.loads(p.read_text(encoding="utf-8")))
        except ValueError as e:
            raise InvalidInputError(f"{p}: malformed intrinsics ({e})") from e
    parts = [s.strip() for s in value.split(",")]
    if len(parts) != 4:
        raise InvalidArgumentError(f"--intrinsics needs fx,fy,cx,cy or a JSON file (got {value!r})")
    try:
        fx, fy, cx, cy = (float(s) for s in parts)
    except ValueError:
        raise InvalidArgumentError(f"--intrinsics values must be numbers (got {value!r})")
    return CameraIntrinsics(fx=fx, fy=fy, cx=cx, cy=cy)


def resolved_intrinsics(value: Optional[str], grid: ScalarGrid) -> Tuple[CameraIntrinsics, bool]:
    intr = parse_intrinsics(value)
    if intr is None:
        return CameraIntrinsics.default_for(grid.width, grid.height), True
    intr.validate_for(grid.width, grid.height)
    return intr, False


def intrinsics_report(intr: CameraIntrinsics, default: bool) -> Dict[str, Any]:
    return {**intr.to_mapping(), "default": default}
