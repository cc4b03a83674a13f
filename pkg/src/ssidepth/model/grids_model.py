from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidArgumentError, InvalidInputError

UNIT_LENGTH_TOLERANCE = 1e-6


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True, eq=False)
class ScalarGrid:
    """2-D field of finite float64 samples, row-major, indexed data[row, col].

    Pixel (r, c) has flat index r * width + c everywhere in the package.
    """
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"grid must be 2-D (got shape {arr.shape})")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError(f"grid dimensions must be positive (got {arr.shape})")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("grid values must be finite")
        object.__setattr__(self, "data", _frozen(arr))

    @staticmethod
    def from_flat(width: int, height: int, values: Iterable[float]) -> "ScalarGrid":
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.float64)
        if arr.size != width * height:
            raise InvalidArgumentError(
                f"data length {arr.size} does not match {width}x{height}")
        return ScalarGrid(arr.reshape(height, width))

    @staticmethod
    def filled(width: int, height: int, value: float) -> "ScalarGrid":
        return ScalarGrid(np.full((height, width), float(value)))

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def __repr__(self) -> str:
        return f"ScalarGrid({self.width}x{self.height})"


@dataclass(frozen=True, slots=True, eq=False)
class ValidMask:
    flags: np.ndarray

    def __post_init__(self):
        arr = np.array(self.flags, dtype=bool)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"mask must be 2-D (got shape {arr.shape})")
        object.__setattr__(self, "flags", _frozen(arr))

    @staticmethod
    def all_valid(width: int, height: int) -> "ValidMask":
        return ValidMask(np.ones((height, width), dtype=bool))

    @staticmethod
    def like(grid: ScalarGrid) -> "ValidMask":
        return ValidMask.all_valid(grid.width, grid.height)

    @staticmethod
    def from_flat(width: int, height: int, values: Iterable[bool]) -> "ValidMask":
        arr = np.asarray(list(values), dtype=bool)
        if arr.size != width * height:
            raise InvalidArgumentError(
                f"mask length {arr.size} does not match {width}x{height}")
        return ValidMask(arr.reshape(height, width))

    @property
    def width(self) -> int:
        return int(self.flags.shape[1])

    @property
    def height(self) -> int:
        return int(self.flags.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.flags))

    @property
    def flat(self) -> np.ndarray:
        return self.flags.reshape(-1)

    def indices(self) -> np.ndarray:
        """Flat row-major indices of valid pixels, ascending."""
        return np.flatnonzero(self.flags)

    def __and__(self, other: "ValidMask") -> "ValidMask":
        if self.shape != other.shape:
            raise InvalidArgumentError("mask dimensions differ")
        return ValidMask(self.flags & other.flags)

    def require_shape(self, *grids: "ScalarGrid") -> None:
        for g in grids:
            if g.shape != self.shape:
                raise InvalidArgumentError(
                    f"mask is {self.width}x{self.height} but grid is {g.width}x{g.height}")


@dataclass(frozen=True, slots=True, eq=False)
class NormalGrid:
    """Per-pixel unit 3-vectors, shape (height, width, 3), plus a validity channel.

    Invalid pixels carry the placeholder (0, 0, -1) so every stored vector is unit length.
    """
    vectors: np.ndarray
    valid: Optional[ValidMask] = None

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=np.float64)
        if vec.ndim != 3 or vec.shape[2] != 3:
            raise InvalidArgumentError(f"normals must have shape (h, w, 3) (got {vec.shape})")
        valid = self.valid if self.valid is not None else ValidMask.all_valid(vec.shape[1], vec.shape[0])
        if valid.shape != vec.shape[:2]:
            raise InvalidArgumentError("normal validity channel does not match the vector field")
        vec[~valid.flags] = (0.0, 0.0, -1.0)
        if not np.all(np.isfinite(vec)):
            raise InvalidInputError("normal vectors must be finite")
        norms = np.linalg.norm(vec, axis=2)
        if np.any(np.abs(norms - 1.0) > UNIT_LENGTH_TOLERANCE):
            raise InvalidInputError("normal vectors must be unit length")
        object.__setattr__(self, "vectors", _frozen(vec))
        object.__setattr__(self, "valid", valid)

    @staticmethod
    def ingest(vectors: np.ndarray, valid: Optional[ValidMask] = None) -> "NormalGrid":
        """Normalize raw vectors and flip the ones facing away from the camera (z > 0)."""
        vec = np.array(vectors, dtype=np.float64)
        if vec.ndim != 3 or vec.shape[2] != 3:
            raise InvalidArgumentError(f"normals must have shape (h, w, 3) (got {vec.shape})")
        flags = np.ones(vec.shape[:2], dtype=bool) if valid is None else valid.flags.copy()
        norms = np.linalg.norm(vec, axis=2)
        flags &= np.isfinite(norms) & (norms > 1e-12)
        safe = np.where(flags, norms, 1.0)
        vec = np.where(flags[..., None], vec / safe[..., None], 0.0)
        vec[vec[..., 2] > 0] *= -1.0
        return NormalGrid(vec, ValidMask(flags))

    @staticmethod
    def constant(width: int, height: int, normal: Sequence[float]) -> "NormalGrid":
        n = np.asarray(normal, dtype=np.float64)
        n = n / np.linalg.norm(n)
        return NormalGrid(np.broadcast_to(n, (height, width, 3)).copy())

    @property
    def width(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def height(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def component(self, k: int) -> ScalarGrid:
        return ScalarGrid(self.vectors[..., k])

    def to_channels(self) -> np.ndarray:
        """(3, h, w) view for multi-channel writers."""
        return np.moveaxis(self.vectors, 2, 0)


@dataclass(frozen=True, slots=True, eq=False)
class ChannelStack:
    """Multi-channel image, shape (channels, height, width)."""
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise InvalidArgumentError(f"channel stack must be 3-D (got shape {arr.shape})")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("channel values must be finite")
        object.__setattr__(self, "data", _frozen(arr))

    @staticmethod
    def from_grids(grids: Sequence[ScalarGrid]) -> "ChannelStack":
        if not grids:
            raise InvalidArgumentError("at least one channel is required")
        shape = grids[0].shape
        for g in grids:
            if g.shape != shape:
                raise InvalidArgumentError("all channels must share dimensions")
        return ChannelStack(np.stack([g.data for g in grids]))

    @property
    def channels(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[2])

    @property
    def height(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def channel(self, k: int) -> ScalarGrid:
        return ScalarGrid(self.data[k])

    def grayscale(self) -> ScalarGrid:
        return ScalarGrid(self.data.mean(axis=0))


@dataclass(frozen=True, slots=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidArgumentError(f"focal lengths must be positive (fx={self.fx}, fy={self.fy})")
        for name in ("fx", "fy", "cx", "cy"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"{name} must be finite")

    @staticmethod
    def default_for(width: int, height: int) -> "CameraIntrinsics":
        f = 0.5 * (width + height)
        return CameraIntrinsics(fx=f, fy=f, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0)

    @staticmethod
    def from_mapping(m: Mapping[str, Any]) -> "CameraIntrinsics":
        try:
            return CameraIntrinsics(fx=float(m["fx"]), fy=float(m["fy"]),
                                    cx=float(m["cx"]), cy=float(m["cy"]))
        except KeyError as e:
            raise InvalidArgumentError(f"intrinsics missing {e.args[0]!r}")

    def validate_for(self, width: int, height: int) -> None:
        if not (0 <= self.cx < width and 0 <= self.cy < height):
            raise InvalidArgumentError(
                f"principal point ({self.cx}, {self.cy}) outside {width}x{height}")

    def halved(self) -> "CameraIntrinsics":
        # 2x2 box pooling: new pixel k is centred on old pixel 2k + 0.5
        return CameraIntrinsics(fx=self.fx / 2.0, fy=self.fy / 2.0,
                                cx=(self.cx - 0.5) / 2.0, cy=(self.cy - 0.5) / 2.0)

    def resized(self, width: int, height: int, new_width: int, new_height: int) -> "CameraIntrinsics":
        # corner-aligned resampling maps u -> u * (W' - 1) / (W - 1)
        sx = (new_width - 1) / (width - 1) if width > 1 else 1.0
        sy = (new_height - 1) / (height - 1) if height > 1 else 1.0
        return CameraIntrinsics(fx=self.fx * sx, fy=self.fy * sy, cx=self.cx * sx, cy=self.cy * sy)

    def to_mapping(self) -> Dict[str, float]:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}


@dataclass(frozen=True, slots=True)
class PixelPair:
    i: int
    j: int

    def validate(self, pixel_count: int) -> None:
        if self.i == self.j:
            raise InvalidArgumentError("pixel pair must reference two distinct pixels")
        if not (0 <= self.i < pixel_count and 0 <= self.j < pixel_count):
            raise InvalidArgumentError(f"pixel pair {self.i, self.j} out of range")

    def to_mapping(self) -> Dict[str, int]:
        return {"i": self.i, "j": self.j}


@dataclass(frozen=True, slots=True, eq=False)
class PointCloud:
    points: np.ndarray
    colors: Optional[np.ndarray] = None
    pixels: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        if pts.size and not np.all(pts[:, 2] > 0):
            raise InvalidInputError("point cloud depths must be positive")
        object.__setattr__(self, "points", _frozen(pts))
        if self.colors is not None:
            col = np.array(self.colors, dtype=np.uint8).reshape(-1, 3)
            if col.shape[0] != pts.shape[0]:
                raise InvalidArgumentError("one color per point is required")
            object.__setattr__(self, "colors", _frozen(col))
        if self.pixels is not None:
            pix = np.array(self.pixels, dtype=np.int64).reshape(-1, 2)
            object.__setattr__(self, "pixels", _frozen(pix))

    def __len__(self) -> int:
        return int(self.points.shape[0])
