from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

from .grids_model import CameraIntrinsics
from ..errors import InvalidArgumentError

PRIMITIVE_KINDS = ("plane", "sphere", "box")


@dataclass(frozen=True, slots=True)
class PrimitiveSpec:
    """One scene primitive in camera coordinates.

    plane:  square patch centred at `center`, facing `normal`, half side `size`
    sphere: radius `size`
    box:    axis-aligned cube of half side `size`
    """
    kind: str
    center: Tuple[float, float, float]
    size: float
    normal: Tuple[float, float, float] = (0.0, 0.0, -1.0)
    albedo: Tuple[float, float, float] = (0.8, 0.8, 0.8)

    def __post_init__(self):
        if self.kind not in PRIMITIVE_KINDS:
            raise InvalidArgumentError(f"unknown primitive kind {self.kind!r}")
        if not self.size > 0:
            raise InvalidArgumentError("primitive size must be positive")
        if not self.center[2] > 0:
            raise InvalidArgumentError("primitive must lie in front of the camera")

    @staticmethod
    def from_mapping(m: Mapping[str, Any]) -> "PrimitiveSpec":
        return PrimitiveSpec(
            kind=str(m["kind"]),
            center=tuple(float(x) for x in m["center"]),
            size=float(m["size"]),
            normal=tuple(float(x) for x in m.get("normal", (0.0, 0.0, -1.0))),
            albedo=tuple(float(x) for x in m.get("albedo", (0.8, 0.8, 0.8))))

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "center": list(self.center),
            "size": self.size,
            "normal": list(self.normal),
            "albedo": list(self.albedo),
        }


@dataclass(frozen=True, slots=True)
class SceneSpec:
    seed: int = 0
    width: int = 64
    height: int = 64
    primitive_count: int = 3
    kinds: Tuple[str, ...] = PRIMITIVE_KINDS
    depth_range: Tuple[float, float] = (1.0, 10.0)
    noise_sigma: float = 0.0
    background_tilt: float = 0.3
    primitives: Optional[Tuple[PrimitiveSpec, ...]] = None
    focal: Optional[float] = None
    albedo_background: Tuple[float, float, float] = field(default=(0.6, 0.6, 0.6))

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        near, far = self.depth_range
        if not near > 0:
            raise InvalidArgumentError("near must be > 0")
        if not far > near:
            raise InvalidArgumentError("far must be > near")
        if self.width < 2 or self.height < 2:
            raise InvalidArgumentError("scene must be at least 2x2")
        if self.primitives is None and self.primitive_count < 1:
            raise InvalidArgumentError("primitive_count must be >= 1")
        if not self.kinds or any(k not in PRIMITIVE_KINDS for k in self.kinds):
            raise InvalidArgumentError(f"kinds must be drawn from {PRIMITIVE_KINDS}")
        if self.noise_sigma < 0:
            raise InvalidArgumentError("noise_sigma must be >= 0")
        if not 0 <= self.background_tilt < 1:
            raise InvalidArgumentError("background_tilt must be in [0, 1)")
        if self.focal is not None and not self.focal > 0:
            raise InvalidArgumentError("focal must be positive")

    def intrinsics(self) -> CameraIntrinsics:
        if self.focal is None:
            return CameraIntrinsics.default_for(self.width, self.height)
        return CameraIntrinsics(fx=self.focal, fy=self.focal,
                                cx=(self.width - 1) / 2.0, cy=(self.height - 1) / 2.0)

    @staticmethod
    def from_mapping(m: Mapping[str, Any]) -> "SceneSpec":
        prims = m.get("primitives")
        return SceneSpec(
            seed=int(m.get("seed", 0)),
            width=int(m.get("width", 64)),
            height=int(m.get("height", 64)),
            primitive_count=int(m.get("primitive_count", 3)),
            kinds=tuple(str(k) for k in (m.get("kinds") or PRIMITIVE_KINDS)),
            depth_range=tuple(float(x) for x in (m.get("depth_range") or (1.0, 10.0))),
            noise_sigma=float(m.get("noise_sigma", 0.0)),
            background_tilt=float(m.get("background_tilt", 0.3)),
            primitives=None if prims is None else tuple(PrimitiveSpec.from_mapping(p) for p in prims),
            focal=None if m.get("focal") is None else float(m["focal"]),
            albedo_background=tuple(float(x) for x in m.get("albedo_background", (0.6, 0.6, 0.6))))

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "width": self.width,
            "height": self.height,
            "primitive_count": self.primitive_count,
            "kinds": list(self.kinds),
            "depth_range": list(self.depth_range),
            "noise_sigma": self.noise_sigma,
            "background_tilt": self.background_tilt,
            "primitives": None if self.primitives is None else [p.to_mapping() for p in self.primitives],
            "focal": self.focal,
            "albedo_background": list(self.albedo_background),
        }

    def to_json(self, *, indent: int = 2) -> str:
        return json.dumps(self.to_mapping(), sort_keys=True, indent=indent)
