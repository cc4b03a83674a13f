"""Procedural scenes with exact depth and normals.

Primitives are ray-cast against a tilted background plane with a z-buffer.
Rays are scaled so their z component is 1, which makes the hit parameter
equal to the depth.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from .errors import InvalidArgumentError
from .geometry import disparity_from_depth, pixel_rays
from .model.grids_model import CameraIntrinsics, NormalGrid, ScalarGrid, ValidMask
from .model.scene_model import PrimitiveSpec, SceneSpec

log = logging.getLogger(__name__)

CORRUPTIONS = ("blur", "noise", "affine")
BACKGROUND_DEPTH_FRACTION = 0.65
LIGHT_DIRECTION = np.array([-0.4, -0.5, -1.0]) / np.linalg.norm([-0.4, -0.5, -1.0])
AMBIENT = 0.2


@dataclass(frozen=True, slots=True, eq=False)
class RenderedScene:
    spec: SceneSpec
    depth: ScalarGrid
    normals: NormalGrid
    rgb: np.ndarray
    mask: ValidMask
    primitive_ids: np.ndarray
    intrinsics: CameraIntrinsics

    def disparity(self) -> ScalarGrid:
        return disparity_from_depth(self.depth, self.mask)

    def rgb_unit(self) -> np.ndarray:
        """(3, h, w) float channels in [0, 1]."""
        return np.moveaxis(self.rgb.astype(np.float64) / 255.0, 2, 0)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _orient(n: np.ndarray) -> np.ndarray:
    return np.where(n[..., 2:3] > 0, -n, n)


def _hit_plane(rays: np.ndarray, point: np.ndarray, normal: np.ndarray) -> np.ndarray:
    denom = rays @ normal
    with np.errstate(divide="ignore", invalid="ignore"):
        t = float(point @ normal) / denom
    return np.where((denom != 0) & (t > 0), t, np.inf)


def _hit_patch(rays: np.ndarray, p: PrimitiveSpec) -> Tuple[np.ndarray, np.ndarray]:
    n = _unit(p.normal)
    if n[2] > 0:
        n = -n
    c = np.asarray(p.center, dtype=np.float64)
    t = _hit_plane(rays, c, n)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u1 = _unit(np.cross(n, helper))
    u2 = np.cross(n, u1)
    finite = np.isfinite(t)
    offset = np.where(finite[..., None], t[..., None] * rays, 0.0) - c
    inside = finite & (np.abs(offset @ u1) <= p.size) & (np.abs(offset @ u2) <= p.size)
    normals = np.broadcast_to(n, rays.shape)
    return np.where(inside, t, np.inf), normals


def _hit_sphere(rays: np.ndarray, p: PrimitiveSpec) -> Tuple[np.ndarray, np.ndarray]:
    c = np.asarray(p.center, dtype=np.float64)
    dd = np.sum(rays * rays, axis=2)
    dc = rays @ c
    disc = dc ** 2 - dd * (float(c @ c) - p.size ** 2)
    root = np.sqrt(np.maximum(disc, 0.0))
    t = (dc - root) / dd
    hit = (disc >= 0) & (t > 0)
    points = np.where(hit[..., None], np.where(hit, t, 0.0)[..., None] * rays, c)
    t = np.where(hit, t, np.inf)
    normals = (points - c) / p.size
    return t, _orient(normals)


def _hit_box(rays: np.ndarray, p: PrimitiveSpec) -> Tuple[np.ndarray, np.ndarray]:
    c = np.asarray(p.center, dtype=np.float64)
    lo = c - p.size
    hi = c + p.size
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = lo / rays
        t2 = hi / rays
    # rays parallel to a slab either never enter it or never leave it
    parallel = rays == 0
    inside_slab = (lo <= 0) & (hi >= 0)
    tmin = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), np.minimum(t1, t2))
    tmax = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), np.maximum(t1, t2))
    t_near = tmin.max(axis=2)
    t_far = tmax.min(axis=2)
    hit = (t_near <= t_far) & (t_near > 0)
    axis = tmin.argmax(axis=2)
    normals = np.zeros(rays.shape)
    sign = -np.sign(np.take_along_axis(rays, axis[..., None], axis=2))[..., 0]
    np.put_along_axis(normals, axis[..., None], sign[..., None], axis=2)
    return np.where(hit, t_near, np.inf), _orient(normals)


_CASTERS = {"plane": _hit_patch, "sphere": _hit_sphere, "box": _hit_box}


def random_primitives(spec: SceneSpec, rng: np.random.Generator) -> List[PrimitiveSpec]:
    near, far = spec.depth_range
    z_lo = max(1.8 * near, near + 0.1 * (far - near))
    z_hi = max(1.1 * z_lo, 0.45 * far)
    prims = []
    for _ in range(spec.primitive_count):
        kind = str(rng.choice(list(spec.kinds)))
        z = rng.uniform(z_lo, z_hi)
        x, y = z * rng.uniform(-0.35, 0.35, size=2)
        size = z * rng.uniform(0.08, 0.2)
        normal = (rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), -1.0)
        albedo = tuple(float(v) for v in rng.uniform(0.3, 1.0, size=3))
        prims.append(PrimitiveSpec(kind=kind, center=(float(x), float(y), float(z)), size=float(size),
                                   normal=tuple(float(v) for v in normal), albedo=albedo))
    return prims


def render_scene(spec: SceneSpec) -> RenderedScene:
    """Z-buffer composition of primitives over a background plane, deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    near, far = spec.depth_range
    intr = spec.intrinsics()
    rays = pixel_rays(spec.width, spec.height, intr)

    tilt = spec.background_tilt
    sx, sy = rng.uniform(-tilt, tilt, size=2) if tilt > 0 else (0.0, 0.0)
    bg_normal = _unit((sx, sy, -1.0))
    bg_point = np.array([0.0, 0.0, BACKGROUND_DEPTH_FRACTION * far])
    depth = _hit_plane(rays, bg_point, bg_normal)
    depth = np.where(np.isfinite(depth), depth, far)
    normals = np.broadcast_to(bg_normal, rays.shape).copy()
    albedo = np.broadcast_to(np.asarray(spec.albedo_background), rays.shape).copy()
    ids = np.zeros(depth.shape, dtype=np.int32)

    prims = list(spec.primitives) if spec.primitives is not None else random_primitives(spec, rng)
    for k, p in enumerate(prims, start=1):
        t, n = _CASTERS[p.kind](rays, p)
        closer = t < depth
        depth = np.where(closer, t, depth)
        normals = np.where(closer[..., None], n, normals)
        albedo = np.where(closer[..., None], np.asarray(p.albedo), albedo)
        ids = np.where(closer, k, ids)

    depth = np.clip(depth, near, far)
    normals = normals / np.linalg.norm(normals, axis=2, keepdims=True)
    shade = AMBIENT + (1.0 - AMBIENT) * np.clip(normals @ LIGHT_DIRECTION, 0.0, None)
    color = albedo * shade[..., None]
    if spec.noise_sigma > 0:
        noise_rng = np.random.default_rng([spec.seed, 1])
        color = color + spec.noise_sigma * noise_rng.standard_normal(color.shape)
    rgb = np.clip(np.rint(np.clip(color, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)

    log.debug("rendered scene seed=%d with %d primitive(s)", spec.seed, len(prims))
    return RenderedScene(
        spec=spec,
        depth=ScalarGrid(depth),
        normals=NormalGrid(normals),
        rgb=rgb,
        mask=ValidMask.all_valid(spec.width, spec.height),
        primitive_ids=ids,
        intrinsics=intr)


def corrupt(depth: ScalarGrid, kind: str, *, sigma: float = 1.0, seed: int = 0,
            a: float = 1.0, b: float = 0.0) -> ScalarGrid:
    """blur: separable Gaussian of width sigma; noise: seeded additive Gaussian; affine: a*d + b."""
    if kind == "blur":
        if sigma < 0:
            raise InvalidArgumentError("blur sigma must be >= 0")
        if sigma == 0:
            return depth
        return ScalarGrid(ndimage.gaussian_filter(depth.data, sigma=sigma, mode="nearest"))
    if kind == "noise":
        if sigma < 0:
            raise InvalidArgumentError("noise sigma must be >= 0")
        rng = np.random.default_rng(seed)
        return ScalarGrid(depth.data + sigma * rng.standard_normal(depth.shape))
    if kind == "affine":
        return ScalarGrid(a * depth.data + b)
    raise InvalidArgumentError(f"unknown corruption {kind!r} (expected one of {CORRUPTIONS})")


def fronto_parallel_spec(width: int, height: int, depth: float, **kwargs) -> SceneSpec:
    """A scene containing only an untilted background at the given depth."""
    near = min(kwargs.pop("near", depth / 2.0), depth)
    far = depth / BACKGROUND_DEPTH_FRACTION
    return SceneSpec(width=width, height=height, primitives=(), background_tilt=0.0,
                     depth_range=(near, far), **kwargs)
