"""Depth, normals and point clouds under a pinhole camera.

Back-projection: P(r, c) = z * ((c - cx) / fx, (r - cy) / fy, 1).
Normals are the normalized cross product of the image-axis tangents of the
back-projected surface, oriented towards the camera (z <= 0).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError
from .model.grids_model import CameraIntrinsics, NormalGrid, PointCloud, ScalarGrid, ValidMask

log = logging.getLogger(__name__)

STENCILS = ("central", "sobel")
_DEGENERATE_RTOL = 1e-12


def default_intrinsics(width: int, height: int) -> CameraIntrinsics:
    return CameraIntrinsics.default_for(width, height)


def _require_positive(depth: np.ndarray, flags: np.ndarray) -> None:
    if np.any(depth[flags] <= 0):
        raise InvalidInputError("depth must be positive at every valid pixel")


def pixel_rays(width: int, height: int, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Per-pixel ray directions scaled so that z == 1, shape (h, w, 3)."""
    cols = (np.arange(width, dtype=np.float64) - intrinsics.cx) / intrinsics.fx
    rows = (np.arange(height, dtype=np.float64) - intrinsics.cy) / intrinsics.fy
    rays = np.empty((height, width, 3), dtype=np.float64)
    rays[..., 0] = cols[None, :]
    rays[..., 1] = rows[:, None]
    rays[..., 2] = 1.0
    return rays


def backproject(depth: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    h, w = depth.shape
    return depth[..., None] * pixel_rays(w, h, intrinsics)


# ---------------------------------------------------------------------------
# linear stencils expressed as shifted, per-pixel weighted sums
# ---------------------------------------------------------------------------

def _shift(arr: np.ndarray, axis: int, k: int) -> np.ndarray:
    """out[i] = arr[i + k] along axis, zero where i + k falls outside."""
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    if abs(k) >= n:
        return out
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if k >= 0:
        src[axis] = slice(k, n)
        dst[axis] = slice(0, n - k)
    else:
        src[axis] = slice(0, n + k)
        dst[axis] = slice(-k, n)
    out[tuple(dst)] = arr[tuple(src)]
    return out


@dataclass(frozen=True, slots=True)
class _Stencil:
    """y = minus * x[i-1] + centre * x[i] + plus * x[i+1] along one axis."""
    axis: int
    minus: np.ndarray
    centre: np.ndarray
    plus: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        m, c, p = (w[..., None] for w in (self.minus, self.centre, self.plus))
        return m * _shift(x, self.axis, -1) + c * x + p * _shift(x, self.axis, 1)

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        m, c, p = (w[..., None] for w in (self.minus, self.centre, self.plus))
        return _shift(m * g, self.axis, 1) + c * g + _shift(p * g, self.axis, -1)


def _difference_stencil(flags: np.ndarray, axis: int) -> Tuple[_Stencil, np.ndarray]:
    """Central differences, one-sided where a neighbour is missing; returns (stencil, defined)."""
    nxt = _shift(flags, axis, 1) & flags
    prv = _shift(flags, axis, -1) & flags
    central = nxt & prv
    forward = nxt & ~prv
    backward = prv & ~nxt
    f = lambda b: b.astype(np.float64)
    minus = -0.5 * f(central) - f(backward)
    centre = -f(forward) + f(backward)
    plus = 0.5 * f(central) + f(forward)
    return _Stencil(axis, minus, centre, plus), central | forward | backward


def _smoothing_stencil(defined: np.ndarray, axis: int) -> _Stencil:
    """1-2-1 weights across `axis` over neighbours whose tangent is defined."""
    f = lambda b: b.astype(np.float64)
    wm = f(_shift(defined, axis, -1) & defined)
    wp = f(_shift(defined, axis, 1) & defined)
    wc = 2.0 * f(defined)
    norm = np.where(defined, wm + wc + wp, 1.0)
    return _Stencil(axis, wm / norm, wc / norm, wp / norm)


@dataclass(frozen=True, slots=True)
class NormalsTrace:
    """Everything the normal computation needs to push gradients back to depth."""
    normals: np.ndarray
    valid: np.ndarray
    cross: np.ndarray
    cross_norm: np.ndarray
    orientation: np.ndarray
    tu: np.ndarray
    tv: np.ndarray
    stencils_u: Tuple[_Stencil, ...]
    stencils_v: Tuple[_Stencil, ...]
    rays: np.ndarray

    def vjp(self, grad_normals: np.ndarray) -> np.ndarray:
        """d(loss)/d(depth) given d(loss)/d(normals), shape (h, w, 3) -> (h, w)."""
        g = np.where(self.valid[..., None], grad_normals, 0.0)
        n = self.normals
        gn = np.sum(g * n, axis=2, keepdims=True)
        safe = np.where(self.valid, self.cross_norm, 1.0)[..., None]
        gc = self.orientation[..., None] * (g - gn * n) / safe
        gtv = np.cross(self.tu, gc)
        gtu = np.cross(gc, self.tv)
        for st in reversed(self.stencils_u):
            gtu = st.adjoint(gtu)
        for st in reversed(self.stencils_v):
            gtv = st.adjoint(gtv)
        gp = gtu + gtv
        return np.sum(gp * self.rays, axis=2)


def trace_normals(depth: np.ndarray, flags: np.ndarray, intrinsics: CameraIntrinsics,
                  stencil: str = "central") -> NormalsTrace:
    if stencil not in STENCILS:
        raise InvalidArgumentError(f"unknown normal stencil {stencil!r} (expected one of {STENCILS})")
    h, w = depth.shape
    if w < 2 or h < 2:
        raise InvalidArgumentError(f"normals need at least a 2x2 grid (got {w}x{h})")
    _require_positive(depth, flags)
    rays = pixel_rays(w, h, intrinsics)
    points = np.where(flags[..., None], depth[..., None] * rays, 0.0)

    du, def_u = _difference_stencil(flags, axis=1)
    dv, def_v = _difference_stencil(flags, axis=0)
    stencils_u: Tuple[_Stencil, ...] = (du,)
    stencils_v: Tuple[_Stencil, ...] = (dv,)
    if stencil == "sobel":
        stencils_u += (_smoothing_stencil(def_u, axis=0),)
        stencils_v += (_smoothing_stencil(def_v, axis=1),)

    tu = points
    for st in stencils_u:
        tu = st.apply(tu)
    tv = points
    for st in stencils_v:
        tv = st.apply(tv)

    cross = np.cross(tv, tu)
    cross_norm = np.linalg.norm(cross, axis=2)
    scale = np.linalg.norm(tu, axis=2) * np.linalg.norm(tv, axis=2)
    valid = flags & def_u & def_v & (cross_norm > _DEGENERATE_RTOL * scale) & (cross_norm > 0)
    orientation = np.where(cross[..., 2] > 0, -1.0, 1.0)
    safe = np.where(valid, cross_norm, 1.0)[..., None]
    normals = np.where(valid[..., None], orientation[..., None] * cross / safe, 0.0)
    normals[~valid] = (0.0, 0.0, -1.0)
    return NormalsTrace(normals=normals, valid=valid, cross=cross, cross_norm=cross_norm,
                        orientation=orientation, tu=tu, tv=tv,
                        stencils_u=stencils_u, stencils_v=stencils_v, rays=rays)


def normals_from_depth(depth: ScalarGrid, intrinsics: CameraIntrinsics, mask: Optional[ValidMask] = None,
                       stencil: str = "central") -> NormalGrid:
    """Camera-facing unit normals; pixels without usable tangents are marked invalid."""
    mask = mask if mask is not None else ValidMask.like(depth)
    mask.require_shape(depth)
    trace = trace_normals(depth.data, mask.flags, intrinsics, stencil)
    return NormalGrid(trace.normals, ValidMask(trace.valid))


def point_cloud_from_depth(depth: ScalarGrid, intrinsics: CameraIntrinsics, mask: Optional[ValidMask] = None,
                           color: Optional[np.ndarray] = None) -> PointCloud:
    """Pinhole back-projection of every valid pixel, in row-major order."""
    mask = mask if mask is not None else ValidMask.like(depth)
    mask.require_shape(depth)
    _require_positive(depth.data, mask.flags)
    pts = backproject(depth.data, intrinsics)[mask.flags]
    rows, cols = np.nonzero(mask.flags)
    colors = None
    if color is not None:
        col = np.asarray(color)
        if col.shape[:2] != depth.shape or col.ndim != 3 or col.shape[2] != 3:
            raise InvalidArgumentError("color image must be (h, w, 3) and match the depth grid")
        if col.dtype != np.uint8:
            col = np.clip(np.rint(col.astype(np.float64) * 255.0), 0, 255).astype(np.uint8)
        colors = col[mask.flags]
    return PointCloud(pts, colors, np.stack([cols, rows], axis=1))


def project_points(points: np.ndarray, intrinsics: CameraIntrinsics) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Perspective projection (x, y, z) -> (u, v, z)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    z = pts[:, 2]
    if np.any(z <= 0):
        raise InvalidInputError("points must lie in front of the camera (z > 0)")
    u = pts[:, 0] * intrinsics.fx / z + intrinsics.cx
    v = pts[:, 1] * intrinsics.fy / z + intrinsics.cy
    return u, v, z


def disparity_from_depth(depth: ScalarGrid, mask: Optional[ValidMask] = None) -> ScalarGrid:
    """Pixelwise 1 / depth on valid pixels; masked pixels hold 0."""
    mask = mask if mask is not None else ValidMask.like(depth)
    mask.require_shape(depth)
    _require_positive(depth.data, mask.flags)
    safe = np.where(mask.flags, depth.data, 1.0)
    return ScalarGrid(np.where(mask.flags, 1.0 / safe, 0.0))


def depth_from_disparity(disparity: ScalarGrid, mask: Optional[ValidMask] = None) -> ScalarGrid:
    mask = mask if mask is not None else ValidMask.like(disparity)
    mask.require_shape(disparity)
    if np.any(disparity.data[mask.flags] <= 0):
        raise InvalidInputError("disparity must be positive at every valid pixel")
    safe = np.where(mask.flags, disparity.data, 1.0)
    return ScalarGrid(np.where(mask.flags, 1.0 / safe, 0.0))
