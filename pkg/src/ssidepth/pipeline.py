"""Two-stage inference: low- and high-resolution SSI estimates are aligned,
stacked with the image and handed to the SI predictor.

The high-resolution target is picked with an edge-distance proxy: the image is
upscaled until every pixel sits within half a receptive field of an edge.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from . import constants as C
from .align import align_mean_scale, fit_scale_only
from .core.grids import resize_channels, resize_grid
from .errors import InvalidArgumentError
from .fileio.pfm import read_grid
from .geometry import normals_from_depth, point_cloud_from_depth
from .model.grids_model import CameraIntrinsics, ChannelStack, NormalGrid, PointCloud, ScalarGrid, ValidMask
from .model.scene_model import SceneSpec
from .model.settings_model import ToolSettings
from .synth import corrupt, render_scene
from .toy.net import ToyNet

log = logging.getLogger(__name__)

Size = Tuple[int, int]


# ---------------------------------------------------------------------------
# image helpers
# ---------------------------------------------------------------------------

def rgb_channels(rgb: np.ndarray) -> np.ndarray:
    """(h, w, 3) image -> (3, h, w) float in [0, 1]; values above 1 are taken as 8-bit."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidArgumentError(f"rgb image must have shape (h, w, 3) (got {arr.shape})")
    out = arr.astype(np.float64)
    if np.issubdtype(arr.dtype, np.integer) or out.max(initial=0.0) > 1.0:
        out = out / 255.0
    return np.moveaxis(out, 2, 0)


def luminance(rgb: np.ndarray) -> np.ndarray:
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    return rgb_channels(rgb).mean(axis=0)


def image_edges(rgb: np.ndarray, top_fraction: float = C.EDGE_TOP_FRACTION) -> np.ndarray:
    """Top fraction of forward-difference luminance gradient magnitudes; flat regions never qualify."""
    lum = luminance(rgb)
    dx = np.zeros_like(lum)
    dy = np.zeros_like(lum)
    dx[:, :-1] = lum[:, 1:] - lum[:, :-1]
    dy[:-1, :] = lum[1:, :] - lum[:-1, :]
    mag = np.hypot(dx, dy)
    thr = float(np.quantile(mag, 1.0 - top_fraction))
    return (mag >= thr * (1.0 - C.EDGE_TIE_RTOL)) & (mag > C.EDGE_MIN_MAGNITUDE)


# ---------------------------------------------------------------------------
# resolution selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class HighResolution:
    width: int
    height: int
    scale: float
    d_max: Optional[float]
    flags: Tuple[str, ...] = ()

    @property
    def size(self) -> Size:
        return self.width, self.height

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "width": self.width,
            "height": self.height,
            "scale": self.scale,
            "d_max": self.d_max,
            "flags": list(self.flags),
            "variant": C.METRIC_VARIANTS["resolution"],
        }


def resolution_bounds(native: int, max_factor: float) -> Tuple[int, int]:
    m = C.RESOLUTION_MULTIPLE
    lo = int(math.ceil(native / m)) * m
    hi = max(lo, int(math.floor(max_factor * native / m)) * m)
    return lo, hi


def _snap(native: int, scale: float, max_factor: float) -> int:
    lo, hi = resolution_bounds(native, max_factor)
    m = C.RESOLUTION_MULTIPLE
    return int(min(max(round(native * scale / m) * m, lo), hi))


def select_high_resolution(rgb: np.ndarray, receptive_field: int = C.RECEPTIVE_FIELD,
                           max_factor: float = C.MAX_RESOLUTION_FACTOR) -> HighResolution:
    arr = np.asarray(rgb)
    if arr.size == 0:
        raise InvalidArgumentError("image is empty")
    if receptive_field < C.MIN_RECEPTIVE_FIELD:
        raise InvalidArgumentError(f"receptive_field must be >= {C.MIN_RECEPTIVE_FIELD}")
    if max_factor < 1:
        raise InvalidArgumentError("max_factor must be >= 1")
    h, w = arr.shape[:2]
    edges = image_edges(arr)
    if not np.any(edges):
        log.info("image has no edges; keeping native resolution")
        return HighResolution(width=_snap(w, 1.0, max_factor), height=_snap(h, 1.0, max_factor),
                              scale=1.0, d_max=None, flags=("edgeless",))
    d_max = float(ndimage.distance_transform_edt(~edges).max())
    scale = max_factor if d_max == 0 else min(max(receptive_field / (2.0 * d_max), 1.0), max_factor)
    res = HighResolution(width=_snap(w, scale, max_factor), height=_snap(h, scale, max_factor),
                         scale=float(scale), d_max=d_max)
    log.debug("edge distance %.1f px -> scale %.3f -> %dx%d", d_max, scale, res.width, res.height)
    return res


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble_si_input(rgb: np.ndarray, o_low: ScalarGrid, o_high: ScalarGrid) -> ChannelStack:
    """Channels [R, G, B, O_L, O_H]; the SSI channels are passed through unchanged."""
    channels = rgb_channels(rgb)
    shape = channels.shape[1:]
    if o_low.shape != shape or o_high.shape != shape:
        raise InvalidArgumentError(
            f"SSI inputs must match the image size {shape[1]}x{shape[0]} "
            f"(got {o_low.width}x{o_low.height} and {o_high.width}x{o_high.height})")
    return ChannelStack(np.concatenate([channels, o_low.data[None], o_high.data[None]]))


def fix_gt_scale(gt_inverse_depth: ScalarGrid, o_low: ScalarGrid, mask: ValidMask,
                 clamp: bool = False) -> ScalarGrid:
    """c * gt with c the least-squares scale of gt onto O_L."""
    c = fit_scale_only(reference=o_low, target=gt_inverse_depth, mask=mask)
    if clamp and c < C.SCALE_ONLY_MIN:
        log.debug("ground-truth scale %.6g clamped to %g", c, C.SCALE_ONLY_MIN)
        c = C.SCALE_ONLY_MIN
    return ScalarGrid(c * gt_inverse_depth.data)


# ---------------------------------------------------------------------------
# SSI sources
# ---------------------------------------------------------------------------

class SsiSource(ABC):
    """Produces the low- and high-resolution SSI estimates for one image."""

    @staticmethod
    @abstractmethod
    def label() -> str:
        ...

    @staticmethod
    @abstractmethod
    def description() -> str:
        ...

    @abstractmethod
    def produce(self, rgb: np.ndarray, low: Size, high: Size) -> Tuple[ScalarGrid, ScalarGrid]:
        ...


class OracleSsiSource(SsiSource):
    """Renders ground-truth disparity at both resolutions and degrades it.

    O_L is blurred and normalized; O_H gets a different affine frame plus seeded noise.
    """

    def __init__(self, spec: SceneSpec, blur_sigma: float = 1.0, noise_sigma: float = 0.01,
                 high_affine: Tuple[float, float] = (0.5, 0.2)):
        self.spec = spec
        self.blur_sigma = blur_sigma
        self.noise_sigma = noise_sigma
        self.high_affine = high_affine

    @staticmethod
    def label() -> str:
        return "oracle"

    @staticmethod
    def description() -> str:
        return "ground-truth disparity rendered at both resolutions, degraded"

    def _disparity(self, size: Size) -> ScalarGrid:
        w, h = size
        focal = None if self.spec.focal is None else self.spec.focal * w / self.spec.width
        return render_scene(dataclasses.replace(self.spec, width=w, height=h, focal=focal)).disparity()

    @staticmethod
    def _normalized(grid: ScalarGrid) -> ScalarGrid:
        lo = float(grid.data.min())
        span = float(np.ptp(grid.data)) or 1.0
        return ScalarGrid((grid.data - lo) / span)

    def produce(self, rgb: np.ndarray, low: Size, high: Size) -> Tuple[ScalarGrid, ScalarGrid]:
        o_low = self._normalized(corrupt(self._disparity(low), "blur", sigma=self.blur_sigma))
        a, b = self.high_affine
        o_high = corrupt(self._normalized(self._disparity(high)), "affine", a=a, b=b)
        if self.noise_sigma > 0:
            o_high = corrupt(o_high, "noise", sigma=self.noise_sigma, seed=self.spec.seed)
        return o_low, o_high


class NetworkSsiSource(SsiSource):
    def __init__(self, net: ToyNet):
        if net.in_channels != 3:
            raise InvalidArgumentError(f"SSI network must take 3 RGB channels (got {net.in_channels})")
        self.net = net

    @staticmethod
    def label() -> str:
        return "network"

    @staticmethod
    def description() -> str:
        return "a trained SSI toy network run at both resolutions"

    def _run(self, rgb: np.ndarray, size: Size) -> ScalarGrid:
        stack = ChannelStack(rgb_channels(rgb))
        return self.net.predict(resize_channels(stack, size[0], size[1]))

    def produce(self, rgb: np.ndarray, low: Size, high: Size) -> Tuple[ScalarGrid, ScalarGrid]:
        return self._run(rgb, low), self._run(rgb, high)


class FileSsiSource(SsiSource):
    """Precomputed estimates; their stored resolutions are used as-is."""

    def __init__(self, low_path: str | Path, high_path: str | Path):
        self.low_path = Path(low_path)
        self.high_path = Path(high_path)

    @staticmethod
    def label() -> str:
        return "files"

    @staticmethod
    def description() -> str:
        return "a pair of PFM files holding O_L and O_H"

    def produce(self, rgb: np.ndarray, low: Size, high: Size) -> Tuple[ScalarGrid, ScalarGrid]:
        return read_grid(self.low_path), read_grid(self.high_path)


def load_ssi_sources() -> List[type]:
    return [OracleSsiSource, NetworkSsiSource, FileSsiSource]


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True, eq=False)
class SsiChannels:
    o_low: ScalarGrid
    o_high: ScalarGrid
    resolution: HighResolution
    low_size: Size


def prepare_ssi_channels(rgb: np.ndarray, source: SsiSource,
                         settings: Optional[ToolSettings] = None) -> SsiChannels:
    """Fetch O_L and O_H, bring both to native size and express O_H in O_L's frame."""
    s = settings or ToolSettings()
    h, w = np.asarray(rgb).shape[:2]
    low = (s.receptive_field, s.receptive_field)
    resolution = select_high_resolution(rgb, s.receptive_field, s.max_factor)
    raw_low, raw_high = source.produce(rgb, low, resolution.size)
    o_low = resize_grid(raw_low, w, h, "bilinear")
    o_high = resize_grid(raw_high, w, h, s.resample)
    aligned = align_mean_scale(o_high, o_low, ValidMask.all_valid(w, h))
    return SsiChannels(o_low=o_low, o_high=aligned, resolution=resolution, low_size=low)


def si_input_for(net_channels: int, rgb: np.ndarray, ssi: SsiChannels) -> ChannelStack:
    """5-channel input, or its RGB part for networks trained on the image alone."""
    stack = assemble_si_input(rgb, ssi.o_low, ssi.o_high)
    if net_channels == 5:
        return stack
    if net_channels == 3:
        return ChannelStack(stack.data[:3])
    raise InvalidArgumentError(f"SI network must take 3 or 5 input channels (got {net_channels})")


@dataclass(frozen=True, slots=True, eq=False)
class TwoStageResult:
    depth: ScalarGrid
    inverse_depth: ScalarGrid
    point_cloud: PointCloud
    normals: NormalGrid
    ssi: SsiChannels
    intrinsics: CameraIntrinsics
    flags: Tuple[str, ...] = field(default=())

    def summary(self) -> Dict[str, Any]:
        return {
            "width": self.depth.width,
            "height": self.depth.height,
            "depth_min": float(self.depth.data.min()),
            "depth_max": float(self.depth.data.max()),
            "points": len(self.point_cloud),
            "valid_normals": self.normals.valid.count if self.normals.valid is not None else None,
            "low_resolution": list(self.ssi.low_size),
            "high_resolution": self.ssi.resolution.to_mapping(),
            "intrinsics": self.intrinsics.to_mapping(),
            "flags": list(self.flags),
        }


def run_two_stage(rgb: np.ndarray, ssi_source: SsiSource, si_net: ToyNet,
                  intrinsics: Optional[CameraIntrinsics] = None,
                  settings: Optional[ToolSettings] = None) -> TwoStageResult:
    s = settings or ToolSettings()
    h, w = np.asarray(rgb).shape[:2]
    intr = intrinsics or CameraIntrinsics.default_for(w, h)
    intr.validate_for(w, h)
    ssi = prepare_ssi_channels(rgb, ssi_source, s)
    inverse = si_net.predict(si_input_for(si_net.in_channels, rgb, ssi))
    floored = inverse.data < C.DEPTH_FLOOR
    flags: Tuple[str, ...] = ssi.resolution.flags
    if np.any(floored):
        log.warning("%d predicted inverse depth value(s) floored at %g", int(floored.sum()), C.DEPTH_FLOOR)
        flags = flags + ("inverse_depth_floored",)
    depth = ScalarGrid(1.0 / np.maximum(inverse.data, C.DEPTH_FLOOR))
    mask = ValidMask.all_valid(w, h)
    cloud = point_cloud_from_depth(depth, intr, mask, np.moveaxis(rgb_channels(rgb), 0, 2))
    normals = normals_from_depth(depth, intr, mask, s.stencil)
    return TwoStageResult(depth=depth, inverse_depth=inverse, point_cloud=cloud, normals=normals,
                          ssi=ssi, intrinsics=intr, flags=flags)
