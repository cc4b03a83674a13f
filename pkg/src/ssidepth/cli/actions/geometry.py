from __future__ import annotations

import logging
from argparse import Namespace

from .common import ActionOutput, existing, intrinsics_report, load_grid, load_mask, resolved_intrinsics
from ...fileio.pfm import write_normals
from ...fileio.ply import write_ply
from ...fileio.png import read_rgb
from ...geometry import normals_from_depth, point_cloud_from_depth
from ...model.settings_model import ToolSettings

log = logging.getLogger(__name__)


def run_normals(args: Namespace, settings: ToolSettings) -> ActionOutput:
    depth = load_grid(args.depth, "depth")
    mask = load_mask(args.mask, depth)
    intr, default = resolved_intrinsics(args.intrinsics, depth)
    normals = normals_from_depth(depth, intr, mask, settings.stencil)
    write_normals(args.out, normals)
    valid = normals.valid.count if normals.valid is not None else depth.width * depth.height
    return {
        "stencil": settings.stencil,
        "valid_normals": valid,
        "invalid_normals": depth.width * depth.height - valid,
        "intrinsics": intrinsics_report(intr, default),
    }, {}


def run_project(args: Namespace, settings: ToolSettings) -> ActionOutput:
    depth = load_grid(args.depth, "depth")
    mask = load_mask(args.mask, depth)
    intr, default = resolved_intrinsics(args.intrinsics, depth)
    rgb_path = existing(args.rgb, "rgb")
    color = read_rgb(rgb_path) if rgb_path is not None else None
    cloud = point_cloud_from_depth(depth, intr, mask, color)
    write_ply(args.out, cloud)
    log.info("wrote %d point(s)", len(cloud))
    return {
        "points": len(cloud),
        "colored": color is not None,
        "intrinsics": intrinsics_report(intr, default),
    }, {}
