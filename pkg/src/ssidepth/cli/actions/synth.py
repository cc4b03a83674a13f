from __future__ import annotations

import json
import logging
from argparse import Namespace
from pathlib import Path

from .common import ActionOutput, existing
from ...fileio.pfm import write_grid, write_normals
from ...fileio.png import write_mask, write_rgb
from ...model.scene_model import SceneSpec
from ...model.settings_model import ToolSettings
from ...synth import render_scene

log = logging.getLogger(__name__)


def scene_from_args(args: Namespace, settings: ToolSettings) -> SceneSpec:
    scene_file = existing(args.scene, "scene")
    if scene_file is not None:
        doc = json.loads(scene_file.read_text(encoding="utf-8"))
        doc.setdefault("seed", settings.seed)
        return SceneSpec.from_mapping(doc)
    return SceneSpec(
        seed=settings.seed,
        width=args.width,
        height=args.height,
        primitive_count=args.primitives,
        kinds=tuple(args.kinds),
        depth_range=(args.near, args.far),
        noise_sigma=args.noise_sigma,
        background_tilt=args.tilt,
        focal=args.focal)


def run_synth(args: Namespace, settings: ToolSettings) -> ActionOutput:
    spec = scene_from_args(args, settings)
    scene = render_scene(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "depth": write_grid(out / "depth.pfm", scene.depth),
        "disparity": write_grid(out / "disparity.pfm", scene.disparity()),
        "normals": write_normals(out / "normals.pfm", scene.normals),
        "rgb": write_rgb(out / "rgb.png", scene.rgb),
        "mask": write_mask(out / "mask.png", scene.mask),
    }
    spec_path = out / "scene.json"
    spec_path.write_text(spec.to_json() + "\n", encoding="utf-8")
    files["scene"] = spec_path
    log.info("wrote scene %dx%d to %s", spec.width, spec.height, out)
    result = {
        "scene": spec.to_mapping(),
        "files": {k: v.name for k, v in files.items()},
        "depth_min": float(scene.depth.data.min()),
        "depth_max": float(scene.depth.data.max()),
        "primitive_pixels": int((scene.primitive_ids > 0).sum()),
        "intrinsics": scene.intrinsics.to_mapping(),
    }
    return result, {"scene": spec.seed}
