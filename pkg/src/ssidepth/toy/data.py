from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .. import constants as C
from ..errors import InvalidArgumentError
from ..model.grids_model import CameraIntrinsics, ChannelStack, NormalGrid, ScalarGrid, ValidMask
from ..model.scene_model import SceneSpec
from ..model.settings_model import ToolSettings
from ..pipeline import OracleSsiSource, SsiChannels, prepare_ssi_channels
from ..synth import RenderedScene, render_scene
from ..utils import derive_seed

log = logging.getLogger(__name__)

TRAIN_SPLIT = 0
HELDOUT_SPLIT = 1


@dataclass(frozen=True, slots=True, eq=False)
class TrainingSample:
    scene: RenderedScene
    ssi: Optional[SsiChannels] = None

    @property
    def rgb(self):
        return self.scene.rgb

    @property
    def rgb_stack(self) -> ChannelStack:
        return ChannelStack(self.scene.rgb_unit())

    @property
    def gt_depth(self) -> ScalarGrid:
        return self.scene.depth

    @property
    def gt_disparity(self) -> ScalarGrid:
        return self.scene.disparity()

    @property
    def gt_normals(self) -> NormalGrid:
        return self.scene.normals

    @property
    def mask(self) -> ValidMask:
        return self.scene.mask

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return self.scene.intrinsics


def build_sample(spec: SceneSpec, settings: Optional[ToolSettings] = None, with_ssi: bool = False) -> TrainingSample:
    scene = render_scene(spec)
    ssi = prepare_ssi_channels(scene.rgb, OracleSsiSource(spec), settings) if with_ssi else None
    return TrainingSample(scene=scene, ssi=ssi)


def build_dataset(count: int, size: int = C.BENCHMARK_SIZE, seed: int = C.DEFAULT_SEED,
                  split: int = TRAIN_SPLIT, settings: Optional[ToolSettings] = None,
                  with_ssi: bool = False) -> List[TrainingSample]:
    """`count` scenes of size x size whose seeds derive from (seed, split, index)."""
    if count < 1:
        raise InvalidArgumentError("dataset needs at least one scene")
    samples = []
    for k in range(count):
        spec = SceneSpec(seed=derive_seed(seed, split, k), width=size, height=size)
        samples.append(build_sample(spec, settings, with_ssi))
    log.debug("built %d scene(s) of %dx%d for split %d", count, size, size, split)
    return samples


def benchmark_split(seed: int = C.DEFAULT_SEED, scenes: int = C.BENCHMARK_SCENES,
                    heldout: int = C.BENCHMARK_HELDOUT, size: int = C.BENCHMARK_SIZE,
                    settings: Optional[ToolSettings] = None,
                    with_ssi: bool = False) -> Tuple[List[TrainingSample], List[TrainingSample]]:
    train = build_dataset(scenes, size, seed, TRAIN_SPLIT, settings, with_ssi)
    held = build_dataset(heldout, size, seed, HELDOUT_SPLIT, settings, with_ssi)
    return train, held
