import logging

import numpy as np
import pytest

from ssidepth.model.grids_model import CameraIntrinsics, ScalarGrid, ValidMask
from ssidepth.model.scene_model import PrimitiveSpec, SceneSpec
from ssidepth.model.settings_model import ToolSettings


@pytest.fixture(autouse=True)
def restore_logging():
    """CLI runs reconfigure the package logger; put it back after each test."""
    logger = logging.getLogger("ssidepth")
    saved = (list(logger.handlers), logger.level, logger.propagate)
    yield
    logger.handlers[:] = saved[0]
    logger.setLevel(saved[1])
    logger.propagate = saved[2]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_grid(rng):
    """Positive 16x16 grid with enough variance for every fit."""

    def _make(width: int = 16, height: int = 16, low: float = 1.0, high: float = 5.0) -> ScalarGrid:
        return ScalarGrid(rng.uniform(low, high, size=(height, width)))

    return _make


@pytest.fixture
def ramp():
    def _make(width: int = 8, height: int = 8, step: float = 1.0, offset: float = 1.0) -> ScalarGrid:
        cols = np.arange(width, dtype=np.float64) * step + offset
        return ScalarGrid(np.tile(cols, (height, 1)))

    return _make


@pytest.fixture
def full_mask():
    def _make(width: int, height: int) -> ValidMask:
        return ValidMask.all_valid(width, height)

    return _make


@pytest.fixture
def intrinsics_16():
    return CameraIntrinsics.default_for(16, 16)


@pytest.fixture
def small_settings():
    """Cheap settings for loops that would otherwise sample thousands of pairs."""
    return ToolSettings(pair_count=200, ord_pairs=300, num_scales=2, epochs=2, seed=11)


@pytest.fixture
def sphere_scene():
    return SceneSpec(
        seed=3, width=32, height=32, depth_range=(1.0, 10.0), background_tilt=0.0,
        primitives=(PrimitiveSpec(kind="sphere", center=(0.0, 0.0, 4.0), size=1.0),))
