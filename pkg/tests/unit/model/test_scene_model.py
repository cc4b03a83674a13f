"""Unit tests for scene_model.py"""
import json

import pytest

from ssidepth.errors import InvalidArgumentError
from ssidepth.model.scene_model import PrimitiveSpec, SceneSpec


def test_scene_defaults_are_valid():
    """The default scene validates and uses default intrinsics."""
    s = SceneSpec()
    k = s.intrinsics()
    assert k.fx == 64.0 and k.cx == 31.5


def test_scene_focal_override():
    """An explicit focal replaces the default."""
    k = SceneSpec(width=10, height=10, focal=100.0).intrinsics()
    assert (k.fx, k.fy, k.cx, k.cy) == (100.0, 100.0, 4.5, 4.5)


@pytest.mark.parametrize("kwargs", [
    {"depth_range": (0.0, 1.0)},
    {"depth_range": (2.0, 2.0)},
    {"width": 1},
    {"primitive_count": 0},
    {"kinds": ("cone",)},
    {"kinds": ()},
    {"noise_sigma": -0.1},
    {"background_tilt": 1.0},
    {"focal": 0.0},
])
def test_scene_validation(kwargs):
    """Out-of-range scene parameters are invalid arguments."""
    with pytest.raises(InvalidArgumentError):
        SceneSpec(**kwargs)


@pytest.mark.parametrize("kwargs", [
    {"kind": "torus", "center": (0, 0, 1), "size": 1.0},
    {"kind": "plane", "center": (0, 0, 1), "size": 0.0},
    {"kind": "box", "center": (0, 0, -1), "size": 1.0},
])
def test_primitive_validation(kwargs):
    """Primitives must be known, sized and in front of the camera."""
    with pytest.raises(InvalidArgumentError):
        PrimitiveSpec(**kwargs)


def test_scene_mapping_round_trip():
    """to_mapping and from_mapping agree, explicit primitives included."""
    s = SceneSpec(seed=5, width=20, height=12, kinds=("sphere",), noise_sigma=0.01,
                  primitives=(PrimitiveSpec(kind="box", center=(0.1, 0.2, 3.0), size=0.5),))
    again = SceneSpec.from_mapping(json.loads(s.to_json()))
    assert again == s


def test_scene_mapping_keeps_background_albedo():
    """A custom background colour survives the JSON round trip."""
    s = SceneSpec(seed=2, albedo_background=(0.1, 0.2, 0.3))
    again = SceneSpec.from_mapping(json.loads(s.to_json()))
    assert again.albedo_background == (0.1, 0.2, 0.3)
    assert again == s
