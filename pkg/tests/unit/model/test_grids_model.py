"""Unit tests for grids_model.py"""
import numpy as np
import pytest

from ssidepth.errors import InvalidArgumentError, InvalidInputError, SsiDepthError
from ssidepth.model.grids_model import (
    CameraIntrinsics,
    ChannelStack,
    NormalGrid,
    PixelPair,
    PointCloud,
    ScalarGrid,
    ValidMask,
)


# ===== ScalarGrid =====

def test_scalar_grid_from_flat_is_row_major():
    """Flat index r * width + c lands at data[r, c]."""
    g = ScalarGrid.from_flat(3, 2, [0, 1, 2, 3, 4, 5])
    assert g.width == 3 and g.height == 2
    assert g.data[1, 0] == 3.0
    assert g.flat[4] == g.data[1, 1]


def test_scalar_grid_length_mismatch():
    """A flat buffer of the wrong length is rejected."""
    with pytest.raises(InvalidArgumentError, match="does not match 2x2"):
        ScalarGrid.from_flat(2, 2, [1.0, 2.0, 3.0])


@pytest.mark.parametrize("bad", [np.zeros((0, 3)), np.zeros((2, 0)), np.zeros(4), np.zeros((2, 2, 2))])
def test_scalar_grid_rejects_bad_shapes(bad):
    """Zero dimensions and non-2-D arrays are invalid arguments."""
    with pytest.raises(InvalidArgumentError):
        ScalarGrid(bad)


def test_scalar_grid_rejects_non_finite():
    """NaN and infinity are not valid samples."""
    with pytest.raises(InvalidInputError):
        ScalarGrid(np.array([[1.0, np.nan]]))
    with pytest.raises(InvalidInputError):
        ScalarGrid(np.array([[np.inf, 1.0]]))


def test_scalar_grid_is_read_only():
    """Stored data is a frozen private copy."""
    src = np.ones((2, 2))
    g = ScalarGrid(src)
    src[0, 0] = 9.0
    assert g.data[0, 0] == 1.0
    with pytest.raises(ValueError):
        g.data[0, 0] = 2.0


def test_errors_share_a_base():
    """Every domain error derives from SsiDepthError."""
    with pytest.raises(SsiDepthError):
        ScalarGrid(np.zeros(3))


# ===== ValidMask =====

def test_mask_indices_are_ascending_flat():
    """Valid pixel indices are flat and ascending."""
    m = ValidMask.from_flat(2, 2, [True, False, True, True])
    assert m.count == 3
    assert list(m.indices()) == [0, 2, 3]


def test_mask_intersection_requires_same_shape():
    """Masks of different sizes do not combine."""
    with pytest.raises(InvalidArgumentError):
        ValidMask.all_valid(2, 2) & ValidMask.all_valid(3, 2)


def test_mask_require_shape_names_sizes():
    """The shape check reports both sizes."""
    with pytest.raises(InvalidArgumentError, match="3x2"):
        ValidMask.all_valid(3, 2).require_shape(ScalarGrid.filled(2, 2, 1.0))


# ===== NormalGrid =====

def test_normals_must_be_unit_length():
    """Non-unit vectors fail validation."""
    vec = np.zeros((2, 2, 3))
    vec[..., 2] = -2.0
    with pytest.raises(InvalidInputError):
        NormalGrid(vec)


def test_normals_ingest_normalizes_and_faces_camera():
    """Ingest normalizes, flips z > 0 and marks zero vectors invalid."""
    vec = np.zeros((1, 3, 3))
    vec[0, 0] = (0.0, 0.0, 3.0)
    vec[0, 1] = (0.0, 0.0, -0.5)
    n = NormalGrid.ingest(vec)
    np.testing.assert_allclose(n.vectors[0, 0], (0.0, 0.0, -1.0))
    np.testing.assert_allclose(n.vectors[0, 1], (0.0, 0.0, -1.0))
    assert list(n.valid.flags[0]) == [True, True, False]


def test_normals_invalid_pixels_hold_placeholder():
    """Invalid pixels are stored as (0, 0, -1)."""
    vec = np.full((1, 2, 3), np.nan)
    n = NormalGrid(vec, ValidMask(np.array([[False, False]])))
    np.testing.assert_array_equal(n.vectors[0, 1], (0.0, 0.0, -1.0))


# ===== ChannelStack =====

def test_channel_stack_from_grids_checks_dimensions():
    """All channels must share dimensions."""
    with pytest.raises(InvalidArgumentError):
        ChannelStack.from_grids([ScalarGrid.filled(2, 2, 0.0), ScalarGrid.filled(3, 2, 0.0)])
    stack = ChannelStack.from_grids([ScalarGrid.filled(2, 3, 1.0), ScalarGrid.filled(2, 3, 3.0)])
    assert stack.channels == 2 and stack.shape == (3, 2)
    assert stack.grayscale().data[0, 0] == 2.0


# ===== CameraIntrinsics =====

def test_default_intrinsics():
    """Default focal is half the perimeter sum and the principal point is centred."""
    k = CameraIntrinsics.default_for(64, 32)
    assert k.fx == k.fy == 48.0
    assert (k.cx, k.cy) == (31.5, 15.5)


def test_intrinsics_reject_non_positive_focal():
    """Focal lengths must be positive."""
    with pytest.raises(InvalidArgumentError):
        CameraIntrinsics(fx=0.0, fy=1.0, cx=0.0, cy=0.0)


def test_intrinsics_from_mapping_missing_key():
    """A missing key is named in the error."""
    with pytest.raises(InvalidArgumentError, match="'cy'"):
        CameraIntrinsics.from_mapping({"fx": 1, "fy": 1, "cx": 0})


def test_intrinsics_halved_tracks_pixel_centres():
    """Pooled pixel k is centred on fine pixel 2k + 0.5."""
    k = CameraIntrinsics(fx=10.0, fy=20.0, cx=3.5, cy=7.5).halved()
    assert (k.fx, k.fy, k.cx, k.cy) == (5.0, 10.0, 1.5, 3.5)


# ===== PixelPair / PointCloud =====

def test_pixel_pair_validation():
    """Pairs must be distinct and in range."""
    with pytest.raises(InvalidArgumentError):
        PixelPair(1, 1).validate(4)
    with pytest.raises(InvalidArgumentError):
        PixelPair(0, 4).validate(4)
    PixelPair(0, 3).validate(4)


def test_point_cloud_requires_positive_depth():
    """Points behind the camera are rejected."""
    with pytest.raises(InvalidInputError):
        PointCloud(np.array([[0.0, 0.0, -1.0]]))
    cloud = PointCloud(np.array([[0.0, 0.0, 1.0], [1.0, 1.0, 2.0]]), colors=np.array([[1, 2, 3], [4, 5, 6]]))
    assert len(cloud) == 2
    assert cloud.colors.dtype == np.uint8
