"""Unit tests for losses/normals.py"""
import numpy as np
import pytest

from ssidepth.errors import InvalidArgumentError, InvalidInputError
from ssidepth.geometry import default_intrinsics, normals_from_depth
from ssidepth.losses import gradient_check, normal_gradient_sse, normals_cosine_loss, normals_gradient_loss
from ssidepth.losses.normals import gradient_sse_arrays
from ssidepth.model.grids_model import NormalGrid, ScalarGrid, ValidMask


@pytest.fixture
def bumpy_depth(rng):
    def _make(size: int = 16) -> ScalarGrid:
        return ScalarGrid(rng.uniform(2.0, 2.1, size=(size, size)))

    return _make


# ==========================================================================
# cosine loss
# ==========================================================================

@pytest.mark.parametrize("stencil", ["central", "sobel"])
def test_matching_normals_cost_nothing(bumpy_depth, stencil):
    """Normals computed from the same depth agree everywhere."""
    depth = bumpy_depth()
    intr = default_intrinsics(16, 16)
    gt = normals_from_depth(depth, intr, stencil=stencil)
    report = normals_cosine_loss(depth, gt, intr, ValidMask.like(depth), stencil)
    assert report.value == pytest.approx(0.0, abs=1e-12)


def test_fronto_parallel_plane_against_camera_normal():
    """A constant-depth plane matches (0, 0, -1) exactly."""
    depth = ScalarGrid.filled(8, 8, 4.0)
    gt = NormalGrid.constant(8, 8, (0.0, 0.0, -1.0))
    assert normals_cosine_loss(depth, gt, default_intrinsics(8, 8), ValidMask.like(depth)).value == \
        pytest.approx(0.0, abs=1e-15)


def test_antipodal_normals_cost_two():
    """Opposite normals give 1 - (-1) = 2 per pixel."""
    depth = ScalarGrid.filled(8, 8, 4.0)
    gt = NormalGrid.constant(8, 8, (0.0, 0.0, 1.0))
    report = normals_cosine_loss(depth, gt, default_intrinsics(8, 8), ValidMask.like(depth))
    assert report.value == pytest.approx(2.0)


def test_invalid_gt_normals_are_skipped():
    """Pixels with invalid ground-truth normals do not count."""
    depth = ScalarGrid.filled(4, 4, 1.0)
    vec = np.tile([0.0, 0.0, 1.0], (4, 4, 1))
    valid = np.zeros((4, 4), dtype=bool)
    gt = NormalGrid(vec, ValidMask(valid))
    report = normals_cosine_loss(depth, gt, default_intrinsics(4, 4), ValidMask.like(depth))
    assert report.value == 0.0
    assert report.diagnostics["valid_pixels"] == 0


def test_cosine_rejects_non_positive_depth():
    """Depth must be positive at valid pixels."""
    depth = ScalarGrid(np.array([[1.0, -1.0], [1.0, 1.0]]))
    with pytest.raises(InvalidInputError):
        normals_cosine_loss(depth, NormalGrid.constant(2, 2, (0, 0, -1)), default_intrinsics(2, 2),
                            ValidMask.like(depth))


def test_size_mismatch():
    """Normals and depth must agree in size."""
    depth = ScalarGrid.filled(4, 4, 1.0)
    with pytest.raises(InvalidArgumentError):
        normals_cosine_loss(depth, NormalGrid.constant(3, 4, (0, 0, -1)), default_intrinsics(4, 4),
                            ValidMask.like(depth))


@pytest.mark.parametrize("stencil", ["central", "sobel"])
def test_cosine_gradient_matches_finite_differences(bumpy_depth, stencil):
    """The chain rule through normalization and stencils is right."""
    depth, other = bumpy_depth(), bumpy_depth()
    intr = default_intrinsics(16, 16)
    gt = normals_from_depth(other, intr)
    mask = ValidMask.like(depth)
    err = gradient_check(lambda d: normals_cosine_loss(d, gt, intr, mask, stencil), depth, samples=96, seed=4)
    assert err < 1e-5


# ==========================================================================
# normal-gradient loss
# ==========================================================================

def test_reproduced_normals_cost_nothing(bumpy_depth):
    """Depth whose normals are the ground truth gives zero at a single scale."""
    depth = bumpy_depth()
    intr = default_intrinsics(16, 16)
    mask = ValidMask.like(depth)
    gt = normals_from_depth(depth, intr)
    report = normals_gradient_loss(depth, gt, intr, mask, 1)
    assert report.value == pytest.approx(0.0, abs=1e-20)


def test_two_constant_fields_cost_nothing():
    """Constant normal fields have zero gradients, whatever the constants."""
    depth = ScalarGrid.filled(16, 16, 2.0)
    gt = NormalGrid.constant(16, 16, (0.6, 0.0, -0.8))
    report = normals_gradient_loss(depth, gt, default_intrinsics(16, 16), ValidMask.like(depth), 3)
    assert report.value == pytest.approx(0.0, abs=1e-20)


def test_single_row_hand_enumeration():
    """Component rows (0,0,1,1) vs (0,1,1,1): (0-1)^2 + (1-0)^2 + 0 = 2."""
    gt = np.array([0.0, 0.0, 1.0, 1.0]).reshape(1, 4, 1)
    pred = np.array([0.0, 1.0, 1.0, 1.0]).reshape(1, 4, 1)
    sse, grad = gradient_sse_arrays(pred, gt, np.ones((1, 4), dtype=bool))
    assert sse == 2.0
    np.testing.assert_allclose(grad[0, :, 0], [-2.0, 4.0, -2.0, 0.0])


def test_normal_gradient_sse_on_grids():
    """The grid helper sums over all three components."""
    flat = NormalGrid.constant(3, 1, (0.0, 0.0, -1.0))
    vec = flat.vectors.copy()
    vec[0, 1] = (0.0, 0.6, -0.8)
    bumped = NormalGrid(vec)
    assert normal_gradient_sse(bumped, flat) == pytest.approx(2 * (0.36 + 0.04))


def test_normal_gradient_loss_gradient_matches_finite_differences(bumpy_depth):
    """Gradients through the depth pyramid agree with central differences."""
    depth, other = bumpy_depth(), bumpy_depth()
    intr = default_intrinsics(16, 16)
    gt = normals_from_depth(other, intr)
    mask = ValidMask.like(depth)
    err = gradient_check(lambda d: normals_gradient_loss(d, gt, intr, mask, 2), depth, samples=96, seed=8)
    assert err < 1e-5
