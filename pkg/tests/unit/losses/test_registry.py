"""Unit tests for the named loss registry"""
import pytest

from ssidepth.errors import InvalidArgumentError, PreconditionError
from ssidepth.geometry import default_intrinsics, normals_from_depth
from ssidepth.losses import LossInputs, get_loss, load_losses, loss_names
from ssidepth.model.grids_model import ScalarGrid
from ssidepth.model.settings_model import ToolSettings


def test_registry_names():
    """Every named loss is registered once, in a stable order."""
    assert loss_names() == ["ssi", "so", "ranking", "ssig", "l1", "normals", "ng", "ssi-net", "si-net"]


def test_descriptions_are_present():
    """Each strategy describes itself."""
    for strategy in load_losses():
        assert strategy.description()


def test_unknown_loss():
    """Unknown names list the valid ones."""
    with pytest.raises(InvalidArgumentError, match="ssi-net"):
        get_loss("huber")


@pytest.mark.parametrize("name", ["ssi", "so", "ranking", "ssig", "l1", "ssi-net"])
def test_losses_need_ground_truth(name):
    """Losses against a ground-truth grid fail cleanly without one."""
    with pytest.raises(PreconditionError):
        get_loss(name).evaluate(LossInputs(pred=ScalarGrid.filled(8, 8, 1.0)))


@pytest.mark.parametrize("name", ["normals", "ng"])
def test_normal_losses_need_normals(name):
    """Normal losses fail cleanly without ground-truth normals."""
    with pytest.raises(PreconditionError):
        get_loss(name).evaluate(LossInputs(pred=ScalarGrid.filled(8, 8, 1.0)))


@pytest.mark.parametrize("name", [n for n in loss_names() if n != "ranking"])
def test_losses_vanish_at_ground_truth(name, rng):
    """Each named loss except ranking vanishes when the prediction equals the ground truth."""
    # no two pixels closer than the ordinal delta
    gt = ScalarGrid(2.0 + 0.011 * rng.permutation(256).reshape(16, 16))
    normals = normals_from_depth(gt, default_intrinsics(16, 16))
    settings = ToolSettings(pair_count=100, num_scales=1)
    report = get_loss(name).evaluate(LossInputs(pred=gt, gt=gt, gt_normals=normals, settings=settings))
    assert report.value == pytest.approx(0.0, abs=1e-10)


def test_ranking_is_positive_at_ground_truth(rng):
    """The ranking loss still charges correctly ordered pairs."""
    gt = ScalarGrid(rng.uniform(1.0, 5.0, size=(8, 8)))
    report = get_loss("ranking").evaluate(LossInputs(pred=gt, gt=gt, settings=ToolSettings(pair_count=50)))
    assert report.value > 0.0
