"""Unit tests for toy/train.py"""
import dataclasses

import numpy as np
import pytest

from ssidepth.constants import DEFAULT_SEED
from ssidepth.errors import CheckpointError, DegenerateFitError, InvalidArgumentError, InvalidInputError, \
    TrainingDivergedError
from ssidepth.fileio.checkpoint import save_checkpoint
from ssidepth.model.grids_model import ScalarGrid
from ssidepth.model.loss_model import LossReport
from ssidepth.toy.data import build_dataset
from ssidepth.toy.net import ToyNet
from ssidepth.toy.recipes import HELDOUT_METRICS, SsiRecipe, get_recipe
from ssidepth.toy.train import checkpoint_config, initial_net, load_trained_net, pair_seed, train


class NanLossRecipe(SsiRecipe):
    def loss(self, pred, sample, settings, pair_seed):
        return LossReport(value=float("nan"), grad=ScalarGrid(np.zeros(pred.shape)))


class NanGradientRecipe(SsiRecipe):
    def loss(self, pred, sample, settings, pair_seed):
        return LossReport(value=1.0, grad=ScalarGrid(pred.data * np.nan))


class OverflowGradientRecipe(SsiRecipe):
    def loss(self, pred, sample, settings, pair_seed):
        return LossReport(value=1.0, grad=ScalarGrid(np.full(pred.shape, np.finfo(np.float64).max)))


def small_net(recipe, seed=1):
    return ToyNet([recipe.in_channels(), 4, 1], seed=seed)


# ==========================================================================
# training loop
# ==========================================================================

def test_pair_seed_is_per_image():
    """Each image keeps one pair seed across epochs."""
    assert pair_seed(5, 0) == pair_seed(5, 0)
    assert pair_seed(5, 0) != pair_seed(5, 1)


def test_zero_learning_rate_is_a_fixed_point(ssi_samples, tiny_settings):
    """lr = 0 keeps parameters and the logged loss constant."""
    recipe = get_recipe("ssi+so")
    net = small_net(recipe)
    before = {k: v.copy() for k, v in net.params.items()}
    settings = dataclasses.replace(tiny_settings, learning_rate=0.0)
    result = train(net, ssi_samples, recipe, settings, epochs=3)
    losses = [r.train_loss for r in result.log]
    assert losses[0] == losses[1] == losses[2]
    for name, value in before.items():
        np.testing.assert_array_equal(net.params[name], value)


def test_log_records_every_epoch(ssi_samples, tiny_settings):
    """One record per epoch with components and the pair-gradient diagnostic."""
    recipe = get_recipe("ssi+so")
    result = train(small_net(recipe), ssi_samples, recipe, tiny_settings, epochs=2, heldout=ssi_samples[:1])
    assert [r.epoch for r in result.log] == [0, 1]
    final = result.final
    assert set(final.components) == {"ssi", "so", "ssig"}
    assert final.correct_pair_gradient_l1 is not None
    assert tuple(final.heldout) == HELDOUT_METRICS
    mapping = result.to_mapping()
    assert mapping["recipe"] == "ssi+so"
    assert len(mapping["log"]) == 2


def test_ssi_recipe_without_pairs_has_no_pair_diagnostic(ssi_samples, tiny_settings):
    """Recipes that skip the pair term report no pair-gradient diagnostic."""
    recipe = get_recipe("ssi")
    result = train(small_net(recipe), ssi_samples, recipe, tiny_settings, epochs=1)
    assert result.final.correct_pair_gradient_l1 is None


def test_training_is_deterministic(ssi_samples, tiny_settings):
    """Same seed, same data, same log."""
    recipe = get_recipe("ssi+so")
    a = train(small_net(recipe), ssi_samples, recipe, tiny_settings, epochs=2)
    b = train(small_net(recipe), ssi_samples, recipe, tiny_settings, epochs=2)
    assert [r.train_loss for r in a.log] == [r.train_loss for r in b.log]


def test_si_training_runs(si_samples, tiny_settings):
    """The SI stage trains on the assembled five-channel input."""
    recipe = get_recipe("si")
    result = train(small_net(recipe), si_samples, recipe, tiny_settings, epochs=1)
    assert np.isfinite(result.final.train_loss)
    assert set(result.final.components) == {"d", "dg", "n", "ng"}


def test_non_finite_loss_diverges(ssi_samples, tiny_settings):
    """A NaN loss stops training with the log so far."""
    recipe = NanLossRecipe()
    with pytest.raises(TrainingDivergedError) as exc:
        train(small_net(recipe), ssi_samples, recipe, tiny_settings, epochs=2)
    assert exc.value.epoch_log == []


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_gradient_diverges(ssi_samples, tiny_settings):
    """A parameter gradient that overflows is reported as divergence and leaves parameters untouched."""
    recipe = OverflowGradientRecipe()
    net = small_net(recipe)
    before = {k: v.copy() for k, v in net.params.items()}
    with pytest.raises(TrainingDivergedError, match="non-finite gradient"):
        train(net, ssi_samples, recipe, tiny_settings, epochs=1)
    for name, value in before.items():
        np.testing.assert_array_equal(net.params[name], value)


def test_non_finite_loss_gradient_diverges(ssi_samples, tiny_settings):
    """A loss gradient that cannot form a finite grid stops training."""
    recipe = NanGradientRecipe()
    with pytest.raises(TrainingDivergedError, match="epoch 0, scene 0") as exc:
        train(small_net(recipe), ssi_samples, recipe, tiny_settings, epochs=1)
    assert isinstance(exc.value.__cause__, InvalidInputError)


def test_non_finite_output_diverges(ssi_samples, tiny_settings):
    """A network whose output is not finite stops training with the log so far."""
    recipe = get_recipe("ssi")
    net = small_net(recipe)
    net.params["conv0.bias"][:] = np.nan
    with pytest.raises(TrainingDivergedError) as exc:
        train(net, ssi_samples, recipe, tiny_settings, epochs=1)
    assert exc.value.epoch_log == []


def test_constant_output_diverges(ssi_samples, tiny_settings):
    """A constant prediction leaves no scale to fit, which stops training."""
    recipe = get_recipe("ssi")
    net = small_net(recipe)
    net.params["conv1.weight"][:] = 0.0
    with pytest.raises(TrainingDivergedError, match="constant") as exc:
        train(net, ssi_samples, recipe, tiny_settings, epochs=1)
    assert isinstance(exc.value.__cause__, DegenerateFitError)


def test_ssi_loss_decreases_over_first_epochs(tiny_settings):
    """On a single scene the SSI recipe lowers the training loss at every one of the first five epochs."""
    recipe = get_recipe("ssi")
    settings = dataclasses.replace(tiny_settings, seed=DEFAULT_SEED)
    scene = build_dataset(1, size=32, seed=DEFAULT_SEED, settings=settings)
    result = train(initial_net(recipe, DEFAULT_SEED), scene, recipe, settings, epochs=5)
    losses = [r.train_loss for r in result.log]
    assert all(later < earlier for earlier, later in zip(losses, losses[1:]))


@pytest.mark.parametrize("kwargs", [{"epochs": -1}, {"dataset": []}])
def test_training_arguments(ssi_samples, tiny_settings, kwargs):
    """Negative epochs and empty datasets are rejected."""
    recipe = get_recipe("ssi")
    args = {"dataset": ssi_samples, **kwargs}
    with pytest.raises(InvalidArgumentError):
        train(small_net(recipe), args.pop("dataset"), recipe, tiny_settings, **args)


def test_channel_mismatch(ssi_samples, tiny_settings):
    """The network must take the recipe's input width."""
    with pytest.raises(InvalidArgumentError):
        train(ToyNet([5, 1]), ssi_samples, get_recipe("ssi"), tiny_settings, epochs=1)


@pytest.mark.slow
def test_training_lowers_the_loss(ssi_samples, tiny_settings):
    """A few epochs at a larger learning rate improve the training loss."""
    recipe = get_recipe("ssi+so")
    settings = dataclasses.replace(tiny_settings, learning_rate=1e-2)
    result = train(initial_net(recipe, 3), ssi_samples, recipe, settings, epochs=15)
    assert result.final.train_loss < result.log[0].train_loss


# ==========================================================================
# checkpoints
# ==========================================================================

def test_checkpoint_round_trip(tmp_path, ssi_samples, tiny_settings):
    """A trained network reloads with identical predictions."""
    recipe = get_recipe("ssi")
    result = train(small_net(recipe), ssi_samples, recipe, tiny_settings, epochs=1)
    path = save_checkpoint(tmp_path / "net.ckpt", result.net.params,
                           checkpoint_config(result, tiny_settings, recipe))
    loaded = load_trained_net(path, "ssi")
    inputs = recipe.inputs(ssi_samples[0])
    np.testing.assert_array_equal(loaded.predict(inputs).data, result.net.predict(inputs).data)


def test_checkpoint_stage_must_match(tmp_path, ssi_samples, tiny_settings):
    """An SSI checkpoint cannot be loaded as the SI predictor."""
    recipe = get_recipe("ssi")
    result = train(small_net(recipe), ssi_samples, recipe, tiny_settings, epochs=0)
    path = save_checkpoint(tmp_path / "net.ckpt", result.net.params,
                           checkpoint_config(result, tiny_settings, recipe))
    with pytest.raises(CheckpointError, match="'ssi' stage"):
        load_trained_net(path, "si")


def test_initial_net_uses_default_architecture():
    """Recipes start from the default widths for their input."""
    net = initial_net(get_recipe("si"), 7)
    assert net.channels == [5, 16, 16, 16, 1]
    np.testing.assert_array_equal(net.params["conv0.weight"], initial_net(get_recipe("si"), 7).params["conv0.weight"])
