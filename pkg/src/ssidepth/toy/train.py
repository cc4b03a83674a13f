from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from tqdm import tqdm

from .data import TrainingSample
from .net import ToyNet, default_channels
from .optim import OptimizerState, adam_step
from .recipes import HELDOUT_METRICS, Recipe
from ..errors import CheckpointError, DegenerateFitError, InvalidArgumentError, InvalidInputError, \
    NonFiniteGradientError, SsiDepthError, TrainingDivergedError
from ..fileio.checkpoint import load_checkpoint
from ..model.settings_model import ToolSettings
from ..utils import derive_seed, progress_enabled

log = logging.getLogger(__name__)


@dataclass(slots=True)
class EpochRecord:
    epoch: int
    train_loss: float
    components: Dict[str, float]
    heldout: Dict[str, Optional[float]]
    correct_pair_gradient_l1: Optional[float] = None

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "components": dict(self.components),
            "heldout": dict(self.heldout),
            "correct_pair_gradient_l1": self.correct_pair_gradient_l1,
        }


@dataclass(slots=True)
class TrainResult:
    net: ToyNet
    recipe: str
    epochs: int
    seed: int
    log: List[EpochRecord] = field(default_factory=list)

    @property
    def final(self) -> Optional[EpochRecord]:
        return self.log[-1] if self.log else None

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "recipe": self.recipe,
            "epochs": self.epochs,
            "seed": self.seed,
            "network": self.net.config(),
            "log": [r.to_mapping() for r in self.log],
        }


def pair_seed(seed: int, sample_index: int) -> int:
    """Pair-sampling seed for one training image; the same in every epoch."""
    return derive_seed(seed, sample_index)


def evaluate_heldout(net: ToyNet, recipe: Recipe, heldout: Sequence[TrainingSample],
                     settings: ToolSettings) -> Dict[str, Optional[float]]:
    """Mean held-out metrics; an image whose alignment fails is left out of the mean."""
    sums = {k: 0.0 for k in HELDOUT_METRICS}
    counted = 0
    for sample in heldout:
        pred = net.predict(recipe.inputs(sample))
        try:
            values = recipe.evaluate(pred, sample, settings)
        except SsiDepthError as e:
            log.warning("held-out scene %d skipped: %s", sample.scene.spec.seed, e)
            continue
        for k in HELDOUT_METRICS:
            sums[k] += values[k]
        counted += 1
    if not counted:
        return {k: None for k in HELDOUT_METRICS}
    return {k: sums[k] / counted for k in HELDOUT_METRICS}


def _correct_pair_l1(diagnostics: Dict[str, Any]) -> Optional[float]:
    for key in ("so", "ranking"):
        if key in diagnostics:
            return float(diagnostics[key].get("correct_pair_gradient_l1", 0.0))
    return None


def train(net: ToyNet, dataset: Sequence[TrainingSample], recipe: Recipe,
          settings: Optional[ToolSettings] = None, epochs: Optional[int] = None,
          heldout: Sequence[TrainingSample] = (), seed: Optional[int] = None) -> TrainResult:
    """Batch-size-1 Adam training; the network is updated in place and returned in the result."""
    s = settings or ToolSettings()
    epochs = s.epochs if epochs is None else int(epochs)
    seed = s.seed if seed is None else int(seed)
    if not dataset:
        raise InvalidArgumentError("training needs a non-empty dataset")
    if epochs < 0:
        raise InvalidArgumentError("epochs must be >= 0")
    if net.in_channels != recipe.in_channels():
        raise InvalidArgumentError(
            f"recipe {recipe.label()!r} feeds {recipe.in_channels()} channel(s), network takes {net.in_channels}")

    state = OptimizerState(learning_rate=s.learning_rate)
    result = TrainResult(net=net, recipe=recipe.label(), epochs=epochs, seed=seed)
    log.info("training recipe %s for %d epoch(s) on %d scene(s)", recipe.label(), epochs, len(dataset))

    for epoch in tqdm(range(epochs), desc=f"   {recipe.label()}", disable=not progress_enabled(log)):
        total = 0.0
        components: Dict[str, float] = {}
        pair_l1: Optional[float] = None
        for idx, sample in enumerate(dataset):
            inputs = recipe.inputs(sample)
            try:
                pred = net.forward(inputs)
                report = recipe.loss(pred, sample, s, pair_seed(seed, idx))
                if not math.isfinite(report.value):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}, scene {idx}", [r.to_mapping() for r in result.log])
                grads = net.backward(inputs, report.grad)
                adam_step(state, net.params, grads)
            except (InvalidInputError, DegenerateFitError, NonFiniteGradientError) as e:
                raise TrainingDivergedError(
                    f"epoch {epoch}, scene {idx}: {e}", [r.to_mapping() for r in result.log]) from e
            total += report.value
            for name, value in report.components.items():
                components[name] = components.get(name, 0.0) + value
            l1 = _correct_pair_l1(report.diagnostics)
            if l1 is not None:
                pair_l1 = (pair_l1 or 0.0) + l1
        n = len(dataset)
        record = EpochRecord(
            epoch=epoch,
            train_loss=total / n,
            components={k: v / n for k, v in components.items()},
            heldout=evaluate_heldout(net, recipe, heldout, s) if heldout else {},
            correct_pair_gradient_l1=pair_l1)
        result.log.append(record)
        log.debug("epoch %d: loss %.6g heldout %s", epoch, record.train_loss, record.heldout)

    if not net.all_finite():
        raise TrainingDivergedError("parameters became non-finite", [r.to_mapping() for r in result.log])
    return result


def checkpoint_config(result: TrainResult, settings: ToolSettings, recipe: Recipe) -> Dict[str, Any]:
    return {
        "network": result.net.config(),
        "recipe": recipe.label(),
        "stage": recipe.stage(),
        "epochs": result.epochs,
        "seed": result.seed,
        "settings": settings.to_report_mapping(),
    }


def initial_net(recipe: Recipe, seed: int) -> ToyNet:
    return ToyNet(default_channels(recipe.in_channels()), seed=derive_seed(seed, 0xC0DE))


def load_trained_net(path, stage: str) -> ToyNet:
    """Network from a checkpoint written by train-toy; the recorded stage must match."""
    ckpt = load_checkpoint(path)
    found = ckpt.config.get("stage")
    if found != stage:
        raise CheckpointError(f"{path}: checkpoint is for the {found!r} stage, expected {stage!r}")
    try:
        return ToyNet.from_parameters(ckpt.config.get("network", {}), ckpt.params)
    except InvalidArgumentError as e:
        raise CheckpointError(f"{path}: {e}") from e
