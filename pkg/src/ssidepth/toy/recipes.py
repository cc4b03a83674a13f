"""Training recipes: which input a network sees and which objective it is trained on.

SSI-stage recipes read RGB and predict disparity in (0, 1). SI-stage recipes
read the assembled image + SSI channels and predict inverse depth whose scale
is tied to O_L through the ground-truth scale fix.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List

import numpy as np

from .data import TrainingSample
from .. import constants as C
from ..errors import InvalidArgumentError, PreconditionError
from ..losses.combined import si_net_loss, ssi_net_loss
from ..losses.ordinal import ranking_loss, sparse_ordinal_loss
from ..metrics import evaluate_all
from ..model.grids_model import ChannelStack, ScalarGrid
from ..model.loss_model import LossReport, LossWeights
from ..model.settings_model import ToolSettings
from ..pipeline import fix_gt_scale, si_input_for

HELDOUT_METRICS = ("ord", "d3r", "abs_rel")


class Recipe(ABC):
    @staticmethod
    @abstractmethod
    def label() -> str: ...

    @staticmethod
    @abstractmethod
    def description() -> str: ...

    @staticmethod
    @abstractmethod
    def stage() -> str: ...

    @staticmethod
    @abstractmethod
    def in_channels() -> int: ...

    @staticmethod
    def needs_ssi() -> bool:
        return False

    @abstractmethod
    def weights(self, base: LossWeights) -> LossWeights: ...

    @abstractmethod
    def inputs(self, sample: TrainingSample) -> ChannelStack: ...

    @abstractmethod
    def loss(self, pred: ScalarGrid, sample: TrainingSample, settings: ToolSettings, pair_seed: int) -> LossReport:
        """Objective and its gradient with respect to the network output."""

    @abstractmethod
    def evaluate(self, pred: ScalarGrid, sample: TrainingSample, settings: ToolSettings) -> Dict[str, Any]: ...


# ---------------------------------------------------------------------------
# SSI stage
# ---------------------------------------------------------------------------

class _SsiRecipe(Recipe, ABC):
    ordinal: Callable[..., LossReport] = staticmethod(sparse_ordinal_loss)

    @staticmethod
    def stage() -> str:
        return "ssi"

    @staticmethod
    def in_channels() -> int:
        return 3

    def inputs(self, sample: TrainingSample) -> ChannelStack:
        return sample.rgb_stack

    def loss(self, pred: ScalarGrid, sample: TrainingSample, settings: ToolSettings, pair_seed: int) -> LossReport:
        return ssi_net_loss(pred, sample.gt_disparity, sample.mask, self.weights(settings.weights),
                            settings.pair_config().with_seed(pair_seed), settings.num_scales,
                            settings.ssig_aligned, self.ordinal)

    def evaluate(self, pred: ScalarGrid, sample: TrainingSample, settings: ToolSettings) -> Dict[str, Any]:
        report = evaluate_all(pred, sample.gt_depth, sample.mask, mode="ssi", settings=settings,
                              pred_space="disparity")
        return {k: report["metrics"][k] for k in HELDOUT_METRICS}


class SsiRecipe(_SsiRecipe):
    @staticmethod
    def label() -> str:
        return "ssi"

    @staticmethod
    def description() -> str:
        return "shift-and-scale invariant loss with gradient matching"

    def weights(self, base: LossWeights) -> LossWeights:
        return base.replace(lambda_so=0.0)


class RankingRecipe(_SsiRecipe):
    ordinal = staticmethod(ranking_loss)

    @staticmethod
    def label() -> str:
        return "ranking"

    @staticmethod
    def description() -> str:
        return "ranking loss alone"

    def weights(self, base: LossWeights) -> LossWeights:
        return base.replace(lambda_ssi=0.0, lambda_ssig=0.0)


class SsiRankingRecipe(_SsiRecipe):
    ordinal = staticmethod(ranking_loss)

    @staticmethod
    def label() -> str:
        return "ssi+ranking"

    @staticmethod
    def description() -> str:
        return "naive combination of the SSI loss and the ranking loss"

    def weights(self, base: LossWeights) -> LossWeights:
        return base


class SsiOrdinalRecipe(_SsiRecipe):
    @staticmethod
    def label() -> str:
        return "ssi+so"

    @staticmethod
    def description() -> str:
        return "SSI loss with the sparse ordinal loss"

    def weights(self, base: LossWeights) -> LossWeights:
        return base


# ---------------------------------------------------------------------------
# SI stage
# ---------------------------------------------------------------------------

class _SiRecipe(Recipe, ABC):
    @staticmethod
    def stage() -> str:
        return "si"

    @staticmethod
    def in_channels() -> int:
        return 5

    @staticmethod
    def needs_ssi() -> bool:
        return True

    def weights(self, base: LossWeights) -> LossWeights:
        return base

    @staticmethod
    def _ssi(sample: TrainingSample):
        if sample.ssi is None:
            raise PreconditionError("SI recipes need samples built with SSI channels")
        return sample.ssi

    def inputs(self, sample: TrainingSample) -> ChannelStack:
        return si_input_for(self.in_channels(), sample.rgb, self._ssi(sample))

    def scaled_gt_depth(self, sample: TrainingSample, settings: ToolSettings) -> ScalarGrid:
        gt_inv = fix_gt_scale(sample.gt_disparity, self._ssi(sample).o_low, sample.mask, settings.clamp_scale)
        return ScalarGrid(1.0 / np.maximum(gt_inv.data, C.DEPTH_FLOOR))

    def loss(self, pred: ScalarGrid, sample: TrainingSample, settings: ToolSettings, pair_seed: int) -> LossReport:
        inv = np.maximum(pred.data, C.DEPTH_FLOOR)
        depth = ScalarGrid(1.0 / inv)
        report = si_net_loss(depth, self.scaled_gt_depth(sample, settings), sample.gt_normals,
                             sample.intrinsics, sample.mask, self.weights(settings.weights),
                             settings.num_scales, settings.stencil)
        grad = np.where(pred.data > C.DEPTH_FLOOR, -report.grad.data / inv ** 2, 0.0)
        return LossReport(value=report.value, grad=ScalarGrid(grad), components=report.components,
                          weights=report.weights, diagnostics=report.diagnostics)

    def evaluate(self, pred: ScalarGrid, sample: TrainingSample, settings: ToolSettings) -> Dict[str, Any]:
        depth = ScalarGrid(1.0 / np.maximum(pred.data, C.DEPTH_FLOOR))
        report = evaluate_all(depth, sample.gt_depth, sample.mask, mode="si", settings=settings)
        return {k: report["metrics"][k] for k in HELDOUT_METRICS}


class SiRecipe(_SiRecipe):
    @staticmethod
    def label() -> str:
        return "si"

    @staticmethod
    def description() -> str:
        return "RGB + O_L + O_H input, full SI objective"


class SiRgbRecipe(_SiRecipe):
    @staticmethod
    def label() -> str:
        return "si-rgb"

    @staticmethod
    def description() -> str:
        return "RGB-only input, full SI objective"

    @staticmethod
    def in_channels() -> int:
        return 3


class SiNoHighRecipe(_SiRecipe):
    @staticmethod
    def label() -> str:
        return "si-no-high"

    @staticmethod
    def description() -> str:
        return "O_H channel replaced by O_L"

    def inputs(self, sample: TrainingSample) -> ChannelStack:
        stack = super().inputs(sample).data.copy()
        stack[4] = stack[3]
        return ChannelStack(stack)


class SiNoNormalRecipe(_SiRecipe):
    @staticmethod
    def label() -> str:
        return "si-no-normal"

    @staticmethod
    def description() -> str:
        return "full input without the normal loss terms"

    def weights(self, base: LossWeights) -> LossWeights:
        return base.replace(lambda_n=0.0, lambda_ng=0.0)


def load_recipes() -> List[Recipe]:
    return [
        SsiRecipe(),
        RankingRecipe(),
        SsiRankingRecipe(),
        SsiOrdinalRecipe(),
        SiRgbRecipe(),
        SiRecipe(),
        SiNoHighRecipe(),
        SiNoNormalRecipe(),
    ]


def recipe_names() -> List[str]:
    return [r.label() for r in load_recipes()]


def get_recipe(name: str) -> Recipe:
    by_label = {r.label(): r for r in load_recipes()}
    try:
        return by_label[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown recipe {name!r} (expected one of {', '.join(by_label)})")
