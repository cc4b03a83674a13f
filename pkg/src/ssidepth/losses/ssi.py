from __future__ import annotations

import numpy as np

from .base import LossInputs, LossStrategy, check_inputs
from ..align import fit_scale_shift
from ..model.grids_model import ScalarGrid, ValidMask
from ..model.loss_model import LossReport


def ssi_loss(pred: ScalarGrid, gt: ScalarGrid, mask: ValidMask) -> LossReport:
    """Mean squared residual after the least-squares scale/shift fit of pred onto gt.

    The fitted (a, b) is stationary in the loss, so differentiating through it
    leaves 2 * a * r / N; with a clamped the shift is still optimal and the
    same expression holds.
    """
    check_inputs(pred, gt, mask)
    fit = fit_scale_shift(pred, gt, mask)
    n = fit.count
    resid = np.where(mask.flags, fit.a * pred.data + fit.b - gt.data, 0.0)
    value = float(fit.residual_sse / n)
    grad = 2.0 * fit.a * resid / n
    return LossReport(
        value=value,
        grad=ScalarGrid(grad),
        components={"ssi": value},
        weights={"ssi": 1.0},
        diagnostics={"fit": fit.to_mapping(), "valid_pixels": n})


class SsiLoss(LossStrategy):
    @staticmethod
    def label() -> str:
        return "ssi"

    @staticmethod
    def description() -> str:
        return "scale-and-shift-invariant mean squared error (disparity)"

    @staticmethod
    def evaluate(inputs: LossInputs) -> LossReport:
        return ssi_loss(inputs.pred, inputs.require_gt(), inputs.resolved_mask())
