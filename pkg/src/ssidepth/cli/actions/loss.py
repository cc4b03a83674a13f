from __future__ import annotations

import logging
from argparse import Namespace

import numpy as np

from .common import ActionOutput, load_grid, load_mask, load_normals, parse_intrinsics
from ...fileio.pfm import write_grid
from ...losses import LossInputs, get_loss, gradient_check
from ...model.settings_model import ToolSettings

log = logging.getLogger(__name__)


def run_loss(args: Namespace, settings: ToolSettings) -> ActionOutput:
    strategy = get_loss(args.name)
    pred = load_grid(args.pred, "prediction")
    inputs = LossInputs(
        pred=pred,
        gt=load_grid(args.gt, "ground truth"),
        mask=load_mask(args.mask, pred),
        gt_normals=load_normals(args.gt_normals),
        intrinsics=parse_intrinsics(args.intrinsics),
        settings=settings)
    report = strategy.evaluate(inputs)
    result = {
        "name": strategy.label(),
        **report.to_mapping(),
        "grad_l1": float(np.abs(report.grad.data).sum()),
        "grad_max_abs": float(np.abs(report.grad.data).max()),
    }
    if args.gradcheck:
        err = gradient_check(lambda p: strategy.evaluate(inputs.with_pred(p)), pred,
                             epsilon=args.epsilon, seed=settings.seed)
        result["gradcheck"] = {"epsilon": args.epsilon, "max_relative_error": err}
        log.info("gradient check: max relative error %.3g", err)
    if args.out_grad:
        write_grid(args.out_grad, report.grad)
    return result, {"pairs": settings.seed}
