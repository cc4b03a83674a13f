from __future__ import annotations

from argparse import Namespace

from .common import ActionOutput, load_grid, load_mask
from ...align import apply_affine, fit_scale_only, fit_scale_shift
from ...errors import PreconditionError
from ...fileio.pfm import write_grid
from ...model.grids_model import ScalarGrid
from ...model.settings_model import ToolSettings


def run_align(args: Namespace, settings: ToolSettings) -> ActionOutput:
    pred = load_grid(args.pred, "prediction")
    gt = load_grid(args.gt, "ground truth")
    if gt is None:
        raise PreconditionError("align needs --gt")
    mask = load_mask(args.mask, pred)
    if args.mode == "ssi":
        fit = fit_scale_shift(pred, gt, mask)
        aligned = apply_affine(pred, fit)
        result = {"mode": "ssi", **fit.to_mapping()}
    else:
        c = fit_scale_only(reference=gt, target=pred, mask=mask)
        aligned = ScalarGrid(c * pred.data)
        result = {"mode": "si", "scale": c}
    result["valid_pixels"] = mask.count
    if args.out:
        write_grid(args.out, aligned)
    return result, {}
