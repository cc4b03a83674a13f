from __future__ import annotations

import logging
from argparse import Namespace
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, Optional

from .common import ActionOutput, load_grid, load_mask, load_normals, parse_intrinsics
from ...fileio.manifest import read_manifest
from ...fileio.pfm import read_grid, read_normals
from ...fileio.png import read_mask
from ...metrics import aggregate, evaluate_all
from ...model.grids_model import ValidMask
from ...model.report_model import ManifestItem
from ...model.settings_model import ToolSettings

log = logging.getLogger(__name__)


def _evaluate_item(item: ManifestItem, mode: str, pred_space: str, settings: ToolSettings) -> Dict[str, Any]:
    pred = read_grid(item.pred)
    gt = read_grid(item.gt)
    mask: Optional[ValidMask] = read_mask(item.mask) if item.mask is not None else None
    normals = read_normals(item.gt_normals) if item.gt_normals is not None else None
    report = evaluate_all(pred, gt, mask, mode, normals, item.intrinsics, settings, pred_space)
    return {"pred": item.pred.name, "gt": item.gt.name, **report}


def run_evaluate(args: Namespace, settings: ToolSettings) -> ActionOutput:
    seeds = {"ord_pairs": settings.seed}
    if args.manifest:
        items = read_manifest(args.manifest)
        log.info("evaluating %d manifest item(s) on %d thread(s)", len(items), settings.threads)
        # map keeps manifest order regardless of completion order
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            per_image = list(pool.map(lambda it: _evaluate_item(it, args.mode, args.pred_space, settings), items))
        return {"per_image": per_image, "aggregate": aggregate(per_image)}, seeds

    pred = load_grid(args.pred, "prediction")
    gt = load_grid(args.gt, "ground truth")
    mask = load_mask(args.mask, pred)
    report = evaluate_all(pred, gt, mask, args.mode, load_normals(args.gt_normals),
                          parse_intrinsics(args.intrinsics), settings, args.pred_space)
    return {"per_image": [report], "aggregate": aggregate([report])}, seeds
