"""Surface-normal losses on depth predictions: cosine agreement and
multi-scale normal-gradient matching."""
from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from .base import LossInputs, LossStrategy
from ..core.grids import check_pyramid, pool2, pool2_adjoint
from ..errors import InvalidArgumentError
from ..geometry import trace_normals
from ..model.grids_model import CameraIntrinsics, NormalGrid, ScalarGrid, ValidMask
from ..model.loss_model import LossReport


def _check(pred_depth: ScalarGrid, gt_normals: NormalGrid, mask: ValidMask) -> None:
    if gt_normals.shape != pred_depth.shape:
        raise InvalidArgumentError("ground-truth normals and depth differ in size")
    mask.require_shape(pred_depth)


def normals_cosine_loss(pred_depth: ScalarGrid, gt_normals: NormalGrid, intrinsics: CameraIntrinsics,
                        mask: ValidMask, stencil: str = "central") -> LossReport:
    """Mean of (1 - n . n_gt) over pixels where both normals are defined."""
    _check(pred_depth, gt_normals, mask)
    trace = trace_normals(pred_depth.data, mask.flags, intrinsics, stencil)
    used = trace.valid & gt_normals.valid.flags
    n = int(np.count_nonzero(used))
    if n == 0:
        zero = np.zeros(pred_depth.shape)
        return LossReport(value=0.0, grad=ScalarGrid(zero), components={"n": 0.0}, weights={"n": 1.0},
                          diagnostics={"valid_pixels": 0})
    dots = np.sum(trace.normals * gt_normals.vectors, axis=2)
    value = float(np.sum(1.0 - dots[used]) / n)
    grad_normals = np.where(used[..., None], -gt_normals.vectors / n, 0.0)
    grad = trace.vjp(grad_normals)
    return LossReport(value=value, grad=ScalarGrid(np.where(mask.flags, grad, 0.0)),
                      components={"n": value}, weights={"n": 1.0},
                      diagnostics={"valid_pixels": n, "stencil": stencil})


def gradient_sse_arrays(pred: np.ndarray, gt: np.ndarray, flags: np.ndarray) -> Tuple[float, np.ndarray]:
    """Sum over valid forward-difference sites and components of (grad gt - grad pred)^2.

    Arrays are (h, w, k); returns (sse, d(sse)/d(pred)).
    """
    sx = (flags[:, 1:] & flags[:, :-1])[..., None]
    sy = (flags[1:, :] & flags[:-1, :])[..., None]
    ex = np.where(sx, (gt[:, 1:] - gt[:, :-1]) - (pred[:, 1:] - pred[:, :-1]), 0.0)
    ey = np.where(sy, (gt[1:, :] - gt[:-1, :]) - (pred[1:, :] - pred[:-1, :]), 0.0)
    sse = float(np.sum(ex ** 2) + np.sum(ey ** 2))
    grad = np.zeros_like(pred)
    grad[:, 1:] -= 2.0 * ex
    grad[:, :-1] += 2.0 * ex
    grad[1:, :] -= 2.0 * ey
    grad[:-1, :] += 2.0 * ey
    return sse, grad


def normal_gradient_sse(pred: NormalGrid, gt: NormalGrid, mask: Optional[ValidMask] = None) -> float:
    """Single-scale inner sum of the normal-gradient loss."""
    if pred.shape != gt.shape:
        raise InvalidArgumentError("normal fields differ in size")
    flags = pred.valid.flags & gt.valid.flags
    if mask is not None:
        mask.require_shape(pred.component(0))
        flags = flags & mask.flags
    sse, _ = gradient_sse_arrays(pred.vectors, gt.vectors, flags)
    return sse


def _gt_normal_pyramid(gt: NormalGrid, flags: np.ndarray, num_scales: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    vec = gt.vectors
    valid = gt.valid.flags & flags
    levels = [(vec, valid)]
    for _ in range(1, num_scales):
        pooled, counts = pool2(vec, valid)
        length = np.linalg.norm(pooled, axis=2)
        valid = (counts > 0) & (length > 1e-12)
        vec = np.where(valid[..., None], pooled / np.where(valid, length, 1.0)[..., None], 0.0)
        levels.append((vec, valid))
    return levels


def normals_gradient_loss(pred_depth: ScalarGrid, gt_normals: NormalGrid, intrinsics: CameraIntrinsics,
                          mask: ValidMask, num_scales: int, stencil: str = "central") -> LossReport:
    """Per scale: squared differences of forward-difference normal gradients divided by that
    scale's valid pixel count; value = mean over scales. Coarser normals come from the
    box-downsampled depth with halved intrinsics."""
    _check(pred_depth, gt_normals, mask)
    check_pyramid(pred_depth.width, pred_depth.height, num_scales)

    depth_levels = [(pred_depth.data, mask.flags, None)]
    for _ in range(1, num_scales):
        prev, prev_flags, _ = depth_levels[-1]
        pooled, counts = pool2(prev, prev_flags)
        depth_levels.append((pooled, counts > 0, counts))
    gt_levels = _gt_normal_pyramid(gt_normals, mask.flags, num_scales)

    intr = intrinsics
    traces = []
    terms = []
    for k in range(num_scales):
        depth_k, flags_k, _ = depth_levels[k]
        trace = trace_normals(depth_k, flags_k, intr, stencil)
        gt_vec, gt_valid = gt_levels[k]
        used = trace.valid & gt_valid
        sse, g = gradient_sse_arrays(trace.normals, gt_vec, used)
        traces.append(trace)
        terms.append((sse, g, int(np.count_nonzero(used))))
        intr = intr.halved()

    active = [k for k in range(num_scales) if terms[k][2] > 0]
    per_level = [terms[k][0] / terms[k][2] if terms[k][2] > 0 else 0.0 for k in range(num_scales)]
    if not active:
        return LossReport(value=0.0, grad=ScalarGrid(np.zeros(pred_depth.shape)),
                          components={"ng": 0.0}, weights={"ng": 1.0},
                          diagnostics={"num_scales": num_scales, "per_level": per_level})
    m = len(active)
    value = float(sum(per_level[k] for k in active) / m)

    acc = None
    for k in reversed(range(num_scales)):
        sse, g, count = terms[k]
        local = traces[k].vjp(g / (count * m)) if count > 0 else np.zeros(depth_levels[k][0].shape)
        if acc is None:
            acc = local
        else:
            acc = local + pool2_adjoint(acc, depth_levels[k][1], depth_levels[k + 1][2])
    grad = np.where(mask.flags, acc, 0.0)
    return LossReport(value=value, grad=ScalarGrid(grad), components={"ng": value}, weights={"ng": 1.0},
                      diagnostics={"num_scales": num_scales, "per_level": per_level, "stencil": stencil})


class NormalsCosineLoss(LossStrategy):
    @staticmethod
    def label() -> str:
        return "normals"

    @staticmethod
    def description() -> str:
        return "cosine disagreement of normals from predicted depth"

    @staticmethod
    def evaluate(inputs: LossInputs) -> LossReport:
        return normals_cosine_loss(inputs.pred, inputs.require_normals(), inputs.resolved_intrinsics(),
                                   inputs.resolved_mask(), inputs.settings.stencil)


class NormalsGradientLoss(LossStrategy):
    @staticmethod
    def label() -> str:
        return "ng"

    @staticmethod
    def description() -> str:
        return "multi-scale normal-gradient matching"

    @staticmethod
    def evaluate(inputs: LossInputs) -> LossReport:
        s = inputs.settings
        return normals_gradient_loss(inputs.pred, inputs.require_normals(), inputs.resolved_intrinsics(),
                                     inputs.resolved_mask(), s.num_scales, s.stencil)
