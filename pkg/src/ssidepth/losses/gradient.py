"""Multi-scale gradient matching on the residual pyramid, and the L1 depth loss."""
from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .base import LossInputs, LossStrategy, check_inputs, kink_through_fit, through_fit
from ..align import fit_arrays
from ..core.grids import check_pyramid, masked_pyramid, pool2_adjoint
from ..model.grids_model import ScalarGrid, ValidMask
from ..model.loss_model import LossReport


def _forward_sites(flags: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    sx = flags[:, 1:] & flags[:, :-1]
    sy = flags[1:, :] & flags[:-1, :]
    return sx, sy


def _level_term(resid: np.ndarray, flags: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray, int]:
    """(sum of |forward differences| over valid sites, d(sum)/d(resid), kink per pixel, valid pixels)."""
    sx, sy = _forward_sites(flags)
    dx = resid[:, 1:] - resid[:, :-1]
    dy = resid[1:, :] - resid[:-1, :]
    total = float(np.sum(np.abs(dx[sx])) + np.sum(np.abs(dy[sy])))

    gx = np.where(sx, np.sign(dx), 0.0)
    gy = np.where(sy, np.sign(dy), 0.0)
    grad = np.zeros_like(resid)
    grad[:, 1:] += gx
    grad[:, :-1] -= gx
    grad[1:, :] += gy
    grad[:-1, :] -= gy

    kink = np.full(resid.shape, np.inf)
    kx = np.where(sx, np.abs(dx), np.inf)
    ky = np.where(sy, np.abs(dy), np.inf)
    kink[:, 1:] = np.minimum(kink[:, 1:], kx)
    kink[:, :-1] = np.minimum(kink[:, :-1], kx)
    kink[1:, :] = np.minimum(kink[1:, :], ky)
    kink[:-1, :] = np.minimum(kink[:-1, :], ky)
    return total, grad, kink, int(np.count_nonzero(flags))


def _upsample_to(kink: np.ndarray, level: int, shape: Tuple[int, int]) -> np.ndarray:
    out = np.full(shape, np.inf)
    f = 2 ** level
    up = np.repeat(np.repeat(kink, f, axis=0), f, axis=1)
    out[:up.shape[0], :up.shape[1]] = up
    return out


def residual_gradient_loss(resid: np.ndarray, flags: np.ndarray, num_scales: int
                           ) -> Tuple[float, np.ndarray, np.ndarray, List[float]]:
    """Mean over levels of (sum |dx R| + sum |dy R|) / valid pixels at that level.

    Returns (value, d(value)/d(resid) at level 0, kink distance at level 0, per-level values).
    """
    h, w = resid.shape
    check_pyramid(w, h, num_scales)
    levels = masked_pyramid(np.where(flags, resid, 0.0), flags, num_scales)
    terms = [_level_term(data, lflags) for data, lflags, _ in levels]
    used = [k for k, t in enumerate(terms) if t[3] > 0]
    per_level = [t[0] / t[3] if t[3] > 0 else 0.0 for t in terms]
    if not used:
        return 0.0, np.zeros_like(resid), np.full(resid.shape, np.inf), per_level
    m = len(used)
    value = float(sum(per_level[k] for k in used) / m)

    acc = None
    for k in reversed(range(num_scales)):
        total, grad, _, count = terms[k]
        local = grad / (count * m) if count > 0 else np.zeros_like(grad)
        acc = local if acc is None else local + pool2_adjoint(acc, levels[k][1], levels[k + 1][2])
    kink = np.full(resid.shape, np.inf)
    for k in used:
        kink = np.minimum(kink, _upsample_to(terms[k][2], k, resid.shape))
    return value, np.where(flags, acc, 0.0), kink, per_level


def multiscale_gradient_loss(pred: ScalarGrid, gt: ScalarGrid, mask: ValidMask, num_scales: int) -> LossReport:
    check_inputs(pred, gt, mask)
    value, grad, kink, per_level = residual_gradient_loss(pred.data - gt.data, mask.flags, num_scales)
    return LossReport(
        value=value,
        grad=ScalarGrid(grad),
        components={"ssig": value},
        weights={"ssig": 1.0},
        diagnostics={"num_scales": num_scales, "per_level": per_level},
        kink_distance=kink)


def aligned_gradient_loss(pred: ScalarGrid, gt: ScalarGrid, mask: ValidMask, num_scales: int) -> LossReport:
    """Gradient matching on a*pred + b with (a, b) from the scale/shift fit, differentiated through the fit."""
    check_inputs(pred, gt, mask)
    flags = mask.flags
    fit = fit_arrays(pred.data[flags], gt.data[flags])
    aligned = fit.a * pred.data + fit.b
    value, g, kink_q, per_level = residual_gradient_loss(aligned - gt.data, flags, num_scales)
    diagnostics = {"num_scales": num_scales, "per_level": per_level, "fit": fit.to_mapping()}
    return LossReport(
        value=value,
        grad=ScalarGrid(through_fit(g, pred, gt, flags, fit)),
        components={"ssig": value},
        weights={"ssig": 1.0},
        diagnostics=diagnostics,
        kink_distance=kink_through_fit(kink_q, pred, gt, flags, fit))


def l1_depth_loss(pred: ScalarGrid, gt_scaled: ScalarGrid, mask: ValidMask) -> LossReport:
    check_inputs(pred, gt_scaled, mask)
    n = mask.count
    if n == 0:
        return LossReport(value=0.0, grad=ScalarGrid(np.zeros(pred.shape)), components={"d": 0.0},
                          weights={"d": 1.0})
    diff = np.where(mask.flags, pred.data - gt_scaled.data, 0.0)
    value = float(np.sum(np.abs(diff)) / n)
    return LossReport(
        value=value,
        grad=ScalarGrid(np.sign(diff) / n),
        components={"d": value},
        weights={"d": 1.0},
        kink_distance=np.where(mask.flags, np.abs(diff), np.inf))


class GradientMatchingLoss(LossStrategy):
    @staticmethod
    def label() -> str:
        return "ssig"

    @staticmethod
    def description() -> str:
        return "multi-scale gradient matching (post-alignment unless ssig_aligned is off)"

    @staticmethod
    def evaluate(inputs: LossInputs) -> LossReport:
        s = inputs.settings
        fn = aligned_gradient_loss if s.ssig_aligned else multiscale_gradient_loss
        return fn(inputs.pred, inputs.require_gt(), inputs.resolved_mask(), s.num_scales)


class L1DepthLoss(LossStrategy):
    @staticmethod
    def label() -> str:
        return "l1"

    @staticmethod
    def description() -> str:
        return "mean absolute depth error against scale-adjusted ground truth"

    @staticmethod
    def evaluate(inputs: LossInputs) -> LossReport:
        return l1_depth_loss(inputs.pred, inputs.require_gt(), inputs.resolved_mask())
