from __future__ import annotations

from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .base import LossInputs, LossStrategy, check_inputs, kink_through_fit, min_kink, through_fit
from .gradient import aligned_gradient_loss, l1_depth_loss, multiscale_gradient_loss, residual_gradient_loss
from .normals import normals_cosine_loss, normals_gradient_loss
from .ordinal import sparse_ordinal_loss
from .ssi import ssi_loss
from ..align import apply_affine, fit_scale_shift
from ..constants import GRADIENT_SCALES
from ..errors import InvalidInputError
from ..model.grids_model import CameraIntrinsics, NormalGrid, ScalarGrid, ValidMask
from ..model.loss_model import LossReport, LossWeights, PairSampleConfig

Term = Tuple[str, float, Callable[[], LossReport]]


def combine(terms: List[Term], shape: Tuple[int, int]) -> LossReport:
    """Weighted sum of named terms in the given order; zero-weight terms are not evaluated."""
    value = 0.0
    grad = np.zeros(shape)
    components: Dict[str, float] = {}
    weights: Dict[str, float] = {}
    diagnostics: Dict[str, object] = {}
    kink: Optional[np.ndarray] = None
    for name, weight, evaluate in terms:
        weights[name] = float(weight)
        if weight == 0:
            components[name] = 0.0
            continue
        report = evaluate()
        components[name] = report.value
        value += weight * report.value
        grad += weight * report.grad.data
        if report.diagnostics:
            diagnostics[name] = report.diagnostics
        kink = min_kink(kink, report.kink_distance)
    return LossReport(value=float(value), grad=ScalarGrid(grad), components=components,
                      weights=weights, diagnostics=diagnostics, kink_distance=kink)


def aligned_pair_loss(pred: ScalarGrid, gt: ScalarGrid, mask: ValidMask, cfg: PairSampleConfig,
                      pair_loss: Callable[..., LossReport] = sparse_ordinal_loss) -> LossReport:
    """Pair loss on a*pred + b, averaged over the sampled pairs and differentiated through the fit.

    The standalone pair losses are sums over pairs on the raw prediction. In the
    network objective the pair term sees the prediction in the ground truth's
    scale/shift frame, and its weight is per pair.
    """
    check_inputs(pred, gt, mask)
    flags = mask.flags
    fit = fit_scale_shift(pred, gt, mask)
    report = pair_loss(apply_affine(pred, fit), gt, mask, cfg)
    scale = 1.0 / cfg.pair_count
    value = report.value * scale
    (name,) = report.components
    kink = None
    if report.kink_distance is not None:
        kink = kink_through_fit(report.kink_distance, pred, gt, flags, fit)
    return LossReport(
        value=value,
        grad=ScalarGrid(through_fit(scale * report.grad.data, pred, gt, flags, fit)),
        components={name: value},
        weights={name: 1.0},
        diagnostics={**report.diagnostics, "fit": fit.to_mapping(), "per_pair": True},
        kink_distance=kink)


def ssi_net_loss(pred: ScalarGrid, gt: ScalarGrid, mask: ValidMask, weights: LossWeights,
                 cfg: PairSampleConfig, num_scales: int = GRADIENT_SCALES,
                 ssig_aligned: bool = True, ordinal: Callable[..., LossReport] = sparse_ordinal_loss) -> LossReport:
    """lambda_ssi * L_ssi + lambda_so * L_so + lambda_ssig * L_ssig.

    L_so is the per-pair mean on the aligned prediction (see aligned_pair_loss).
    `ordinal` swaps the pair term (the ranking loss for the naive combination).
    """
    check_inputs(pred, gt, mask)
    gradient_fn = aligned_gradient_loss if ssig_aligned else multiscale_gradient_loss
    pair_name = "so" if ordinal is sparse_ordinal_loss else "ranking"
    return combine([
        ("ssi", weights.lambda_ssi, lambda: ssi_loss(pred, gt, mask)),
        (pair_name, weights.lambda_so, lambda: aligned_pair_loss(pred, gt, mask, cfg, ordinal)),
        ("ssig", weights.lambda_ssig, lambda: gradient_fn(pred, gt, mask, num_scales)),
    ], pred.shape)


def inverse_depth_gradient_loss(pred_depth: ScalarGrid, gt_depth: ScalarGrid, mask: ValidMask,
                                num_scales: int) -> LossReport:
    """Multi-scale gradient matching of 1/pred against 1/gt, differentiated with respect to depth."""
    check_inputs(pred_depth, gt_depth, mask)
    flags = mask.flags
    if np.any(pred_depth.data[flags] <= 0) or np.any(gt_depth.data[flags] <= 0):
        raise InvalidInputError("depth must be positive at every valid pixel")
    safe_p = np.where(flags, pred_depth.data, 1.0)
    safe_g = np.where(flags, gt_depth.data, 1.0)
    resid = np.where(flags, 1.0 / safe_p - 1.0 / safe_g, 0.0)
    value, g, kink, per_level = residual_gradient_loss(resid, flags, num_scales)
    grad = np.where(flags, -g / safe_p ** 2, 0.0)
    # a depth step eps moves the disparity by about eps / z^2
    kink_depth = kink * safe_p ** 2 / 2.0
    return LossReport(value=value, grad=ScalarGrid(grad), components={"dg": value}, weights={"dg": 1.0},
                      diagnostics={"num_scales": num_scales, "per_level": per_level},
                      kink_distance=kink_depth)


def si_net_loss(pred_depth: ScalarGrid, gt_depth: ScalarGrid, gt_normals: Optional[NormalGrid],
                intrinsics: CameraIntrinsics, mask: ValidMask, weights: LossWeights,
                num_scales: int = GRADIENT_SCALES, stencil: str = "central") -> LossReport:
    """lambda_d * L_d + lambda_dg * L_dg + lambda_n * L_n + lambda_ng * L_ng on depth predictions."""
    check_inputs(pred_depth, gt_depth, mask)
    if np.any(pred_depth.data[mask.flags] <= 0):
        raise InvalidInputError("predicted depth must be positive at every valid pixel")
    needs_normals = weights.lambda_n > 0 or weights.lambda_ng > 0
    if needs_normals and gt_normals is None:
        raise InvalidInputError("normal terms are weighted but no ground-truth normals were given")
    return combine([
        ("d", weights.lambda_d, lambda: l1_depth_loss(pred_depth, gt_depth, mask)),
        ("dg", weights.lambda_dg, lambda: inverse_depth_gradient_loss(pred_depth, gt_depth, mask, num_scales)),
        ("n", weights.lambda_n, lambda: normals_cosine_loss(pred_depth, gt_normals, intrinsics, mask, stencil)),
        ("ng", weights.lambda_ng,
         lambda: normals_gradient_loss(pred_depth, gt_normals, intrinsics, mask, num_scales, stencil)),
    ], pred_depth.shape)


class SsiNetLoss(LossStrategy):
    @staticmethod
    def label() -> str:
        return "ssi-net"

    @staticmethod
    def description() -> str:
        return "weighted SSI-stage objective: ssi + sparse ordinal + gradient matching"

    @staticmethod
    def evaluate(inputs: LossInputs) -> LossReport:
        s = inputs.settings
        return ssi_net_loss(inputs.pred, inputs.require_gt(), inputs.resolved_mask(), s.weights,
                            s.pair_config(), s.num_scales, s.ssig_aligned)


class SiNetLoss(LossStrategy):
    @staticmethod
    def label() -> str:
        return "si-net"

    @staticmethod
    def description() -> str:
        return "weighted SI-stage objective on depth: L1 + inverse-depth gradients + normals"

    @staticmethod
    def evaluate(inputs: LossInputs) -> LossReport:
        s = inputs.settings
        return si_net_loss(inputs.pred, inputs.require_gt(), inputs.gt_normals, inputs.resolved_intrinsics(),
                           inputs.resolved_mask(), s.weights, s.num_scales, s.stencil)
