from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..errors import InvalidArgumentError, PreconditionError
from ..model.fit_model import AffineFit
from ..model.grids_model import CameraIntrinsics, NormalGrid, ScalarGrid, ValidMask
from ..model.loss_model import LossReport
from ..model.settings_model import ToolSettings


def check_inputs(pred: ScalarGrid, gt: ScalarGrid, mask: ValidMask) -> None:
    if pred.shape != gt.shape:
        raise InvalidArgumentError(
            f"prediction is {pred.width}x{pred.height} but ground truth is {gt.width}x{gt.height}")
    mask.require_shape(pred)


def min_kink(*kinks: Optional[np.ndarray]) -> Optional[np.ndarray]:
    present = [k for k in kinks if k is not None]
    if not present:
        return None
    out = present[0]
    for k in present[1:]:
        out = np.minimum(out, k)
    return out


def _fit_jacobian(p: np.ndarray, t: np.ndarray, fit: AffineFit) -> Tuple[np.ndarray, np.ndarray]:
    """d(a)/d(p_k) and d(b)/d(p_k) of the scale/shift fit over the valid samples."""
    n = p.size
    dp = p - p.mean()
    if fit.clamped:
        da = np.zeros(n)
    else:
        da = (t - t.mean() - 2.0 * fit.a * dp) / float(np.dot(dp, dp))
    db = -p.mean() * da - fit.a / n
    return da, db


def through_fit(g: np.ndarray, pred: ScalarGrid, gt: ScalarGrid, flags: np.ndarray, fit: AffineFit) -> np.ndarray:
    """Gradient with respect to pred of a loss evaluated on a*pred + b, given its gradient g there."""
    p = pred.data[flags]
    da, db = _fit_jacobian(p, gt.data[flags], fit)
    gv = g[flags]
    grad = np.zeros(pred.shape)
    grad[flags] = fit.a * gv + float(np.dot(gv, p)) * da + float(np.sum(gv)) * db
    return grad


def kink_through_fit(kink: np.ndarray, pred: ScalarGrid, gt: ScalarGrid, flags: np.ndarray,
                     fit: AffineFit) -> np.ndarray:
    """Map kink distances on the aligned grid back to distances in pred."""
    p = pred.data[flags]
    da, db = _fit_jacobian(p, gt.data[flags], fit)
    # a pixel moves its own aligned value by a*eps and every other one by at most coupling*eps
    coupling = np.zeros(pred.shape)
    coupling[flags] = np.abs(da) * float(np.max(np.abs(p))) + np.abs(db)
    global_min = float(np.min(kink))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.fmin(kink / (fit.a + 2.0 * coupling), global_min / (2.0 * coupling))


@dataclass(frozen=True, slots=True)
class LossInputs:
    """Arguments a named loss may draw from; `pred` is disparity or depth depending on the loss."""
    pred: ScalarGrid
    gt: Optional[ScalarGrid] = None
    mask: Optional[ValidMask] = None
    gt_normals: Optional[NormalGrid] = None
    intrinsics: Optional[CameraIntrinsics] = None
    settings: ToolSettings = field(default_factory=ToolSettings)

    def resolved_mask(self) -> ValidMask:
        return self.mask if self.mask is not None else ValidMask.like(self.pred)

    def resolved_intrinsics(self) -> CameraIntrinsics:
        if self.intrinsics is not None:
            return self.intrinsics
        return CameraIntrinsics.default_for(self.pred.width, self.pred.height)

    def require_gt(self) -> ScalarGrid:
        if self.gt is None:
            raise PreconditionError("this loss needs a ground-truth grid")
        return self.gt

    def require_normals(self) -> NormalGrid:
        if self.gt_normals is None:
            raise PreconditionError("this loss needs ground-truth normals")
        return self.gt_normals

    def with_pred(self, pred: ScalarGrid) -> "LossInputs":
        return LossInputs(pred=pred, gt=self.gt, mask=self.mask, gt_normals=self.gt_normals,
                          intrinsics=self.intrinsics, settings=self.settings)


class LossStrategy(ABC):
    @staticmethod
    @abstractmethod
    def label() -> str: ...

    @staticmethod
    @abstractmethod
    def description() -> str: ...

    @staticmethod
    @abstractmethod
    def evaluate(inputs: LossInputs) -> LossReport: ...
