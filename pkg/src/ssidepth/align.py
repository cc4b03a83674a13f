"""Closed-form least-squares alignment: scale and shift, scale only, and
the high-to-low resolution frame alignment used when assembling SI inputs."""
from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from .constants import AFFINE_MIN_SCALE
from .errors import DegenerateFitError, InsufficientDataError, InvalidArgumentError
from .model.fit_model import AffineFit
from .model.grids_model import ScalarGrid, ValidMask

log = logging.getLogger(__name__)


def _valid_samples(pred: ScalarGrid, target: ScalarGrid, mask: ValidMask) -> Tuple[np.ndarray, np.ndarray]:
    if pred.shape != target.shape:
        raise InvalidArgumentError(
            f"grids differ in size ({pred.width}x{pred.height} vs {target.width}x{target.height})")
    mask.require_shape(pred)
    return pred.data[mask.flags], target.data[mask.flags]


def fit_arrays(p: np.ndarray, t: np.ndarray) -> AffineFit:
    """Two-pass mean-centred least squares for t ~ a*p + b with a clamped positive."""
    n = p.size
    if n < 2:
        raise InsufficientDataError(f"scale/shift fit needs at least 2 valid pixels (got {n})")
    if np.ptp(p) == 0:
        raise DegenerateFitError("prediction is constant over valid pixels")
    mp = p.mean()
    mt = t.mean()
    dp = p - mp
    dt = t - mt
    a = float(np.dot(dp, dt) / np.dot(dp, dp))
    clamped = not a > 0
    if clamped:
        log.debug("unconstrained scale %.6g <= 0, clamping to %g", a, AFFINE_MIN_SCALE)
        a = AFFINE_MIN_SCALE
    b = float(mt - a * mp)
    resid = a * p + b - t
    return AffineFit(a=a, b=b, residual_sse=float(np.dot(resid, resid)), clamped=clamped, count=int(n))


def fit_scale_shift(pred: ScalarGrid, target: ScalarGrid, mask: ValidMask) -> AffineFit:
    p, t = _valid_samples(pred, target, mask)
    return fit_arrays(p, t)


def apply_affine(grid: ScalarGrid, fit: AffineFit) -> ScalarGrid:
    return ScalarGrid(fit.a * grid.data + fit.b)


def fit_scale_only(reference: ScalarGrid, target: ScalarGrid, mask: ValidMask) -> float:
    """c = argmin_s sum (s * target - reference)^2 over valid pixels; c may take any sign."""
    t, r = _valid_samples(target, reference, mask)
    denom = float(np.dot(t, t))
    if denom == 0:
        raise DegenerateFitError("scale-only fit target is zero over valid pixels")
    return float(np.dot(t, r) / denom)


def align_mean_scale(high: ScalarGrid, low: ScalarGrid, mask: ValidMask) -> ScalarGrid:
    """Express the high-resolution map in the low-resolution map's scale/shift frame."""
    return apply_affine(high, fit_scale_shift(high, low, mask))
