"""Zero-shot evaluation battery: depth errors, ordinal agreement, boundary
quality (D3R and DBE variants) and surface-orientation accuracy."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from . import constants as C
from .align import apply_affine, fit_scale_only, fit_scale_shift
from .errors import InsufficientDataError, InvalidArgumentError, InvalidInputError
from .geometry import normals_from_depth
from .losses.pairs import sample_pairs
from .model.grids_model import CameraIntrinsics, NormalGrid, ScalarGrid, ValidMask
from .model.loss_model import PairSampleConfig
from .model.settings_model import ToolSettings

log = logging.getLogger(__name__)

MODES = ("ssi", "si")
PRED_SPACES = ("depth", "disparity")


def _samples(pred: ScalarGrid, gt: ScalarGrid, mask: Optional[ValidMask]) -> Tuple[np.ndarray, np.ndarray, ValidMask]:
    if pred.shape != gt.shape:
        raise InvalidArgumentError(
            f"prediction is {pred.width}x{pred.height} but ground truth is {gt.width}x{gt.height}")
    mask = mask if mask is not None else ValidMask.like(gt)
    mask.require_shape(pred)
    return pred.data[mask.flags], gt.data[mask.flags], mask


def _require_any(values: np.ndarray, what: str) -> None:
    if values.size == 0:
        raise InsufficientDataError(f"{what} needs at least one valid pixel")


# ---------------------------------------------------------------------------
# depth errors
# ---------------------------------------------------------------------------

def rmse(pred: ScalarGrid, gt: ScalarGrid, mask: Optional[ValidMask] = None) -> float:
    p, g, _ = _samples(pred, gt, mask)
    _require_any(p, "rmse")
    return float(np.sqrt(np.mean((p - g) ** 2)))


def abs_rel(pred: ScalarGrid, gt: ScalarGrid, mask: Optional[ValidMask] = None) -> float:
    p, g, _ = _samples(pred, gt, mask)
    _require_any(p, "abs_rel")
    if np.any(g <= 0):
        raise InvalidInputError("abs_rel needs positive ground truth at valid pixels")
    return float(np.mean(np.abs(p - g) / g))


def delta1(pred: ScalarGrid, gt: ScalarGrid, mask: Optional[ValidMask] = None,
           threshold: float = C.DELTA1_THRESHOLD) -> float:
    p, g, _ = _samples(pred, gt, mask)
    _require_any(p, "delta1")
    if np.any(p <= 0) or np.any(g <= 0):
        raise InvalidInputError("delta1 needs positive values at valid pixels")
    ratio = np.maximum(p / g, g / p)
    return float(np.mean(ratio < threshold))


# ---------------------------------------------------------------------------
# ordinal agreement
# ---------------------------------------------------------------------------

def _ratio_relation(a: np.ndarray, b: np.ndarray, tau: float) -> np.ndarray:
    """+1 when a/b >= tau, -1 when b/a >= tau, 0 (equal) otherwise."""
    ratio = a / b
    return np.where(ratio >= tau, 1, np.where(ratio <= 1.0 / tau, -1, 0))


def ordinal_error(pred: ScalarGrid, gt: ScalarGrid, mask: Optional[ValidMask] = None,
                  cfg: Optional[PairSampleConfig] = None, tau: float = C.ORD_TAU) -> float:
    """Fraction of sampled pairs whose closer/farther/equal relation disagrees with ground truth."""
    if not tau > 1:
        raise InvalidArgumentError(f"tau must be > 1 (got {tau})")
    cfg = cfg or PairSampleConfig(pair_count=C.ORD_PAIR_COUNT)
    _, _, mask = _samples(pred, gt, mask)
    pairs = sample_pairs(mask, cfg)
    p, g = pred.flat, gt.flat
    if np.any(p[mask.flat] <= 0) or np.any(g[mask.flat] <= 0):
        raise InvalidInputError("ordinal_error needs positive values at valid pixels")
    rel_gt = _ratio_relation(g[pairs.i], g[pairs.j], tau)
    rel_pred = _ratio_relation(p[pairs.i], p[pairs.j], tau)
    return float(np.mean(rel_gt != rel_pred))


# ---------------------------------------------------------------------------
# D3R variant: grid-cell medians, 4-adjacent ordinal disagreement
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class D3RResult:
    value: float
    flagged_pairs: int
    disagreeing_pairs: int
    cells_with_support: int


def _cell_medians(data: np.ndarray, flags: np.ndarray, cells: int) -> Tuple[np.ndarray, np.ndarray]:
    h, w = data.shape
    row_parts = np.array_split(np.arange(h), min(cells, h))
    col_parts = np.array_split(np.arange(w), min(cells, w))
    reps = np.zeros((len(row_parts), len(col_parts)))
    support = np.zeros(reps.shape, dtype=bool)
    for a, rows in enumerate(row_parts):
        for b, cols in enumerate(col_parts):
            block = data[np.ix_(rows, cols)][flags[np.ix_(rows, cols)]]
            if block.size:
                reps[a, b] = np.median(block)
                support[a, b] = True
    return reps, support


def d3r_details(pred: ScalarGrid, gt: ScalarGrid, mask: Optional[ValidMask] = None,
                cells: int = C.D3R_CELLS, threshold: float = C.D3R_THRESHOLD) -> D3RResult:
    _, g, mask = _samples(pred, gt, mask)
    if g.size < 2:
        raise InsufficientDataError("d3r needs at least 2 valid pixels")
    gt_reps, support = _cell_medians(gt.data, mask.flags, cells)
    pred_reps, _ = _cell_medians(pred.data, mask.flags, cells)
    if np.count_nonzero(support) < 2:
        raise InsufficientDataError("d3r needs at least 2 cells with valid pixels")
    limit = threshold * float(np.ptp(g))

    flagged = 0
    disagree = 0
    for axis in (0, 1):
        lo = [slice(None), slice(None)]
        hi = [slice(None), slice(None)]
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        both = support[tuple(lo)] & support[tuple(hi)]
        dg = gt_reps[tuple(hi)] - gt_reps[tuple(lo)]
        dp = pred_reps[tuple(hi)] - pred_reps[tuple(lo)]
        sel = both & (np.abs(dg) > limit)
        flagged += int(np.count_nonzero(sel))
        disagree += int(np.count_nonzero(sel & (np.sign(dp) != np.sign(dg))))
    value = disagree / flagged if flagged else 0.0
    return D3RResult(value=float(value), flagged_pairs=flagged, disagreeing_pairs=disagree,
                     cells_with_support=int(np.count_nonzero(support)))


def d3r(pred: ScalarGrid, gt: ScalarGrid, mask: Optional[ValidMask] = None,
        cells: int = C.D3R_CELLS, threshold: float = C.D3R_THRESHOLD) -> float:
    return d3r_details(pred, gt, mask, cells, threshold).value


# ---------------------------------------------------------------------------
# DBE variant: truncated chamfer between log-depth gradient edges
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class DBEResult:
    acc: float
    comp: float
    flags: Dict[str, bool] = field(default_factory=dict)
    pred_edge_pixels: int = 0
    gt_edge_pixels: int = 0


def depth_edges(source: ScalarGrid, mask: Optional[ValidMask] = None,
                top_fraction: float = C.DBE_TOP_FRACTION) -> np.ndarray:
    """Boolean edge map: the top fraction of forward-difference log-depth gradient magnitudes."""
    mask = mask if mask is not None else ValidMask.like(source)
    flags = mask.flags
    if np.any(source.data[flags] <= 0):
        raise InvalidInputError("edge extraction needs positive depth at valid pixels")
    logd = np.log(np.where(flags, source.data, 1.0))
    dx = np.zeros_like(logd)
    dy = np.zeros_like(logd)
    sx = flags[:, 1:] & flags[:, :-1]
    sy = flags[1:, :] & flags[:-1, :]
    dx[:, :-1] = np.where(sx, logd[:, 1:] - logd[:, :-1], 0.0)
    dy[:-1, :] = np.where(sy, logd[1:, :] - logd[:-1, :], 0.0)
    mag = np.hypot(dx, dy)
    if not np.any(flags):
        return np.zeros_like(flags)
    thr = float(np.quantile(mag[flags], 1.0 - top_fraction))
    return flags & (mag >= thr * (1.0 - C.EDGE_TIE_RTOL)) & (mag > C.EDGE_MIN_MAGNITUDE)


def _mean_truncated_distance(src: np.ndarray, dst: np.ndarray, truncation: float) -> float:
    dist = ndimage.distance_transform_edt(~dst)
    return float(np.mean(np.minimum(dist[src], truncation)))


def dbe(pred_edges_source: ScalarGrid, gt_edges_source: ScalarGrid, mask: Optional[ValidMask] = None,
        top_fraction: float = C.DBE_TOP_FRACTION, truncation: float = C.DBE_TRUNCATION) -> DBEResult:
    """acc: predicted edges to nearest gt edge; comp: gt edges to nearest predicted edge."""
    if pred_edges_source.shape != gt_edges_source.shape:
        raise InvalidArgumentError("dbe inputs differ in size")
    pe = depth_edges(pred_edges_source, mask, top_fraction)
    ge = depth_edges(gt_edges_source, mask, top_fraction)
    flags = {"no_pred_edges": not pe.any(), "no_gt_edges": not ge.any()}
    if pe.any() and ge.any():
        acc = _mean_truncated_distance(pe, ge, truncation)
        comp = _mean_truncated_distance(ge, pe, truncation)
    elif not pe.any() and not ge.any():
        # both maps agree there is no boundary
        log.debug("dbe: neither map has edges")
        acc = comp = 0.0
    else:
        acc = comp = float(truncation)
    return DBEResult(acc=acc, comp=comp, flags=flags,
                     pred_edge_pixels=int(pe.sum()), gt_edge_pixels=int(ge.sum()))


# ---------------------------------------------------------------------------
# surface orientation
# ---------------------------------------------------------------------------

def _unit_vectors(n: Union[NormalGrid, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(n, NormalGrid):
        return n.vectors, n.valid.flags
    vec = np.asarray(n, dtype=np.float64)
    if vec.ndim != 3 or vec.shape[2] != 3:
        raise InvalidArgumentError(f"normals must have shape (h, w, 3) (got {vec.shape})")
    if np.any(np.abs(np.linalg.norm(vec, axis=2) - 1.0) > C.UNIT_NORMAL_TOLERANCE):
        raise InvalidInputError("normals must be unit length")
    return vec, np.ones(vec.shape[:2], dtype=bool)


def normal_angle_metrics(pred_normals: Union[NormalGrid, np.ndarray], gt_normals: Union[NormalGrid, np.ndarray],
                         mask: Optional[ValidMask] = None,
                         t: float = C.NORMAL_ANGLE_THRESHOLD) -> Tuple[float, float]:
    """(mean angle in degrees, fraction of pixels strictly below t degrees)."""
    pv, pf = _unit_vectors(pred_normals)
    gv, gf = _unit_vectors(gt_normals)
    if pv.shape != gv.shape:
        raise InvalidArgumentError("normal fields differ in size")
    flags = pf & gf
    if mask is not None:
        if mask.shape != flags.shape:
            raise InvalidArgumentError("mask does not match the normal fields")
        flags = flags & mask.flags
    if not flags.any():
        raise InsufficientDataError("normal metrics need at least one valid pixel")
    dots = np.clip(np.sum(pv * gv, axis=2)[flags], -1.0, 1.0)
    angles = np.degrees(np.arccos(dots))
    return float(np.mean(angles)), float(np.mean(angles < t))


# ---------------------------------------------------------------------------
# full report
# ---------------------------------------------------------------------------

def _floor_depth(depth: np.ndarray, flags: np.ndarray) -> Tuple[ScalarGrid, int]:
    low = flags & (depth < C.DEPTH_FLOOR)
    return ScalarGrid(np.where(low, C.DEPTH_FLOOR, depth)), int(np.count_nonzero(low))


def evaluate_all(pred: ScalarGrid, gt: ScalarGrid, mask: Optional[ValidMask] = None, mode: str = "ssi",
                 gt_normals: Optional[NormalGrid] = None, intrinsics: Optional[CameraIntrinsics] = None,
                 settings: Optional[ToolSettings] = None, pred_space: str = "depth") -> Dict[str, Any]:
    """Align the prediction (affine for ssi, scale-only for si) and compute every applicable metric."""
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES} (got {mode!r})")
    if pred_space not in PRED_SPACES:
        raise InvalidArgumentError(f"pred_space must be one of {PRED_SPACES} (got {pred_space!r})")
    s = settings or ToolSettings()
    _, g, mask = _samples(pred, gt, mask)
    if np.any(g <= 0):
        raise InvalidInputError("ground-truth depth must be positive at valid pixels")

    flags = mask.flags
    if pred_space == "disparity":
        target = ScalarGrid(np.where(flags, 1.0 / np.where(flags, gt.data, 1.0), 0.0))
    else:
        target = gt

    if mode == "ssi":
        fit = fit_scale_shift(pred, target, mask)
        aligned = apply_affine(pred, fit).data
        alignment: Dict[str, Any] = {"kind": "scale_shift", **fit.to_mapping()}
    else:
        c = fit_scale_only(reference=target, target=pred, mask=mask)
        aligned = c * pred.data
        alignment = {"kind": "scale", "scale": c}

    floor_count = 0
    if pred_space == "disparity":
        disp, floor_count = _floor_depth(aligned, flags)
        aligned = np.where(flags, 1.0 / disp.data, 0.0)
    depth, extra = _floor_depth(np.where(flags, aligned, 1.0), flags)
    floor_count += extra
    if floor_count:
        log.info("floored %d aligned value(s) at %g", floor_count, C.DEPTH_FLOOR)

    dbe_result = dbe(depth, gt, mask, s.dbe_top_fraction, s.dbe_truncation)
    d3r_result = d3r_details(depth, gt, mask, s.d3r_cells, s.d3r_threshold)
    metrics: Dict[str, Any] = {
        "rmse": rmse(depth, gt, mask),
        "abs_rel": abs_rel(depth, gt, mask),
        "delta1": delta1(depth, gt, mask),
        "ord": ordinal_error(depth, gt, mask, s.ord_config(), s.ord_tau),
        "d3r": d3r_result.value,
        "dbe_acc": dbe_result.acc,
        "dbe_comp": dbe_result.comp,
    }
    flags_out: Dict[str, Any] = {
        "alignment_clamped": bool(alignment.get("clamped", False)),
        "dbe": dbe_result.flags,
        "d3r_flagged_pairs": d3r_result.flagged_pairs,
    }

    intr_report: Optional[Dict[str, Any]] = None
    if gt_normals is not None:
        intr = intrinsics or CameraIntrinsics.default_for(gt.width, gt.height)
        intr_report = {**intr.to_mapping(), "default": intrinsics is None}
        pred_normals = normals_from_depth(depth, intr, mask, s.stencil)
        mean_angle, within = normal_angle_metrics(pred_normals, gt_normals, mask, s.normal_threshold)
        metrics["normal_mean_angle"] = mean_angle
        metrics["normal_within_t"] = within

    return {
        "mode": mode,
        "pred_space": pred_space,
        "alignment": alignment,
        "metrics": metrics,
        "flags": flags_out,
        "valid_pixels": mask.count,
        "floored_pixels": floor_count,
        "intrinsics": intr_report,
    }


def aggregate(reports: Sequence[Mapping[str, Any]]) -> Dict[str, Any]:
    """Per-metric means over images, reduced in the given order."""
    if not reports:
        return {"images": 0, "metrics": {}}
    names: List[str] = []
    for r in reports:
        for k in r["metrics"]:
            if k not in names:
                names.append(k)
    means = {}
    for k in names:
        vals = [r["metrics"][k] for r in reports if k in r["metrics"]]
        means[k] = float(sum(vals) / len(vals))
    return {"images": len(reports), "metrics": means}
