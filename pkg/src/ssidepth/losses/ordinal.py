"""Pairwise order losses: the sparse ordinal loss (zero on correctly ordered
pairs) and the classical ranking loss (positive on every pair)."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.special import expit

from .base import LossInputs, LossStrategy, check_inputs
from .pairs import PairSample, sample_pairs
from ..errors import InvalidArgumentError
from ..model.grids_model import ScalarGrid, ValidMask
from ..model.loss_model import LossReport, PairSampleConfig

log = logging.getLogger(__name__)

BRANCH_EQUAL = 0
BRANCH_CORRECT = 1
BRANCH_INVERTED = 2


@dataclass(frozen=True, slots=True, eq=False)
class PairTerms:
    """Per-pair values, d(value)/d(pred_i), d(value)/d(pred_j), branch codes, kink distances."""
    values: np.ndarray
    grad_i: np.ndarray
    grad_j: np.ndarray
    branch: np.ndarray
    kink: np.ndarray


def _check_delta(delta: float) -> None:
    if not delta > 0:
        raise InvalidArgumentError(f"delta must be > 0 (got {delta})")


def _branches(d_pred: np.ndarray, d_gt: np.ndarray, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    equal = np.abs(d_gt) < delta
    s = np.sign(d_gt)
    correct = ~equal & (s * d_pred >= 0)
    branch = np.where(equal, BRANCH_EQUAL, np.where(correct, BRANCH_CORRECT, BRANCH_INVERTED))
    return equal, branch


def ordinal_pair_terms(pred_i, pred_j, gt_i, gt_j, delta: float) -> PairTerms:
    """(dO)^2 when |dG| < delta, otherwise ReLU(-dO * sgn(dG)); subgradient 0 at the kink."""
    _check_delta(delta)
    d_pred = np.asarray(pred_i, dtype=np.float64) - np.asarray(pred_j, dtype=np.float64)
    d_gt = np.asarray(gt_i, dtype=np.float64) - np.asarray(gt_j, dtype=np.float64)
    equal, branch = _branches(d_pred, d_gt, delta)
    z = -d_pred * np.sign(d_gt)
    values = np.where(equal, d_pred ** 2, np.maximum(z, 0.0))
    slope = np.where(equal, 2.0 * d_pred, np.where(z > 0, -np.sign(d_gt), 0.0))
    kink = np.where(equal, np.inf, np.abs(d_pred))
    return PairTerms(values=values, grad_i=slope, grad_j=-slope, branch=branch, kink=kink)


def ranking_pair_terms(pred_i, pred_j, gt_i, gt_j, delta: float) -> PairTerms:
    """log(1 + exp(-sgn(dG) * dO)) when |dG| >= delta, otherwise (dO)^2."""
    _check_delta(delta)
    d_pred = np.asarray(pred_i, dtype=np.float64) - np.asarray(pred_j, dtype=np.float64)
    d_gt = np.asarray(gt_i, dtype=np.float64) - np.asarray(gt_j, dtype=np.float64)
    equal, branch = _branches(d_pred, d_gt, delta)
    s = np.sign(d_gt)
    values = np.where(equal, d_pred ** 2, np.logaddexp(0.0, -s * d_pred))
    slope = np.where(equal, 2.0 * d_pred, -s * expit(-s * d_pred))
    kink = np.full(d_pred.shape, np.inf)
    return PairTerms(values=values, grad_i=slope, grad_j=-slope, branch=branch, kink=kink)


def ordinal_pair_loss(pred_i: float, pred_j: float, gt_i: float, gt_j: float,
                      delta: float) -> Tuple[float, float, float]:
    terms = ordinal_pair_terms(pred_i, pred_j, gt_i, gt_j, delta)
    return float(terms.values), float(terms.grad_i), float(terms.grad_j)


PairTermFn = Callable[..., PairTerms]


def _pair_loss(pred: ScalarGrid, gt: ScalarGrid, mask: ValidMask, cfg: PairSampleConfig,
               term_fn: PairTermFn, name: str) -> LossReport:
    check_inputs(pred, gt, mask)
    pairs: PairSample = sample_pairs(mask, cfg)
    p = pred.flat
    g = gt.flat
    terms = term_fn(p[pairs.i], p[pairs.j], g[pairs.i], g[pairs.j], cfg.delta)

    grad = np.zeros(p.size, dtype=np.float64)
    np.add.at(grad, pairs.i, terms.grad_i)
    np.add.at(grad, pairs.j, terms.grad_j)
    kink = np.full(p.size, np.inf)
    np.minimum.at(kink, pairs.i, terms.kink)
    np.minimum.at(kink, pairs.j, terms.kink)

    correct = terms.branch == BRANCH_CORRECT
    value = float(np.sum(terms.values))
    diagnostics = {
        "pairs_sampled": len(pairs),
        "with_replacement": pairs.with_replacement,
        "correct_pairs": int(np.count_nonzero(correct)),
        "inverted_pairs": int(np.count_nonzero(terms.branch == BRANCH_INVERTED)),
        "equal_pairs": int(np.count_nonzero(terms.branch == BRANCH_EQUAL)),
        "correct_pair_gradient_l1": float(np.sum(np.abs(terms.grad_i[correct]))),
        "seed": int(cfg.seed),
        "delta": float(cfg.delta),
    }
    largest = int(np.argmax(terms.values))
    top = pairs.pair(largest)
    top.validate(p.size)
    diagnostics["largest_pair"] = {**top.to_mapping(), "value": float(terms.values[largest])}
    if pairs.with_replacement:
        log.warning("%s: %d pairs requested from %d valid pixels; sampled with replacement",
                    name, cfg.pair_count, mask.count)
    return LossReport(
        value=value,
        grad=ScalarGrid(grad.reshape(pred.shape)),
        components={name: value},
        weights={name: 1.0},
        diagnostics=diagnostics,
        kink_distance=kink.reshape(pred.shape))


def sparse_ordinal_loss(pred: ScalarGrid, gt: ScalarGrid, mask: ValidMask, cfg: PairSampleConfig) -> LossReport:
    """Sum (not mean) of the ordinal pair loss over seeded sampled pairs."""
    return _pair_loss(pred, gt, mask, cfg, ordinal_pair_terms, "so")


def ranking_loss(pred: ScalarGrid, gt: ScalarGrid, mask: ValidMask, cfg: PairSampleConfig) -> LossReport:
    return _pair_loss(pred, gt, mask, cfg, ranking_pair_terms, "ranking")


class SparseOrdinalLoss(LossStrategy):
    @staticmethod
    def label() -> str:
        return "so"

    @staticmethod
    def description() -> str:
        return "sparse ordinal loss over sampled pixel pairs"

    @staticmethod
    def evaluate(inputs: LossInputs) -> LossReport:
        return sparse_ordinal_loss(inputs.pred, inputs.require_gt(), inputs.resolved_mask(),
                                   inputs.settings.pair_config())


class RankingLoss(LossStrategy):
    @staticmethod
    def label() -> str:
        return "ranking"

    @staticmethod
    def description() -> str:
        return "logistic ranking loss over sampled pixel pairs"

    @staticmethod
    def evaluate(inputs: LossInputs) -> LossReport:
        return ranking_loss(inputs.pred, inputs.require_gt(), inputs.resolved_mask(),
                            inputs.settings.pair_config())
