"""Seeded sampling of unordered pixel pairs among valid pixels."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError
from ..model.grids_model import PixelPair, ValidMask
from ..model.loss_model import PairSampleConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, eq=False)
class PairSample:
    i: np.ndarray
    j: np.ndarray
    with_replacement: bool

    def __len__(self) -> int:
        return int(self.i.size)

    def pair(self, k: int) -> PixelPair:
        return PixelPair(int(self.i[k]), int(self.j[k]))


def _row_start(a: np.ndarray, n: int) -> np.ndarray:
    """Index of the first pair (a, a+1) in the row-major enumeration of a < b."""
    return a * n - a * (a + 1) // 2


def unrank_pairs(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map ranks in [0, n(n-1)/2) to (a, b) with a < b, enumerated row by row."""
    k = np.asarray(k, dtype=np.int64)
    disc = (2 * n - 1) ** 2 - 8 * k.astype(np.float64)
    a = np.floor(((2 * n - 1) - np.sqrt(np.maximum(disc, 0.0))) / 2).astype(np.int64)
    a = np.clip(a, 0, n - 2)
    a = np.where(_row_start(a + 1, n) <= k, a + 1, a)
    a = np.where(_row_start(a, n) > k, a - 1, a)
    b = k - _row_start(a, n) + a + 1
    return a, b


def sample_pairs(mask: ValidMask, cfg: PairSampleConfig) -> PairSample:
    """Uniform unordered pairs of distinct valid pixels, as flat row-major indices.

    Draws without replacement; falls back to drawing with replacement when
    pair_count exceeds the number of distinct pairs.
    """
    valid = mask.indices()
    n = valid.size
    if n < 2:
        raise InsufficientDataError(f"pair sampling needs at least 2 valid pixels (got {n})")
    total = n * (n - 1) // 2
    rng = np.random.default_rng(cfg.seed)
    with_replacement = cfg.pair_count > total
    if with_replacement:
        log.debug("pair_count %d exceeds %d distinct pairs; sampling with replacement", cfg.pair_count, total)
        ranks = rng.integers(0, total, size=cfg.pair_count)
    else:
        ranks = rng.choice(total, size=cfg.pair_count, replace=False)
    a, b = unrank_pairs(ranks, n)
    return PairSample(i=valid[a], j=valid[b], with_replacement=bool(with_replacement))
