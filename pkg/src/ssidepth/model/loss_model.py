from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

import numpy as np

from .grids_model import ScalarGrid
from ..constants import ORDINAL_DELTA, ORDINAL_PAIR_COUNT, SI_WEIGHTS, SSI_WEIGHTS
from ..errors import InvalidArgumentError


@dataclass(frozen=True, slots=True, eq=False)
class LossReport:
    """Loss value, d(loss)/d(prediction) per pixel, and the sub-loss breakdown.

    When components are present, value == sum(weights[k] * components[k]).
    kink_distance holds, per pixel, how far the prediction may move before a
    branch of the loss changes (inf where the loss is smooth).
    """
    value: float
    grad: ScalarGrid
    components: Dict[str, float] = field(default_factory=dict)
    weights: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    kink_distance: Optional[np.ndarray] = None

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "value": float(self.value),
            "components": {k: float(v) for k, v in self.components.items()},
            "weights": {k: float(v) for k, v in self.weights.items()},
            "diagnostics": dict(self.diagnostics),
        }


@dataclass(frozen=True, slots=True)
class LossWeights:
    lambda_ssi: float = SSI_WEIGHTS[0]
    lambda_so: float = SSI_WEIGHTS[1]
    lambda_ssig: float = SSI_WEIGHTS[2]
    lambda_d: float = SI_WEIGHTS[0]
    lambda_dg: float = SI_WEIGHTS[1]
    lambda_n: float = SI_WEIGHTS[2]
    lambda_ng: float = SI_WEIGHTS[3]

    def __post_init__(self):
        for name in self.__slots__:
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise InvalidArgumentError(f"{name} must be a finite value >= 0 (got {v})")

    @staticmethod
    def from_mapping(m: Mapping[str, Any] | None) -> "LossWeights":
        if not m:
            return LossWeights()
        defaults = LossWeights()
        return LossWeights(**{
            name: float(m.get(name, getattr(defaults, name))) for name in LossWeights.__slots__
        })

    def replace(self, **changes: float) -> "LossWeights":
        values = self.to_mapping()
        values.update(changes)
        return LossWeights(**values)

    def to_mapping(self) -> Dict[str, float]:
        return {name: float(getattr(self, name)) for name in self.__slots__}


@dataclass(frozen=True, slots=True)
class PairSampleConfig:
    pair_count: int = ORDINAL_PAIR_COUNT
    seed: int = 0
    delta: float = ORDINAL_DELTA

    def __post_init__(self):
        if int(self.pair_count) < 1:
            raise InvalidArgumentError(f"pair_count must be >= 1 (got {self.pair_count})")
        if not self.delta > 0:
            raise InvalidArgumentError(f"delta must be > 0 (got {self.delta})")

    def with_seed(self, seed: int) -> "PairSampleConfig":
        return PairSampleConfig(pair_count=self.pair_count, seed=int(seed), delta=self.delta)

    def to_mapping(self) -> Dict[str, Any]:
        return {"pair_count": int(self.pair_count), "seed": int(self.seed), "delta": float(self.delta)}
