from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict

from ..errors import InvalidArgumentError


@dataclass(frozen=True, slots=True)
class AffineFit:
    """Least-squares scale/shift pair mapping a prediction onto a target: f(x) = a*x + b."""
    a: float
    b: float
    residual_sse: float = 0.0
    clamped: bool = False
    count: int = 0

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidArgumentError(f"affine scale must be positive (got {self.a})")

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "a": self.a,
            "b": self.b,
            "residual_sse": self.residual_sse,
            "clamped": self.clamped,
        }
