from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from ..constants import ADAM_BETAS, ADAM_EPS, ADAM_LR
from ..errors import InvalidArgumentError, NonFiniteGradientError


@dataclass(slots=True)
class OptimizerState:
    """Adam moment accumulators, created lazily with the shapes of the parameters they track."""
    learning_rate: float = ADAM_LR
    betas: Tuple[float, float] = ADAM_BETAS
    eps: float = ADAM_EPS
    step: int = 0
    first: Dict[str, np.ndarray] = field(default_factory=dict)
    second: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.learning_rate < 0:
            raise InvalidArgumentError("learning rate must be >= 0")
        b1, b2 = self.betas
        if not (0 <= b1 < 1 and 0 <= b2 < 1):
            raise InvalidArgumentError("betas must lie in [0, 1)")
        if not self.eps > 0:
            raise InvalidArgumentError("eps must be > 0")


def adam_step(state: OptimizerState, params: Dict[str, np.ndarray],
              grads: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """One bias-corrected Adam update, applied to `params` in place.

    Nothing is modified when any gradient is non-finite.
    """
    for name, p in params.items():
        if name not in grads:
            raise InvalidArgumentError(f"no gradient for parameter {name!r}")
        g = grads[name]
        if g.shape != p.shape:
            raise InvalidArgumentError(f"gradient for {name!r} has shape {g.shape}, expected {p.shape}")
        bad = int(np.count_nonzero(~np.isfinite(g)))
        if bad:
            raise NonFiniteGradientError(
                f"non-finite gradient for {name!r}",
                {"parameter": name, "non_finite": bad, "step": state.step + 1})

    b1, b2 = state.betas
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads[name]
        m = state.first.setdefault(name, np.zeros_like(p))
        v = state.second.setdefault(name, np.zeros_like(p))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
