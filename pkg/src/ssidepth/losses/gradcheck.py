"""Central finite-difference verification of hand-derived gradients."""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Callable, Optional

import numpy as np

from ..constants import (
    GRADCHECK_ATOL,
    GRADCHECK_EPSILON,
    GRADCHECK_KINK_FACTOR,
    GRADCHECK_MIN_SAMPLES,
)
from ..errors import InvalidArgumentError
from ..model.grids_model import ChannelStack, ScalarGrid
from ..model.loss_model import LossReport

if TYPE_CHECKING:
    from ..toy.net import ToyNet

log = logging.getLogger(__name__)

# differences smaller than this many rounding units of the loss value are not resolvable
ROUNDOFF_FACTOR = 1e5

LossFn = Callable[[ScalarGrid], LossReport]


def _check_epsilon(epsilon: float) -> None:
    if not 1e-7 <= epsilon <= 1e-3:
        raise InvalidArgumentError(f"epsilon must lie in [1e-7, 1e-3] (got {epsilon})")


def _relative_error(fd: float, analytic: float, floor: float) -> float:
    return abs(fd - analytic) / max(abs(fd), abs(analytic), floor)


def _noise_floor(values, epsilon: float) -> float:
    scale = max(abs(v) for v in values)
    return max(GRADCHECK_ATOL, ROUNDOFF_FACTOR * np.finfo(np.float64).eps * scale / epsilon)


def gradient_check(loss_fn: LossFn, pred: ScalarGrid, epsilon: float = GRADCHECK_EPSILON,
                   samples: int = GRADCHECK_MIN_SAMPLES, seed: int = 0) -> float:
    """Max relative error between the analytic gradient and central differences.

    Pixels are drawn from a seeded random subset; pixels whose own kink
    distance is below GRADCHECK_KINK_FACTOR * epsilon are skipped.
    """
    _check_epsilon(epsilon)
    samples = max(int(samples), GRADCHECK_MIN_SAMPLES)
    base = loss_fn(pred)
    analytic = base.grad.flat
    size = pred.flat.size
    rng = np.random.default_rng(seed)
    picks = rng.choice(size, size=min(samples, size), replace=False)
    kink = base.kink_distance.reshape(-1) if base.kink_distance is not None else None

    worst = 0.0
    skipped = 0
    data = pred.data.copy()
    flat = data.reshape(-1)
    for idx in picks:
        if kink is not None and kink[idx] < GRADCHECK_KINK_FACTOR * epsilon:
            skipped += 1
            continue
        orig = flat[idx]
        flat[idx] = orig + epsilon
        plus = loss_fn(ScalarGrid(data)).value
        flat[idx] = orig - epsilon
        minus = loss_fn(ScalarGrid(data)).value
        flat[idx] = orig
        fd = (plus - minus) / (2.0 * epsilon)
        floor = _noise_floor((plus, minus, base.value), epsilon)
        worst = max(worst, _relative_error(fd, float(analytic[idx]), floor))
    log.debug("gradient_check: %d sampled, %d skipped near kinks, max rel error %.3g",
              len(picks), skipped, worst)
    return worst


def check_parameter_gradients(net: "ToyNet", inputs: ChannelStack, upstream: ScalarGrid,
                              epsilon: float = GRADCHECK_EPSILON, samples: Optional[int] = None,
                              seed: int = 0) -> float:
    """Finite-difference check of d(sum(upstream * net(inputs)))/d(parameters)."""
    _check_epsilon(epsilon)
    net.forward(inputs)
    grads = net.backward(inputs, upstream)
    rng = np.random.default_rng(seed)
    u = upstream.data

    def objective() -> float:
        return float(np.sum(u * net.forward(inputs).data))

    worst = 0.0
    for name in sorted(net.params):
        param = net.params[name]
        flat = param.reshape(-1)
        picks = np.arange(flat.size) if samples is None or samples >= flat.size else \
            rng.choice(flat.size, size=samples, replace=False)
        for idx in picks:
            orig = flat[idx]
            flat[idx] = orig + epsilon
            plus = objective()
            flat[idx] = orig - epsilon
            minus = objective()
            flat[idx] = orig
            fd = (plus - minus) / (2.0 * epsilon)
            floor = _noise_floor((plus, minus), epsilon)
            worst = max(worst, _relative_error(fd, float(grads[name].reshape(-1)[idx]), floor))
    net.forward(inputs)
    return worst
