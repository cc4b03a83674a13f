"""Small fully-convolutional predictor with hand-written backpropagation.

Every layer is a 3x3, stride-1, same-padded convolution. Hidden layers use a
leaky rectifier and the last layer a sigmoid, so outputs lie in (0, 1).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..constants import LEAKY_SLOPE, TOY_CHANNELS
from ..errors import InvalidArgumentError, PreconditionError
from ..model.grids_model import ChannelStack, ScalarGrid

log = logging.getLogger(__name__)

ARCHITECTURE = "toynet-conv3x3/v1"
KERNEL = 3


def default_channels(in_channels: int) -> List[int]:
    return [in_channels, *TOY_CHANNELS, 1]


def _windows(x: np.ndarray) -> np.ndarray:
    """(c, h, w) -> (c, h, w, 3, 3) view of zero-padded neighbourhoods."""
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    return sliding_window_view(padded, (KERNEL, KERNEL), axis=(1, 2))


@dataclass(slots=True)
class _LayerCache:
    windows: np.ndarray
    pre: np.ndarray


class ToyNet:
    """Parameters live in `params` as "conv{k}.weight" (out, in, 3, 3) and "conv{k}.bias" (out,)."""

    def __init__(self, channels: Sequence[int], seed: int = 0, zero: bool = False,
                 slope: float = LEAKY_SLOPE):
        channels = [int(c) for c in channels]
        if len(channels) < 2 or any(c < 1 for c in channels):
            raise InvalidArgumentError(f"channel widths must be >= 1 with at least one layer (got {channels})")
        self.channels = channels
        self.slope = float(slope)
        self.params: Dict[str, np.ndarray] = {}
        rng = np.random.default_rng(seed)
        for k, (cin, cout) in enumerate(zip(channels[:-1], channels[1:])):
            fan_in = cin * KERNEL * KERNEL
            if zero:
                w = np.zeros((cout, cin, KERNEL, KERNEL))
            else:
                w = rng.standard_normal((cout, cin, KERNEL, KERNEL)) * np.sqrt(2.0 / fan_in)
            self.params[f"conv{k}.weight"] = w
            self.params[f"conv{k}.bias"] = np.zeros(cout)
        self._cache: Optional[List[_LayerCache]] = None
        self._output: Optional[np.ndarray] = None

    @property
    def layers(self) -> int:
        return len(self.channels) - 1

    @property
    def in_channels(self) -> int:
        return self.channels[0]

    def _check_input(self, inputs: ChannelStack) -> None:
        if inputs.channels != self.in_channels:
            raise InvalidArgumentError(
                f"network expects {self.in_channels} input channel(s), got {inputs.channels}")

    def forward(self, inputs: ChannelStack) -> ScalarGrid:
        self._check_input(inputs)
        x = inputs.data
        cache: List[_LayerCache] = []
        for k in range(self.layers):
            win = _windows(x)
            pre = np.einsum("oikl,ihwkl->ohw", self.params[f"conv{k}.weight"], win, optimize=True)
            pre = pre + self.params[f"conv{k}.bias"][:, None, None]
            cache.append(_LayerCache(windows=win, pre=pre))
            if k < self.layers - 1:
                x = np.where(pre > 0, pre, self.slope * pre)
            else:
                x = expit(pre)
        self._cache = cache
        self._output = x[0]
        return ScalarGrid(x[0])

    def backward(self, inputs: ChannelStack, upstream: ScalarGrid) -> Dict[str, np.ndarray]:
        """Gradients of sum(upstream * output) with respect to every parameter."""
        if self._cache is None or self._output is None:
            raise PreconditionError("backward called before forward")
        self._check_input(inputs)
        if upstream.shape != self._output.shape:
            raise InvalidArgumentError("upstream gradient must match the output dimensions")
        y = self._output
        delta = (upstream.data * y * (1.0 - y))[None]
        grads: Dict[str, np.ndarray] = {}
        for k in reversed(range(self.layers)):
            layer = self._cache[k]
            grads[f"conv{k}.weight"] = np.einsum("ohw,ihwkl->oikl", delta, layer.windows, optimize=True)
            grads[f"conv{k}.bias"] = delta.sum(axis=(1, 2))
            if k == 0:
                break
            w = self.params[f"conv{k}.weight"]
            _, h, wd = delta.shape
            dpad = np.zeros((w.shape[1], h + 2, wd + 2))
            for ky in range(KERNEL):
                for kx in range(KERNEL):
                    dpad[:, ky:ky + h, kx:kx + wd] += np.einsum("oi,ohw->ihw", w[:, :, ky, kx], delta)
            dx = dpad[:, 1:-1, 1:-1]
            prev = self._cache[k - 1].pre
            delta = dx * np.where(prev > 0, 1.0, self.slope)
        return grads

    def predict(self, inputs: ChannelStack) -> ScalarGrid:
        out = self.forward(inputs)
        self._cache = None
        return out

    def copy(self) -> "ToyNet":
        twin = ToyNet(self.channels, zero=True, slope=self.slope)
        twin.params = {k: v.copy() for k, v in self.params.items()}
        return twin

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.params.values())

    def config(self) -> Dict[str, Any]:
        return {"architecture": ARCHITECTURE, "channels": list(self.channels), "slope": self.slope}

    @staticmethod
    def from_parameters(config: Mapping[str, Any], params: Mapping[str, np.ndarray]) -> "ToyNet":
        if config.get("architecture") != ARCHITECTURE:
            raise InvalidArgumentError(f"unsupported architecture {config.get('architecture')!r}")
        net = ToyNet(config["channels"], zero=True, slope=float(config.get("slope", LEAKY_SLOPE)))
        for name, value in net.params.items():
            if name not in params:
                raise InvalidArgumentError(f"missing parameter {name!r}")
            if params[name].shape != value.shape:
                raise InvalidArgumentError(
                    f"parameter {name!r} has shape {params[name].shape}, expected {value.shape}")
        net.params = {name: np.array(params[name], dtype=np.float64) for name in net.params}
        return net
