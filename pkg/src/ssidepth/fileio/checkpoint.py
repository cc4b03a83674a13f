"""Versioned binary checkpoints for toy networks.

Layout (little-endian):
  magic            8 bytes
  version          u32 length + ASCII
  config echo      u32 length + UTF-8 JSON (sorted keys)
  parameter count  u32
  per parameter    u16 name length + name, u8 ndim, u32 per dim, float64 payload
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Dict

import numpy as np
from packaging.version import InvalidVersion, Version

from ..constants import CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC
from ..errors import CheckpointError

log = logging.getLogger(__name__)


@dataclass(slots=True)
class Checkpoint:
    params: Dict[str, np.ndarray]
    config: Dict[str, Any] = field(default_factory=dict)
    format_version: str = CHECKPOINT_FORMAT_VERSION


def _read_exact(f: BinaryIO, n: int) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise CheckpointError("truncated checkpoint")
    return buf


def _read_u(f: BinaryIO, fmt: str) -> int:
    return struct.unpack(fmt, _read_exact(f, struct.calcsize(fmt)))[0]


def save_checkpoint(path: str | Path, params: Dict[str, np.ndarray], config: Dict[str, Any]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    version = CHECKPOINT_FORMAT_VERSION.encode("ascii")
    echo = json.dumps(config, sort_keys=True).encode("utf-8")
    with p.open("wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(version)) + version)
        f.write(struct.pack("<I", len(echo)) + echo)
        f.write(struct.pack("<I", len(params)))
        for name in sorted(params):
            arr = np.ascontiguousarray(params[name], dtype="<f8")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)) + encoded)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())
    log.debug("wrote checkpoint %s (%d tensors)", p, len(params))
    return p


def load_checkpoint(path: str | Path) -> Checkpoint:
    p = Path(path)
    if not p.is_file():
        raise CheckpointError(f"checkpoint not found: {p}")
    with p.open("rb") as f:
        if f.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{p}: not an ssidepth checkpoint")
        raw_version = _read_exact(f, _read_u(f, "<I")).decode("ascii")
        try:
            found = Version(raw_version)
        except InvalidVersion as e:
            raise CheckpointError(f"{p}: bad format version {raw_version!r}") from e
        if found.major != Version(CHECKPOINT_FORMAT_VERSION).major:
            raise CheckpointError(
                f"{p}: checkpoint format {found} is not readable by this tool "
                f"(supports {CHECKPOINT_FORMAT_VERSION})")
        try:
            config = json.loads(_read_exact(f, _read_u(f, "<I")).decode("utf-8"))
        except ValueError as e:
            raise CheckpointError(f"{p}: corrupt config echo") from e
        params: Dict[str, np.ndarray] = {}
        for _ in range(_read_u(f, "<I")):
            name = _read_exact(f, _read_u(f, "<H")).decode("utf-8")
            ndim = _read_u(f, "<B")
            shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim))
            size = int(np.prod(shape, dtype=np.int64))
            params[name] = np.frombuffer(_read_exact(f, 8 * size), dtype="<f8").reshape(shape).astype(np.float64)
        if f.read(1):
            raise CheckpointError(f"{p}: trailing bytes after parameters")
    return Checkpoint(params=params, config=config, format_version=str(found))
