from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np
import yaml

from .grids_model import CameraIntrinsics
from ..constants import METRIC_VARIANTS
from ..errors import ManifestError
from ..utils import tool_version


def plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into JSON/YAML friendly values."""
    if isinstance(obj, Mapping):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return None
        return v
    if isinstance(obj, Path):
        return obj.as_posix()
    return obj


@dataclass(slots=True, frozen=True)
class ReportEnvelope:
    """Every structured result the CLI emits is wrapped in one of these."""
    command: str
    config: Dict[str, Any] = field(default_factory=dict)
    result: Any = None
    seeds: Dict[str, int] = field(default_factory=dict)
    metric_variants: Dict[str, str] = field(default_factory=lambda: dict(METRIC_VARIANTS))
    tool_version: str = field(default_factory=tool_version)

    def to_mapping(self) -> Dict[str, Any]:
        return plain({
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
            "metric_variants": self.metric_variants,
            "seeds": self.seeds,
            "result": self.result,
        })

    def to_json(self, *, indent: int = 2) -> str:
        return json.dumps(self.to_mapping(), sort_keys=True, indent=indent, ensure_ascii=False)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=True, allow_unicode=True)

    def render(self, fmt: str = "json") -> str:
        if fmt == "yaml":
            return self.to_yaml()
        return self.to_json() + "\n"


@dataclass(slots=True, frozen=True)
class ManifestItem:
    pred: Path
    gt: Path
    mask: Optional[Path] = None
    gt_normals: Optional[Path] = None
    intrinsics: Optional[CameraIntrinsics] = None

    @staticmethod
    def from_mapping(m: Any, base_dir: Path, index: int) -> "ManifestItem":
        if not isinstance(m, Mapping):
            raise ManifestError("entry must be a JSON object", index)
        unknown = sorted(set(m) - {"pred", "gt", "mask", "gt_normals", "intrinsics"})
        if unknown:
            raise ManifestError(f"unknown keys: {', '.join(unknown)}", index)

        def resolve(key: str, required: bool) -> Optional[Path]:
            raw = m.get(key)
            if raw is None:
                if required:
                    raise ManifestError(f"missing {key!r} path", index)
                return None
            p = Path(str(raw)).expanduser()
            if not p.is_absolute():
                p = base_dir / p
            if not p.is_file():
                raise ManifestError(f"{key} file not found: {p}", index)
            return p

        intr = None
        if m.get("intrinsics") is not None:
            try:
                intr = CameraIntrinsics.from_mapping(m["intrinsics"])
            except (ValueError, TypeError) as e:
                raise ManifestError(f"bad intrinsics: {e}", index) from e
        return ManifestItem(
            pred=resolve("pred", True),
            gt=resolve("gt", True),
            mask=resolve("mask", False),
            gt_normals=resolve("gt_normals", False),
            intrinsics=intr)

    def to_mapping(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"pred": self.pred.as_posix(), "gt": self.gt.as_posix()}
        if self.mask is not None:
            out["mask"] = self.mask.as_posix()
        if self.gt_normals is not None:
            out["gt_normals"] = self.gt_normals.as_posix()
        if self.intrinsics is not None:
            out["intrinsics"] = self.intrinsics.to_mapping()
        return out
