from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Sequence

from ..errors import ManifestError
from ..model.report_model import ManifestItem

log = logging.getLogger(__name__)


def read_manifest(path: str | Path) -> List[ManifestItem]:
    """JSON array of {pred, gt, mask?, gt_normals?, intrinsics?}.

    Relative paths resolve against the manifest's directory.
    """
    p = Path(path).expanduser()
    if not p.is_file():
        raise ManifestError(f"manifest not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except ValueError as e:
        raise ManifestError(f"{p}: malformed JSON ({e})") from e
    if not isinstance(doc, list):
        raise ManifestError(f"{p}: manifest must be a JSON array")
    base = p.resolve().parent
    items = [ManifestItem.from_mapping(entry, base, i) for i, entry in enumerate(doc)]
    log.debug("manifest %s: %d item(s)", p, len(items))
    return items


def write_manifest(path: str | Path, items: Sequence[ManifestItem]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps([it.to_mapping() for it in items], indent=2, sort_keys=True) + "\n",
                 encoding="utf-8")
    return p
