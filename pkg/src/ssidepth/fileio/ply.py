from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError
from ..model.grids_model import PointCloud


def write_ply(path: str | Path, cloud: PointCloud) -> Path:
    """ASCII PLY with x, y, z and optional red/green/blue per vertex."""
    lines = [
        "ply",
        "format ascii 1.0",
        "comment written by ssidepth",
        f"element vertex {len(cloud)}",
        "property double x",
        "property double y",
        "property double z",
    ]
    if cloud.colors is not None:
        lines += ["property uchar red", "property uchar green", "property uchar blue"]
    lines.append("end_header")

    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
        if len(cloud) == 0:
            return p
        if cloud.colors is None:
            np.savetxt(f, cloud.points, fmt="%.17g", delimiter=" ")
        else:
            rows = np.concatenate([cloud.points, cloud.colors.astype(np.float64)], axis=1)
            np.savetxt(f, rows, fmt=["%.17g"] * 3 + ["%d"] * 3, delimiter=" ")
    return p


def read_ply(path: str | Path) -> PointCloud:
    """Reader for the ASCII layout written by write_ply."""
    p = Path(path)
    text = p.read_text(encoding="ascii")
    header, sep, body = text.partition("end_header\n")
    if not sep or not header.startswith("ply\n"):
        raise InvalidInputError(f"{p}: not an ASCII PLY file")
    count = None
    props = []
    for line in header.splitlines():
        parts = line.split()
        if parts[:2] == ["element", "vertex"]:
            count = int(parts[2])
        elif parts and parts[0] == "property":
            props.append(parts[-1])
        elif parts[:2] == ["format", "binary_little_endian"] or parts[:2] == ["format", "binary_big_endian"]:
            raise InvalidInputError(f"{p}: binary PLY is not supported")
    if count is None or props[:3] != ["x", "y", "z"]:
        raise InvalidInputError(f"{p}: PLY must declare vertex x, y, z")
    if count == 0:
        return PointCloud(np.zeros((0, 3)))
    rows = np.loadtxt(io.StringIO(body), dtype=np.float64, ndmin=2)
    if rows.shape != (count, len(props)):
        raise InvalidInputError(f"{p}: expected {count} vertices with {len(props)} properties")
    colors = rows[:, 3:6].astype(np.uint8) if props[3:6] == ["red", "green", "blue"] else None
    return PointCloud(rows[:, :3], colors)
