from __future__ import annotations

import logging
from argparse import Namespace

from .common import ActionOutput, existing, parse_intrinsics
from ...fileio.pfm import write_grid, write_normals
from ...fileio.ply import write_ply
from ...fileio.png import read_rgb
from ...model.settings_model import ToolSettings
from ...pipeline import FileSsiSource, NetworkSsiSource, SsiSource, run_two_stage
from ...toy.train import load_trained_net

log = logging.getLogger(__name__)


def _ssi_source(args: Namespace) -> SsiSource:
    if args.ssi_ckpt:
        return NetworkSsiSource(load_trained_net(existing(args.ssi_ckpt, "SSI checkpoint"), "ssi"))
    return FileSsiSource(existing(args.ssi_low, "O_L"), existing(args.ssi_high, "O_H"))


def run_infer(args: Namespace, settings: ToolSettings) -> ActionOutput:
    rgb = read_rgb(existing(args.rgb, "rgb"))
    source = _ssi_source(args)
    si_net = load_trained_net(existing(args.si_ckpt, "SI checkpoint"), "si")
    result = run_two_stage(rgb, source, si_net, parse_intrinsics(args.intrinsics), settings)
    written = {}
    if args.out_depth:
        written["depth"] = write_grid(args.out_depth, result.depth).name
    if args.out_normals:
        written["normals"] = write_normals(args.out_normals, result.normals).name
    if args.out_ply:
        written["ply"] = write_ply(args.out_ply, result.point_cloud).name
    log.info("two-stage inference done (%s source)", source.label())
    return {"ssi_source": source.label(), **result.summary(), "files": written}, {}
