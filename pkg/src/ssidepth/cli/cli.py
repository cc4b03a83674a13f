#!/usr/bin/env python3

from __future__ import annotations

import argparse

from .. import constants as C
from ..losses import loss_names
from ..metrics import MODES, PRED_SPACES
from ..model.scene_model import PRIMITIVE_KINDS
from ..model.settings_model import RESAMPLE_METHODS, STENCILS
from ..toy.ablate import ABLATIONS
from ..toy.recipes import recipe_names
from ..utils import tool_version

COMMANDS = ("synth", "loss", "align", "normals", "project", "evaluate", "train-toy", "ablate", "infer")


def _common_options() -> argparse.ArgumentParser:
    """Options every subcommand accepts: output, configuration, logging and tunables."""
    p = argparse.ArgumentParser(add_help=False)

    out = p.add_argument_group("output and configuration")
    out.add_argument("--format",
                     choices=("json", "yaml"),
                     default="json",
                     help="Report format on stdout (default: json)")
    out.add_argument("--config",
                     metavar="PATH",
                     help="Read settings from pyproject.toml [tool.ssidepth] or an *ssidepth*.toml file")
    out.add_argument("--config-save",
                     metavar="PATH",
                     help="Write the effective settings to PATH as TOML")
    out.add_argument("-q", "--quiet",
                     action="store_true",
                     help="Only log warnings and errors")
    out.add_argument("-v", "--verbose",
                     action="store_true",
                     help="Debug logging")
    out.add_argument("--threads",
                     type=int,
                     metavar="N",
                     help="Cap on worker threads for manifest items and ablation recipes")

    t = p.add_argument_group("tunables (override config files)")
    t.add_argument("--seed", type=int, help=f"Base seed (default: ${C.SEED_ENV_VAR} or {C.DEFAULT_SEED})")
    t.add_argument("--pairs", type=int, metavar="N", help=f"Pairs per image for pair losses ({C.ORDINAL_PAIR_COUNT})")
    t.add_argument("--delta", type=float, help=f"Ordinal loss tolerance ({C.ORDINAL_DELTA})")
    t.add_argument("--scales", type=int, metavar="N", help=f"Pyramid levels for gradient losses ({C.GRADIENT_SCALES})")
    t.add_argument("--no-ssig-aligned", action="store_true",
                   help="Evaluate gradient matching on the raw rather than aligned prediction")
    t.add_argument("--clamp-scale", action="store_true", default=None,
                   help="Clamp the ground-truth scale fix to a small positive value")
    t.add_argument("--stencil", choices=STENCILS, help="Normal-estimation stencil (central)")
    t.add_argument("--resample", choices=RESAMPLE_METHODS, help="O_H downsampling method (bilinear)")
    t.add_argument("--ord-pairs", type=int, metavar="N", help=f"Pairs for the ORD metric ({C.ORD_PAIR_COUNT})")
    t.add_argument("--ord-tau", type=float, help=f"ORD ratio tolerance ({C.ORD_TAU})")
    t.add_argument("--d3r-cells", type=int, metavar="N", help=f"D3R grid cells per side ({C.D3R_CELLS})")
    t.add_argument("--d3r-threshold", type=float, help=f"D3R pair threshold, fraction of range ({C.D3R_THRESHOLD})")
    t.add_argument("--dbe-top-fraction", type=float, help=f"DBE edge fraction ({C.DBE_TOP_FRACTION})")
    t.add_argument("--dbe-truncation", type=float, help=f"DBE truncation in pixels ({C.DBE_TRUNCATION})")
    t.add_argument("--normal-threshold", type=float, metavar="DEG",
                   help=f"Angle threshold for the within-t normal metric ({C.NORMAL_ANGLE_THRESHOLD})")
    t.add_argument("--receptive-field", type=int, metavar="PX",
                   help=f"SSI receptive field / O_L resolution ({C.RECEPTIVE_FIELD})")
    t.add_argument("--max-factor", type=float, help=f"Largest O_H upscaling factor ({C.MAX_RESOLUTION_FACTOR})")
    t.add_argument("--lr", type=float, help=f"Adam learning rate ({C.ADAM_LR})")
    t.add_argument("--epochs", type=int, help=f"Training epochs ({C.BENCHMARK_EPOCHS})")
    t.add_argument("--weight", action="append", metavar="NAME=VALUE",
                   help="Loss weight override, e.g. --weight so=0.5 or --weight lambda_ng=0 (repeatable)")
    return p


def _add_prediction_inputs(p: argparse.ArgumentParser, pred_required: bool = True) -> None:
    p.add_argument("--pred", metavar="PFM", required=pred_required, help="Predicted map")
    p.add_argument("--gt", metavar="PFM", help="Ground-truth map")
    p.add_argument("--mask", metavar="PNG", help="Validity mask (non-zero = valid); default all valid")
    p.add_argument("--gt-normals", metavar="PFM", help="Ground-truth normals (3-channel PFM)")
    p.add_argument("--intrinsics", metavar="FX,FY,CX,CY|JSON",
                   help="Camera intrinsics as four numbers or a JSON file; default derived from the size")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ssidepth",
        description="Scale-and-shift invariant depth losses, alignment, geometry, metrics and toy training.")
    p.add_argument("--version", action="version", version=f"%(prog)s {tool_version()}")
    common = _common_options()
    sub = p.add_subparsers(dest="command", metavar="COMMAND", required=True)

    s = sub.add_parser("synth", parents=[common], help="Render a procedural scene")
    s.add_argument("--out-dir", required=True, metavar="DIR", help="Directory for depth/normals/rgb/mask files")
    s.add_argument("--scene", metavar="JSON", help="Scene description file (overrides the scene flags)")
    s.add_argument("--width", type=int, default=64)
    s.add_argument("--height", type=int, default=64)
    s.add_argument("--primitives", type=int, default=3, metavar="N", help="Number of random primitives")
    s.add_argument("--kinds", nargs="+", choices=PRIMITIVE_KINDS, default=list(PRIMITIVE_KINDS))
    s.add_argument("--near", type=float, default=1.0)
    s.add_argument("--far", type=float, default=10.0)
    s.add_argument("--noise-sigma", type=float, default=0.0, help="RGB noise level")
    s.add_argument("--tilt", type=float, default=0.3, help="Largest background plane slope")
    s.add_argument("--focal", type=float, help="Focal length in pixels (default 0.5*(w+h))")

    lo = sub.add_parser("loss", parents=[common], help="Evaluate a loss and its gradient")
    lo.add_argument("--name", required=True, choices=loss_names())
    _add_prediction_inputs(lo)
    lo.add_argument("--gradcheck", action="store_true", help="Also verify the gradient by finite differences")
    lo.add_argument("--epsilon", type=float, default=C.GRADCHECK_EPSILON, help="Finite-difference step")
    lo.add_argument("--out-grad", metavar="PFM", help="Write the gradient grid")

    al = sub.add_parser("align", parents=[common], help="Fit and apply scale/shift or scale-only alignment")
    _add_prediction_inputs(al)
    al.add_argument("--mode", choices=MODES, default="ssi")
    al.add_argument("--out", metavar="PFM", help="Write the aligned prediction")

    no = sub.add_parser("normals", parents=[common], help="Surface normals from a depth map")
    no.add_argument("--depth", required=True, metavar="PFM")
    no.add_argument("--mask", metavar="PNG")
    no.add_argument("--intrinsics", metavar="FX,FY,CX,CY|JSON")
    no.add_argument("--out", required=True, metavar="PFM", help="3-channel normals output")

    pr = sub.add_parser("project", parents=[common], help="Back-project a depth map to a PLY point cloud")
    pr.add_argument("--depth", required=True, metavar="PFM")
    pr.add_argument("--mask", metavar="PNG")
    pr.add_argument("--rgb", metavar="PNG", help="Color the points")
    pr.add_argument("--intrinsics", metavar="FX,FY,CX,CY|JSON")
    pr.add_argument("--out", required=True, metavar="PLY")

    ev = sub.add_parser("evaluate", parents=[common], help="Compute depth metrics for one pair or a manifest")
    _add_prediction_inputs(ev, pred_required=False)
    ev.add_argument("--manifest", metavar="JSON", help="Array of {pred, gt, mask?, gt_normals?, intrinsics?}")
    ev.add_argument("--mode", choices=MODES, default="ssi")
    ev.add_argument("--pred-space", choices=PRED_SPACES, default="depth")

    tr = sub.add_parser("train-toy", parents=[common], help="Train the toy network with one recipe")
    tr.add_argument("--recipe", required=True, choices=recipe_names())
    tr.add_argument("--out-dir", required=True, metavar="DIR", help="Checkpoint and log destination")
    tr.add_argument("--scenes", type=int, default=C.BENCHMARK_SCENES)
    tr.add_argument("--heldout", type=int, default=C.BENCHMARK_HELDOUT)
    tr.add_argument("--size", type=int, default=C.BENCHMARK_SIZE)

    ab = sub.add_parser("ablate", parents=[common], help="Train every recipe of an ablation and compare")
    ab.add_argument("--stage", choices=tuple(ABLATIONS), default="ssi")
    ab.add_argument("--recipes", nargs="+", choices=recipe_names(), help="Subset of recipes to run")
    ab.add_argument("--scenes", type=int, default=C.BENCHMARK_SCENES)
    ab.add_argument("--heldout", type=int, default=C.BENCHMARK_HELDOUT)
    ab.add_argument("--size", type=int, default=C.BENCHMARK_SIZE)
    ab.add_argument("--csv", metavar="PATH", help="Also write the comparison table as CSV")

    inf = sub.add_parser("infer", parents=[common], help="Run the two-stage pipeline on an image")
    inf.add_argument("--rgb", required=True, metavar="PNG")
    inf.add_argument("--ssi-low", metavar="PFM", help="Precomputed O_L")
    inf.add_argument("--ssi-high", metavar="PFM", help="Precomputed O_H")
    inf.add_argument("--ssi-ckpt", metavar="CKPT", help="SSI toy network checkpoint")
    inf.add_argument("--si-ckpt", required=True, metavar="CKPT", help="SI toy network checkpoint")
    inf.add_argument("--intrinsics", metavar="FX,FY,CX,CY|JSON")
    inf.add_argument("--out-depth", metavar="PFM")
    inf.add_argument("--out-ply", metavar="PLY")
    inf.add_argument("--out-normals", metavar="PFM")

    return p


if __name__ == "__main__":  # pragma: no cover
    parser = build_parser()
    args = parser.parse_args()
