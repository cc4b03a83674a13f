from __future__ import annotations

import json
import logging
from argparse import Namespace
from pathlib import Path

from .common import ActionOutput
from ...fileio.checkpoint import save_checkpoint
from ...model.report_model import plain
from ...model.settings_model import ToolSettings
from ...toy.ablate import run_ablation
from ...toy.data import benchmark_split
from ...toy.recipes import get_recipe
from ...toy.train import checkpoint_config, initial_net, train

log = logging.getLogger(__name__)

CHECKPOINT_NAME = "model.ckpt"
LOG_NAME = "train_log.json"


def run_train_toy(args: Namespace, settings: ToolSettings) -> ActionOutput:
    recipe = get_recipe(args.recipe)
    train_set, held = benchmark_split(settings.seed, args.scenes, args.heldout, args.size, settings,
                                      recipe.needs_ssi())
    result = train(initial_net(recipe, settings.seed), train_set, recipe, settings, heldout=held)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / CHECKPOINT_NAME, result.net.params, checkpoint_config(result, settings, recipe))
    payload = result.to_mapping()
    (out / LOG_NAME).write_text(json.dumps(plain(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %s and %s to %s", CHECKPOINT_NAME, LOG_NAME, out)
    return {
        **payload,
        "stage": recipe.stage(),
        "benchmark": {"scenes": args.scenes, "heldout": args.heldout, "size": args.size},
        "files": {"checkpoint": CHECKPOINT_NAME, "log": LOG_NAME},
        "note": "toy convolutional network; compares loss behaviour, not backbone capacity",
    }, {"base": settings.seed}


def run_ablate(args: Namespace, settings: ToolSettings) -> ActionOutput:
    result = run_ablation(args.stage, settings, args.scenes, args.heldout, args.size,
                          recipes=args.recipes)
    if args.csv:
        p = Path(args.csv)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(result.to_csv(), encoding="utf-8")
    return result.to_mapping(), {"base": settings.seed}
