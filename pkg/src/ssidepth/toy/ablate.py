"""Recipe comparisons on a shared synthetic benchmark."""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from .data import benchmark_split
from .recipes import HELDOUT_METRICS, get_recipe
from .train import TrainResult, initial_net, train
from .. import constants as C
from ..errors import InvalidArgumentError
from ..model.settings_model import ToolSettings

log = logging.getLogger(__name__)

ABLATIONS = {
    "ssi": ("ssi", "ranking", "ssi+ranking", "ssi+so"),
    "si": ("si-rgb", "si", "si-no-high", "si-no-normal"),
}

CSV_COLUMNS = ("recipe", "stage", "epochs", "final_train_loss", *HELDOUT_METRICS)


@dataclass(frozen=True, slots=True)
class AblationRow:
    recipe: str
    stage: str
    epochs: int
    final_train_loss: Optional[float]
    heldout: Dict[str, Optional[float]]

    @staticmethod
    def from_result(result: TrainResult, stage: str) -> "AblationRow":
        final = result.final
        return AblationRow(recipe=result.recipe, stage=stage, epochs=result.epochs,
                           final_train_loss=final.train_loss if final else None,
                           heldout=dict(final.heldout) if final else {})

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "recipe": self.recipe,
            "stage": self.stage,
            "epochs": self.epochs,
            "final_train_loss": self.final_train_loss,
            "heldout": dict(self.heldout),
        }


@dataclass(slots=True)
class AblationResult:
    stage: str
    scenes: int
    heldout_scenes: int
    size: int
    seed: int
    rows: List[AblationRow] = field(default_factory=list)
    logs: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)

    def row(self, recipe: str) -> AblationRow:
        for r in self.rows:
            if r.recipe == recipe:
                return r
        raise KeyError(recipe)

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "benchmark": {"scenes": self.scenes, "heldout": self.heldout_scenes,
                          "size": self.size, "seed": self.seed},
            "rows": [r.to_mapping() for r in self.rows],
            "logs": {k: list(v) for k, v in self.logs.items()},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([r.recipe, r.stage, r.epochs,
                             "" if r.final_train_loss is None else repr(r.final_train_loss),
                             *("" if r.heldout.get(k) is None else repr(r.heldout[k]) for k in HELDOUT_METRICS)])
        return buf.getvalue()


def run_ablation(stage: str = "ssi", settings: Optional[ToolSettings] = None,
                 scenes: int = C.BENCHMARK_SCENES, heldout: int = C.BENCHMARK_HELDOUT,
                 size: int = C.BENCHMARK_SIZE, epochs: Optional[int] = None,
                 recipes: Optional[Sequence[str]] = None) -> AblationResult:
    """Train one network per recipe from the same initialization on the same split.

    Recipes run concurrently on up to `settings.threads` workers; rows keep the recipe order.
    """
    if stage not in ABLATIONS:
        raise InvalidArgumentError(f"stage must be one of {tuple(ABLATIONS)} (got {stage!r})")
    s = settings or ToolSettings()
    names = list(recipes) if recipes else list(ABLATIONS[stage])
    chosen = [get_recipe(n) for n in names]
    with_ssi = any(r.needs_ssi() for r in chosen)
    train_set, held = benchmark_split(s.seed, scenes, heldout, size, s, with_ssi)
    log.info("ablation %s: %d recipe(s), %d training scene(s), %d held out",
             stage, len(chosen), len(train_set), len(held))

    def run(recipe) -> TrainResult:
        return train(initial_net(recipe, s.seed), train_set, recipe, s, epochs, held, s.seed)

    with ThreadPoolExecutor(max_workers=s.threads) as pool:
        results = list(pool.map(run, chosen))

    out = AblationResult(stage=stage, scenes=scenes, heldout_scenes=heldout, size=size, seed=s.seed)
    for recipe, result in zip(chosen, results):
        out.rows.append(AblationRow.from_result(result, recipe.stage()))
        out.logs[recipe.label()] = [r.to_mapping() for r in result.log]
    return out
