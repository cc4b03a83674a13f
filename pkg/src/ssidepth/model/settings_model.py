from __future__ import annotations

import dataclasses
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping

import appdirs
import yaml

from .loss_model import LossWeights, PairSampleConfig
from .. import constants as C
from ..errors import SettingsError
from ..utils import default_seed

# --- reader: tomllib on 3.11+, tomli on 3.10 ---
try:  # pragma: no cover
    # noinspection PyCompatibility
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib  # type: ignore

import tomli_w

log = logging.getLogger(__name__)

STENCILS = ("central", "sobel")
RESAMPLE_METHODS = ("bilinear", "area")

# CLI dest -> settings field
CLI_FIELDS = {
    "seed": "seed",
    "pairs": "pair_count",
    "delta": "delta",
    "scales": "num_scales",
    "stencil": "stencil",
    "resample": "resample",
    "clamp_scale": "clamp_scale",
    "ord_pairs": "ord_pairs",
    "ord_tau": "ord_tau",
    "d3r_cells": "d3r_cells",
    "d3r_threshold": "d3r_threshold",
    "dbe_top_fraction": "dbe_top_fraction",
    "dbe_truncation": "dbe_truncation",
    "normal_threshold": "normal_threshold",
    "receptive_field": "receptive_field",
    "max_factor": "max_factor",
    "lr": "learning_rate",
    "epochs": "epochs",
    "threads": "threads",
}


@dataclass(slots=True)
class ToolSettings:
    seed: int = C.DEFAULT_SEED
    pair_count: int = C.ORDINAL_PAIR_COUNT
    delta: float = C.ORDINAL_DELTA
    num_scales: int = C.GRADIENT_SCALES
    ssig_aligned: bool = True
    clamp_scale: bool = False
    stencil: str = "central"
    resample: str = "bilinear"
    ord_pairs: int = C.ORD_PAIR_COUNT
    ord_tau: float = C.ORD_TAU
    d3r_cells: int = C.D3R_CELLS
    d3r_threshold: float = C.D3R_THRESHOLD
    dbe_top_fraction: float = C.DBE_TOP_FRACTION
    dbe_truncation: float = C.DBE_TRUNCATION
    normal_threshold: float = C.NORMAL_ANGLE_THRESHOLD
    receptive_field: int = C.RECEPTIVE_FIELD
    max_factor: float = C.MAX_RESOLUTION_FACTOR
    learning_rate: float = C.ADAM_LR
    epochs: int = C.BENCHMARK_EPOCHS
    threads: int = 1
    weights: LossWeights = field(default_factory=LossWeights)
    metadata: Dict[str, Any] = field(default_factory=dict)

    # ------------------- derived configs -------------------

    def pair_config(self) -> PairSampleConfig:
        return PairSampleConfig(pair_count=self.pair_count, seed=self.seed, delta=self.delta)

    def ord_config(self) -> PairSampleConfig:
        return PairSampleConfig(pair_count=self.ord_pairs, seed=self.seed, delta=self.delta)

    def validate(self) -> "ToolSettings":
        if self.stencil not in STENCILS:
            raise SettingsError(f"stencil must be one of {STENCILS} (got {self.stencil!r})")
        if self.resample not in RESAMPLE_METHODS:
            raise SettingsError(f"resample must be one of {RESAMPLE_METHODS} (got {self.resample!r})")
        if self.num_scales < 1:
            raise SettingsError("num_scales must be >= 1")
        if self.threads < 1:
            raise SettingsError("threads must be >= 1")
        if self.receptive_field < C.MIN_RECEPTIVE_FIELD:
            raise SettingsError(f"receptive_field must be >= {C.MIN_RECEPTIVE_FIELD}")
        if self.max_factor < 1:
            raise SettingsError("max_factor must be >= 1")
        if not 0 < self.dbe_top_fraction < 1:
            raise SettingsError("dbe_top_fraction must be in (0, 1)")
        try:
            self.pair_config()
            self.ord_config()
        except ValueError as e:
            raise SettingsError(str(e)) from e
        return self

    # ------------------- factories -------------------

    @staticmethod
    def from_mapping(m: Mapping[str, Any] | None) -> "ToolSettings":
        if not m:
            return ToolSettings()
        known = {f.name for f in dataclasses.fields(ToolSettings)}
        unknown = sorted(set(m) - known)
        if unknown:
            raise SettingsError(f"unknown settings: {', '.join(unknown)}")
        values: Dict[str, Any] = {}
        defaults = ToolSettings()
        for f in dataclasses.fields(ToolSettings):
            if f.name not in m:
                continue
            raw = m[f.name]
            if f.name == "weights":
                values[f.name] = LossWeights.from_mapping(raw)
            elif f.name == "metadata":
                values[f.name] = dict(raw or {})
            else:
                values[f.name] = type(getattr(defaults, f.name))(raw)
        return ToolSettings(**values).validate()

    @staticmethod
    def from_toml_document(doc: Mapping[str, Any], toml_name: str) -> "ToolSettings":
        """
        Load with flexible namespacing:
          1) [tool.ssidepth] if pyproject.toml
          2) [tool.ssidepth] or [ssidepth] or the flat document if *ssidepth*.toml
        """
        tbl = ToolSettings._select_table(doc, toml_name)
        return ToolSettings.from_mapping(tbl)

    @staticmethod
    def from_cli_args(args: Mapping[str, Any]) -> Dict[str, Any]:
        """Only the options the user actually provided, keyed by settings field."""
        provided: Dict[str, Any] = {}
        for dest, name in CLI_FIELDS.items():
            val = args.get(dest)
            if val is not None:
                provided[name] = val
        if args.get("no_ssig_aligned"):
            provided["ssig_aligned"] = False
        weight_entries = ToolSettings._flatten(args.get("weight"))
        if weight_entries:
            weights: Dict[str, float] = {}
            for item in weight_entries:
                s = str(item).strip()
                if "=" not in s:
                    raise SettingsError(f"--weight must be name=value (got {item!r})")
                k, v = s.split("=", 1)
                k = k.strip()
                if not k.startswith("lambda_"):
                    k = f"lambda_{k}"
                try:
                    weights[k] = float(v)
                except ValueError:
                    raise SettingsError(f"--weight value must be a number (got {item!r})")
            provided["weights"] = weights
        return provided

    # ------------------- immutable merges -------------------

    @staticmethod
    def override_from_cli_args(existing: "ToolSettings", args: Mapping[str, Any]) -> "ToolSettings":
        """
        Replacing merge:
          - provided scalars replace existing
          - provided weights replace the named lambdas only
          - unspecified fields keep existing values
        """
        provided = ToolSettings.from_cli_args(args)
        merged = existing.to_mapping()
        for k, v in provided.items():
            if k == "weights":
                w = dict(merged["weights"])
                w.update(v)
                merged["weights"] = w
            else:
                merged[k] = v
        return ToolSettings.from_mapping(merged)

    @staticmethod
    def resolve(args: Mapping[str, Any]) -> "ToolSettings":
        """defaults < user config < SSIDEPTH_SEED < --config file < explicit flags."""
        settings = ToolSettings()
        user_file = ToolSettings.user_settings_path()
        if user_file.is_file() and not args.get("config"):
            log.debug("loading user settings from %s", user_file)
            settings = ToolSettings.load_file(user_file)
        try:
            settings.seed = default_seed() if settings.seed == C.DEFAULT_SEED else settings.seed
        except ValueError as e:
            raise SettingsError(str(e)) from e
        if args.get("config"):
            settings = ToolSettings.load_file(Path(args["config"]))
        settings = ToolSettings.override_from_cli_args(settings, args)
        if args.get("config_save"):
            ToolSettings.save_file(settings, Path(args["config_save"]), overwrite=True)
        return settings

    # ------------------- namespacing helpers -------------------

    @staticmethod
    def _select_table(doc: Mapping[str, Any], toml_name: str) -> Mapping[str, Any] | None:
        if toml_name == "pyproject.toml":
            tbl = doc.get("tool", {}).get(C.TOOL_NAME)
            if isinstance(tbl, Mapping):
                log.info("using [tool.%s] from pyproject.toml", C.TOOL_NAME)
                return tbl
            log.warning("[tool.%s] not found in pyproject.toml -- using defaults", C.TOOL_NAME)
            return None
        if re.fullmatch(rf".*{C.TOOL_NAME}.*\.toml", toml_name):
            tbl = doc.get("tool", {}).get(C.TOOL_NAME) or doc.get(C.TOOL_NAME)
            if isinstance(tbl, Mapping):
                return tbl
            log.debug("flat table found in %s", toml_name)
            return doc
        raise SettingsError(f"unrecognized settings document: {toml_name}")

    @staticmethod
    def user_settings_path() -> Path:
        return Path(appdirs.user_config_dir(C.TOOL_NAME)) / C.SETTINGS_FILENAME

    @staticmethod
    def load_file(path: str | Path) -> "ToolSettings":
        p = Path(path).expanduser().resolve()
        if not p.is_file():
            raise SettingsError(f"settings file not found: {p}")
        try:
            with p.open("rb") as f:
                doc = tomllib.load(f)
        except Exception as e:
            raise SettingsError(f"failed to parse TOML at {p}") from e
        settings = ToolSettings.from_toml_document(doc, p.name)
        settings.metadata = {**settings.metadata, "__file__": p.as_posix()}
        return settings

    @staticmethod
    def save_file(
            settings: "ToolSettings",
            path: str | Path = C.SETTINGS_FILENAME,
            *,
            table_name: str = C.SETTINGS_TABLE,
            overwrite: bool = False,
            make_parents: bool = True) -> Path:
        obj: Dict[str, Any] = settings.to_mapping()
        obj.pop("metadata", None)

        for k in reversed(table_name.split(".")):
            obj = {k: obj}

        p = Path(path).expanduser().resolve()
        if p.exists() and not overwrite:
            raise SettingsError(f"refusing to overwrite without overwrite=True: {p}")
        if make_parents:
            p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(tomli_w.dumps(obj), encoding="utf-8")
        return p

    # ------------------- small utils -------------------

    @staticmethod
    def _flatten(values) -> List[Any]:
        """Flatten lists that may be appended by argparse (list[list[str]])."""
        if not values:
            return []
        flat: List[Any] = []
        for v in values:
            if isinstance(v, (list, tuple)):
                flat.extend(v)
            else:
                flat.append(v)
        return flat

    # ------------------- instance methods -------------------

    def to_mapping(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, LossWeights):
                v = v.to_mapping()
            elif isinstance(v, dict):
                v = dict(v)
            out[f.name] = v
        return out

    def to_report_mapping(self) -> Dict[str, Any]:
        """Settings echo for reports (no host paths)."""
        m = self.to_mapping()
        m.pop("metadata", None)
        m.pop("threads", None)
        return m

    def to_json(self, *, indent: int = 2) -> str:
        return json.dumps(self.to_report_mapping(), sort_keys=True, indent=indent)

    def to_yaml(self, *, indent: int = 2) -> str:
        return yaml.safe_dump(self.to_report_mapping(), sort_keys=True, indent=indent)
