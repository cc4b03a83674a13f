from __future__ import annotations

import logging
import os
import sys
from importlib.metadata import PackageNotFoundError, version as get_version
from typing import NoReturn, Union

import numpy as np

from .constants import DEFAULT_SEED, SEED_ENV_VAR, TOOL_NAME

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


def die(msg_or_code: Union[str, int], code: int = EXIT_USAGE_ERROR) -> NoReturn:
    if isinstance(msg_or_code, int):
        sys.exit(msg_or_code)
    print(f"{TOOL_NAME}: {msg_or_code}", file=sys.stderr)
    sys.exit(code)


def tool_version() -> str:
    try:
        return get_version(TOOL_NAME)
    except PackageNotFoundError:
        return "(source)"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or not raw.strip():
        return DEFAULT_SEED
    try:
        return int(raw.strip(), 0)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer (got {raw!r})")


def derive_seed(*parts: int) -> int:
    """Stable 63-bit child seed for (base seed, epoch, sample, ...)."""
    state = np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts])
    return int(state.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.WARNING if quiet else (logging.DEBUG if verbose else logging.INFO)
    root = logging.getLogger(TOOL_NAME)
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(f"{TOOL_NAME}: %(levelname)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False


def progress_enabled(logger: logging.Logger) -> bool:
    return logger.getEffectiveLevel() <= logging.INFO
