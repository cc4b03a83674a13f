from __future__ import annotations

from typing import Any, Dict, List, Optional


class SsiDepthError(Exception):
    """Base class for every domain error raised by ssidepth."""


class InvalidArgumentError(SsiDepthError, ValueError):
    pass


class InvalidInputError(SsiDepthError, ValueError):
    pass


class InsufficientDataError(SsiDepthError):
    pass


class DegenerateFitError(SsiDepthError):
    pass


class PreconditionError(SsiDepthError):
    pass


class NonFiniteGradientError(SsiDepthError):
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class TrainingDivergedError(SsiDepthError):
    def __init__(self, message: str, epoch_log: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.epoch_log = list(epoch_log or [])


class ManifestError(SsiDepthError):
    def __init__(self, message: str, index: Optional[int] = None):
        prefix = f"manifest entry {index}: " if index is not None else ""
        super().__init__(prefix + message)
        self.index = index


class CheckpointError(SsiDepthError):
    pass


class SettingsError(SsiDepthError):
    pass
