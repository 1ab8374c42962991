# app/errors.py
from typing import Any, Optional


class SqaRouteError(Exception):
    """Base class for everything this package raises on purpose."""


class InvalidQuestionError(SqaRouteError, ValueError):
    pass


class TemplateError(SqaRouteError, ValueError):
    pass


class MissingSituationError(SqaRouteError, ValueError):
    pass


class DemoSetError(SqaRouteError, ValueError):
    pass


class ConfigError(SqaRouteError, ValueError):
    pass


class ReportError(SqaRouteError, ValueError):
    pass


class DatasetError(SqaRouteError, ValueError):
    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")
        self.path = path
        self.line = line


class BackendError(SqaRouteError):
    def __init__(self, message: str, stage: Optional[int] = None):
        super().__init__(message if stage is None else f"stage {stage}: {message}")
        self.detail = message
        self.stage = stage


class BackendHTTPError(BackendError):
    def __init__(self, status: int, payload: Any, stage: Optional[int] = None):
        super().__init__(f"HTTP {status}: {payload}", stage=stage)
        self.status = status
        self.payload = payload


class BackendTransportError(BackendError):
    pass


class ReplayMissError(BackendError):
    def __init__(self, key: str, stage: Optional[int] = None):
        super().__init__(f"no replay fixture for key {key}", stage=stage)
        self.key = key


def with_stage(err: BackendError, stage: int) -> BackendError:
    """Re-tag a backend error with the CoT stage it happened in."""
    if isinstance(err, BackendHTTPError):
        return BackendHTTPError(err.status, err.payload, stage=stage)
    if isinstance(err, ReplayMissError):
        return ReplayMissError(err.key, stage=stage)
    return type(err)(err.detail, stage=stage)
