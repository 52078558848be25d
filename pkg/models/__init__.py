"""
fabsim v1.0 - Models 模組
"""
from .errors import (
    ConfigError,
    FabsimError,
    InternalError,
    InvalidParameterError,
    ManifestError,
    OutputError,
    ReportError,
)
from .types import *  # noqa: F401,F403
