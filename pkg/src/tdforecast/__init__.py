"""Forecasting toolkit for code technical debt (SQALE index) time series."""

__version__ = "0.1.0"

from .data import (  # noqa: F401
    DescriptiveStats,
    Frequency,
    ProjectPanel,
    SnapshotLog,
    describe,
    interpolate_missing,
    load_snapshots,
    log_transform,
    serialize,
)
from .errors import (  # noqa: F401
    EmptyResultError,
    FitError,
    InputError,
    ParseError,
    SchemaError,
    TdforecastError,
    ValidationError,
)
from .sarimax import FittedSarimax, SarimaxOrder  # noqa: F401
