"""Nested-decomposition dispatch of grid-scale storage under wind
uncertainty, with a crossing-state wind model and adaptive backward
sampling."""

__version__ = "0.1.0"

from .crossing import (
    CrossingStateModel,
    IidErrorModel,
    KnowledgeState,
    extract_crossings,
    fit,
    fit_iid,
    load_model,
    save_model,
)
from .engine import SDDP, TestResult, TrainResult, test_policy
from .grid import GridInstance, ResourceState, load_instance
from .oracle import continuation_value, oracle_value
from .sampling import ImportanceSampler, NoSampler, StandardSampler
from .series import ForecastErrorSeries, OutcomeGrid, quantile_grid, read_series_csv
from .vfa import Cut, RegularizationSchedule, ValueFunctionApprox

__all__ = [
    "__version__",
    "CrossingStateModel",
    "IidErrorModel",
    "KnowledgeState",
    "extract_crossings",
    "fit",
    "fit_iid",
    "load_model",
    "save_model",
    "SDDP",
    "TestResult",
    "TrainResult",
    "test_policy",
    "GridInstance",
    "ResourceState",
    "load_instance",
    "continuation_value",
    "oracle_value",
    "ImportanceSampler",
    "NoSampler",
    "StandardSampler",
    "ForecastErrorSeries",
    "OutcomeGrid",
    "quantile_grid",
    "read_series_csv",
    "Cut",
    "RegularizationSchedule",
    "ValueFunctionApprox",
]
