"""
Observability module for run and stage tracking
"""

from .metrics_collector import MetricsCollector, RunMetrics, StageMetrics
from .middleware import RunTracker, get_run_tracker
from .stage_wrapper import summarize, with_observability
from .storage import RunLogStorage, sanitize_numpy_types

__all__ = [
    "MetricsCollector",
    "RunMetrics",
    "StageMetrics",
    "RunTracker",
    "get_run_tracker",
    "summarize",
    "with_observability",
    "RunLogStorage",
    "sanitize_numpy_types",
]
