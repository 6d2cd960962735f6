"""
Stage Wrapper - Wraps pipeline stages with automatic timing and summaries
"""

import time
from functools import wraps
from typing import Any, Callable, TypeVar

import numpy as np

from .middleware import get_run_tracker

F = TypeVar("F", bound=Callable[..., Any])


def summarize(value: Any) -> str:
    """Short description of a stage argument or result"""
    kind = getattr(value, "kind", None)
    if kind is not None and hasattr(value, "values"):
        return f"{kind.value}[{value.values.shape[0]}x{value.values.shape[1]}]"
    if hasattr(value, "amplitudes") and hasattr(value, "grid"):
        return f"field[{value.grid.n_points}, extent={value.grid.extent:g}, {value.domain.value}]"
    if isinstance(value, np.ndarray):
        return f"array{value.shape}"
    if isinstance(value, tuple):
        return "(" + ", ".join(summarize(item) for item in value) + ")"
    if isinstance(value, (int, float, complex, str, bool)):
        text = repr(value)
        return text if len(text) <= 60 else text[:60] + "..."
    return type(value).__name__


def with_observability(stage_name: str) -> Callable[[F], F]:
    """
    Decorator recording a pipeline stage with the run tracker

    Usage:
        @with_observability("wigner_from_kr")
        def wigner_stage(krc):
            ...

    Failures are recorded and re-raised unchanged.
    """
    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(*args, **kwargs):
            collector = get_run_tracker().metrics_collector
            input_text = ", ".join(
                [summarize(arg) for arg in args] + [f"{key}={summarize(val)}" for key, val in kwargs.items()]
            )
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as exc:
                collector.track_stage(
                    stage_name=stage_name,
                    input_summary=input_text,
                    output_summary="",
                    execution_time_ms=(time.perf_counter() - start_time) * 1000,
                    success=False,
                    error_message=str(exc),
                )
                raise

            collector.track_stage(
                stage_name=stage_name,
                input_summary=input_text,
                output_summary=summarize(result),
                execution_time_ms=(time.perf_counter() - start_time) * 1000,
            )
            return result

        return wrapper  # type: ignore[return-value]

    return decorator
