"""
Metrics Collector - Tracks pipeline stages, timings and array summaries of a run
"""

import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class StageMetrics:
    """Metrics for a single pipeline stage"""
    stage_name: str
    timestamp: str
    execution_time_ms: float
    input_summary: str
    output_summary: str
    success: bool
    error_message: Optional[str] = None


@dataclass
class RunMetrics:
    """Metrics for one CLI command from start to finish"""
    run_id: str
    timestamp: str
    command: str
    scenario: str
    total_execution_time_ms: float
    stages_executed: List[str]
    stage_metrics: List[StageMetrics]
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    success: bool = True


class MetricsCollector:
    """
    Collects stage timings for the active run

    One run is active at a time. Stages tracked while no run is active are
    returned but not kept.
    """

    def __init__(self):
        self.current_run: Optional[Dict[str, Any]] = None
        self.stage_metrics_list: List[StageMetrics] = []

    def start_run(self, run_id: str, command: str, scenario: str) -> None:
        """Start tracking a new run"""
        self.current_run = {
            "run_id": run_id,
            "timestamp": _utc_now(),
            "command": command,
            "scenario": scenario,
            "start_time": time.perf_counter(),
        }
        self.stage_metrics_list = []

    def track_stage(
        self,
        stage_name: str,
        input_summary: str,
        output_summary: str,
        execution_time_ms: float,
        success: bool = True,
        error_message: Optional[str] = None,
    ) -> StageMetrics:
        """Record one stage execution"""
        metrics = StageMetrics(
            stage_name=stage_name,
            timestamp=_utc_now(),
            execution_time_ms=execution_time_ms,
            input_summary=input_summary[:500],
            output_summary=output_summary[:500],
            success=success,
            error_message=error_message,
        )
        if self.current_run is not None:
            self.stage_metrics_list.append(metrics)
        return metrics

    def finalize_run(self, diagnostics: Optional[Dict[str, Any]] = None, success: bool = True) -> RunMetrics:
        """Close the active run and return its metrics"""
        if not self.current_run:
            raise ValueError("No active run to finalize")

        elapsed = (time.perf_counter() - self.current_run["start_time"]) * 1000
        run_metrics = RunMetrics(
            run_id=self.current_run["run_id"],
            timestamp=self.current_run["timestamp"],
            command=self.current_run["command"],
            scenario=self.current_run["scenario"],
            total_execution_time_ms=elapsed,
            stages_executed=[m.stage_name for m in self.stage_metrics_list],
            stage_metrics=self.stage_metrics_list.copy(),
            diagnostics=dict(diagnostics or {}),
            success=success and all(m.success for m in self.stage_metrics_list),
        )

        self.current_run = None
        self.stage_metrics_list = []
        return run_metrics

    def get_metrics_dict(self, metrics: RunMetrics) -> Dict[str, Any]:
        """Convert metrics to dictionary format"""
        data = asdict(metrics)
        data["stage_metrics"] = [asdict(sm) for sm in metrics.stage_metrics]
        return data
