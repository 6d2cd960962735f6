"""
Run Tracker - Ties metrics collection and run-log storage to CLI commands
"""

import copy
import logging
import uuid
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .metrics_collector import MetricsCollector
from .storage import RunLogStorage

logger = logging.getLogger(__name__)


class RunTracker:
    """
    Tracks one command at a time

    Usage:
        tracker = get_run_tracker()
        run_id = tracker.start_run("kr", scenario="gaussian")
        ...stages decorated with with_observability(...) run here...
        report = tracker.finalize_run(diagnostics={...})
    """

    def __init__(self, storage_dir: Union[str, Path] = "runs"):
        self.metrics_collector = MetricsCollector()
        self.storage = RunLogStorage(storage_dir)
        self.current_run_id: Optional[str] = None

    def set_storage_dir(self, storage_dir: Union[str, Path]) -> None:
        self.storage = RunLogStorage(storage_dir)

    def start_run(self, command: str, scenario: str = "") -> str:
        """
        Start tracking a new run

        Returns:
            run_id: unique identifier for this run
        """
        run_id = str(uuid.uuid4())
        self.current_run_id = run_id
        self.metrics_collector.start_run(run_id=run_id, command=command, scenario=scenario)
        return run_id

    def finalize_run(
        self, diagnostics: Optional[Dict[str, Any]] = None, success: bool = True, persist: bool = True
    ) -> Dict[str, Any]:
        """
        Close the active run, append it to the run log and return its
        metrics as a plain dict
        """
        run_metrics = self.metrics_collector.finalize_run(diagnostics=diagnostics, success=success)
        metrics_dict = self.metrics_collector.get_metrics_dict(run_metrics)
        if persist:
            try:
                self.storage.store_run_metrics(copy.deepcopy(metrics_dict))
            except OSError as exc:
                logger.warning("run log not written: %s", exc)
        self.current_run_id = None
        return metrics_dict


_tracker_instance: Optional[RunTracker] = None


def get_run_tracker(storage_dir: Optional[Union[str, Path]] = None) -> RunTracker:
    """
    Get or create the global run tracker

    Args:
        storage_dir: directory for run logs; updates an existing tracker
    """
    global _tracker_instance

    if _tracker_instance is None:
        _tracker_instance = RunTracker(storage_dir or "runs")
    elif storage_dir is not None:
        _tracker_instance.set_storage_dir(storage_dir)
    return _tracker_instance
