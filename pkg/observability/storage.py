"""
Run Log Storage - Appends run records to daily JSONL files
"""

import json
import logging
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

logger = logging.getLogger(__name__)


def sanitize_numpy_types(obj: Any) -> Any:
    """
    Recursively convert numpy and complex values to JSON-friendly Python types

    Complex numbers become {"re": ..., "im": ...}; non-finite floats become
    the strings "inf", "-inf" and "nan".
    """
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": sanitize_numpy_types(float(obj.real)), "im": sanitize_numpy_types(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if np.isfinite(value):
            return value
        return "nan" if np.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(obj, np.ndarray):
        return sanitize_numpy_types(obj.tolist())
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, dict):
        return {str(key): sanitize_numpy_types(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize_numpy_types(item) for item in obj]
    return obj


class RunLogStorage:
    """
    File-based log of finished runs

    Each record is one JSON line in runs_YYYYMMDD.jsonl under storage_dir.
    """

    def __init__(self, storage_dir: Union[str, Path] = "runs"):
        self.storage_dir = Path(storage_dir)
        self.lock = threading.Lock()

    def _get_date_filename(self, date: Optional[datetime] = None) -> str:
        date = date or datetime.now(timezone.utc)
        return f"runs_{date.strftime('%Y%m%d')}.jsonl"

    def store_run_metrics(self, metrics: Dict[str, Any]) -> Path:
        """Append one run record and return the file it went to"""
        record = {
            "type": "run_metrics",
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "data": sanitize_numpy_types(metrics),
        }
        with self.lock:
            self.storage_dir.mkdir(parents=True, exist_ok=True)
            filepath = self.storage_dir / self._get_date_filename()
            with open(filepath, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(record) + "\n")
        return filepath

    def get_recent_runs(self, limit: int = 50) -> List[Dict[str, Any]]:
        """Most recent run records across all daily files, oldest first"""
        records: List[Dict[str, Any]] = []
        with self.lock:
            for filepath in sorted(self.storage_dir.glob("runs_*.jsonl")):
                try:
                    with open(filepath, "r", encoding="utf-8") as handle:
                        for line in handle:
                            if line.strip():
                                records.append(json.loads(line)["data"])
                except (OSError, ValueError, KeyError) as exc:
                    logger.warning("could not read run log %s: %s", filepath, exc)
        return records[-limit:]

    def get_run_by_id(self, run_id: str) -> Optional[Dict[str, Any]]:
        for record in reversed(self.get_recent_runs(limit=10_000)):
            if record.get("run_id") == run_id:
                return record
        return None
