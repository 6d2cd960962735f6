import json
import math

import numpy as np
import pytest

from models import GridKind
from observability import MetricsCollector, RunLogStorage, get_run_tracker, sanitize_numpy_types, summarize, with_observability
from services.phasespace import kr_conjugate


@with_observability("double")
def double(values):
    return 2 * values


@with_observability("explode")
def explode(_):
    raise ValueError("boom")


class TestStageTracking:
    def test_stages_are_recorded_in_order(self, tmp_path):
        tracker = get_run_tracker(tmp_path)
        run_id = tracker.start_run("kr", scenario="gaussian")
        double(np.ones(3))
        double(np.ones((2, 2)))
        report = tracker.finalize_run(diagnostics={"peak": np.float64(0.5)})

        assert report["run_id"] == run_id
        assert report["stages_executed"] == ["double", "double"]
        assert report["stage_metrics"][0]["input_summary"] == "array(3,)"
        assert report["stage_metrics"][1]["output_summary"] == "array(2, 2)"
        assert report["success"] is True

    def test_failures_are_recorded_and_reraised(self, tmp_path):
        tracker = get_run_tracker(tmp_path)
        tracker.start_run("transform")
        with pytest.raises(ValueError, match="boom"):
            explode(1.0)
        report = tracker.finalize_run(success=False)
        stage = report["stage_metrics"][0]
        assert stage["success"] is False
        assert stage["error_message"] == "boom"
        assert report["success"] is False

    def test_run_log_is_appended(self, tmp_path):
        tracker = get_run_tracker(tmp_path)
        first = tracker.start_run("field")
        tracker.finalize_run(diagnostics={"gain": 1 + 2j})
        second = tracker.start_run("kr")
        tracker.finalize_run()

        runs = RunLogStorage(tmp_path).get_recent_runs()
        assert [run["run_id"] for run in runs] == [first, second]
        assert runs[0]["diagnostics"]["gain"] == {"re": 1.0, "im": 2.0}
        assert RunLogStorage(tmp_path).get_run_by_id(second)["command"] == "kr"

    def test_finalize_without_a_run(self, tmp_path):
        with pytest.raises(ValueError):
            get_run_tracker(tmp_path).finalize_run()

    def test_tracker_is_shared(self, tmp_path):
        assert get_run_tracker(tmp_path) is get_run_tracker()

    def test_later_storage_dir_wins(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        tracker = get_run_tracker(first)
        assert get_run_tracker(second) is tracker
        run_id = tracker.start_run("grid")
        tracker.finalize_run()
        assert RunLogStorage(second).get_run_by_id(run_id)["command"] == "grid"
        assert RunLogStorage(first).get_recent_runs() == []

    def test_stages_outside_a_run_are_not_kept(self):
        collector = MetricsCollector()
        stage = collector.track_stage("double", "array(3,)", "array(3,)", 1.0)
        assert stage.stage_name == "double"
        assert collector.stage_metrics_list == []
        collector.start_run("r1", "kr", "wire")
        collector.track_stage("kr_conjugate", "field[8]", "KRconj[8x8]", 2.0)
        assert collector.finalize_run().stages_executed == ["kr_conjugate"]
        collector.track_stage("late", "", "", 0.5)
        assert collector.stage_metrics_list == []


class TestSummaries:
    def test_grid_and_field_summaries(self, small_gaussian):
        assert summarize(small_gaussian) == "field[32, extent=14, position]"
        krc = kr_conjugate(small_gaussian)
        assert krc.kind is GridKind.KR_CONJ
        assert summarize(krc) == "KRconj[32x32]"
        assert summarize((krc, 1.5)) == "(KRconj[32x32], 1.5)"

    def test_long_scalars_are_cut(self):
        assert summarize("x" * 100).endswith("...")


class TestSanitize:
    def test_json_friendly(self):
        raw = {
            "n": np.int64(3),
            "flag": np.bool_(True),
            "values": np.array([1.0, math.inf]),
            "gain": np.complex128(0.5 - 1j),
            "missing": math.nan,
            "nested": [(np.float32(0.25),)],
        }
        clean = sanitize_numpy_types(raw)
        assert clean == {
            "n": 3,
            "flag": True,
            "values": [1.0, "inf"],
            "gain": {"re": 0.5, "im": -1.0},
            "missing": "nan",
            "nested": [[0.25]],
        }
        json.dumps(clean)
