import os

import hypothesis
import numpy as np
import pytest

from models import Grid1D, UnitMode
from observability import middleware
from services.wavefield import apply_obstruction, make_gaussian

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=25, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))

WIRE_HALF_WIDTH_MM = 0.5
WAIST_MM = 0.85


@pytest.fixture(autouse=True)
def fresh_run_tracker(monkeypatch):
    """Each test starts without a global tracker or an output-dir override"""
    monkeypatch.setattr(middleware, "_tracker_instance", None)
    monkeypatch.delenv("KRPHASE_OUTPUT_DIR", raising=False)
    yield


# ============================================================
# GRIDS
# ============================================================

@pytest.fixture(scope="session")
def unit_grid_512():
    return Grid1D(512, 16.0, UnitMode.DIMENSIONLESS)


@pytest.fixture(scope="session")
def unit_grid_256():
    return Grid1D(256, 16.0, UnitMode.DIMENSIONLESS)


@pytest.fixture(scope="session")
def small_grid():
    """32 points, wide enough that a unit Gaussian and its transforms decay"""
    return Grid1D(32, 14.0, UnitMode.DIMENSIONLESS)


@pytest.fixture(scope="session")
def mm_grid():
    return Grid1D(512, 16.0 * WAIST_MM, UnitMode.MILLIMETERS)


# ============================================================
# FIELDS
# ============================================================

@pytest.fixture(scope="session")
def gaussian_512(unit_grid_512):
    return make_gaussian(unit_grid_512, 1.0)


@pytest.fixture(scope="session")
def gaussian_256(unit_grid_256):
    return make_gaussian(unit_grid_256, 1.0)


@pytest.fixture(scope="session")
def wire_256(unit_grid_256):
    return apply_obstruction(make_gaussian(unit_grid_256, 1.0), WIRE_HALF_WIDTH_MM / WAIST_MM)


@pytest.fixture(scope="session")
def small_gaussian(small_grid):
    return make_gaussian(small_grid, 1.0)


@pytest.fixture(scope="session")
def mm_gaussian(mm_grid):
    return make_gaussian(mm_grid, WAIST_MM)


@pytest.fixture(scope="session")
def mm_wire(mm_gaussian):
    return apply_obstruction(mm_gaussian, WIRE_HALF_WIDTH_MM)


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path
