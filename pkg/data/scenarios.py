"""
Scenario and Preset Tables
Signal-field scenarios and dual-LO / scan presets, per unit mode
"""

import math
from dataclasses import dataclass
from typing import Optional

from models import Grid1D, SampledField, UnitMode
from models.errors import ConfigError
from services.wavefield import apply_obstruction, make_gaussian

# Signal beams. Millimetre values are the measured beam (1/e-intensity
# width 0.85 mm, 0.5 mm wire half-width); dimensionless values are the
# same geometry in units of the waist.
SCENARIOS = {
    "gaussian": {
        UnitMode.MILLIMETERS: {"waist": 0.85, "obstruction_half_width": 0.0},
        UnitMode.DIMENSIONLESS: {"waist": 1.0, "obstruction_half_width": 0.0},
    },
    "wire": {
        UnitMode.MILLIMETERS: {"waist": 0.85, "obstruction_half_width": 0.5},
        UnitMode.DIMENSIONLESS: {"waist": 1.0, "obstruction_half_width": 0.5 / 0.85},
    },
    "custom": {},
}

# LO and scan presets. "oracle" scales with the signal waist w; "bench" is
# the bench geometry and only exists in millimetres.
LO_PRESETS = {
    "oracle": {
        "a_in_waists": 1.0 / 20.0,
        "A_in_waists": 20.0,
        "dx_max_in_waists": 4.0,
        "p_max_times_waist": 4.0,
    },
    "bench": {
        "a": 0.081,
        "A": 2.6,
        "alpha": 1.0,
        "focal_length": 60.0,
        "dx_max": 10.0,
        "p_max_in_wavenumbers": 0.3,
    },
}

BENCH_PRESET_UNITS = UnitMode.MILLIMETERS


@dataclass(frozen=True)
class Scenario:
    """Named signal field: Gaussian beam, optionally cut by a wire"""
    name: str
    waist: float
    obstruction_half_width: float = 0.0
    curvature_radius: float = math.inf
    center: float = 0.0

    def build(self, grid: Grid1D, wavenumber: Optional[float] = None) -> SampledField:
        field = make_gaussian(grid, self.waist, self.curvature_radius, self.center, wavenumber)
        if self.obstruction_half_width > 0:
            field = apply_obstruction(field, self.obstruction_half_width)
        return field


def get_scenario(name: str, unit_mode: UnitMode = UnitMode.MILLIMETERS, **overrides) -> Scenario:
    """
    Look up a preset scenario; keyword overrides replace table values
    (None means keep the preset).
    """
    if name not in SCENARIOS or name == "custom":
        raise ConfigError(f"no preset field for scenario {name!r}; choose gaussian or wire")
    values = dict(SCENARIOS[name][UnitMode(unit_mode)])
    values.update({key: val for key, val in overrides.items() if val is not None})
    return Scenario(name=name, **values)
