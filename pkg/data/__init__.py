from .scenarios import LO_PRESETS, BENCH_PRESET_UNITS, SCENARIOS, Scenario, get_scenario

__all__ = [
    "LO_PRESETS",
    "BENCH_PRESET_UNITS",
    "SCENARIOS",
    "Scenario",
    "get_scenario",
]
