"""
Run Configuration
Key/value config files validated into a pydantic RunConfig

File format: one `section.key = value` per line, `#` starts a comment,
blank lines are ignored. `auto` leaves a value to be derived from the
scenario and unit mode. Every resolved key is listed by RunConfig.flat()
so manifests record defaults explicitly.
"""

import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, PrivateAttr, ValidationError, field_validator

from data import LO_PRESETS, BENCH_PRESET_UNITS, Scenario, get_scenario
from models import DspSpec, Grid1D, LOConfig, RegSpec, ScanConfig, UnitMode
from models.errors import ConfigError
from services.wavefield import default_wavenumber

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    load_dotenv = None

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "KRPHASE_OUTPUT_DIR"
AUTO = "auto"
GRID_EXTENT_IN_WAISTS = 16.0


# ============================================================
# SECTION MODELS
# ============================================================

class FieldSettings(BaseModel):
    """Signal field; lengths in mm (millimeters) or signal waists (dimensionless)"""
    waist: Optional[float] = Field(None, gt=0, description="1/e-intensity half-width sigma")
    curvature_radius: float = Field(math.inf, gt=0, description="Wavefront radius R (inf at the waist)")
    center: float = Field(0.0, description="Beam center")
    obstruction_half_width: Optional[float] = Field(None, ge=0, description="Wire half-width")
    wavenumber: Optional[float] = Field(None, gt=0, description="Optical wavenumber k (1/mm)")
    path: Optional[str] = Field(None, description="Field file for scenario = custom")


class GridSettings(BaseModel):
    n_points: int = Field(512, ge=2, description="Transverse samples (even)")
    extent: Optional[float] = Field(None, gt=0, description="Grid extent; auto = 16 waists")
    unit_mode: UnitMode = Field(UnitMode.MILLIMETERS, description="millimeters or dimensionless")

    @field_validator("n_points")
    @classmethod
    def _even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("n_points must be even")
        return value


class LOSettings(BaseModel):
    """Dual local oscillator; frequencies in Hz of the scaled plan"""
    preset: Literal["oracle", "bench"] = Field("oracle", description="Waist/scan preset")
    a: Optional[float] = Field(None, gt=0, description="Focused LO1 waist")
    A: Optional[float] = Field(None, gt=0, description="Collimated LO2 waist")
    alpha: Optional[float] = Field(None, ge=0, description="LO2 relative amplitude")
    focal_length: Optional[float] = Field(None, gt=0, description="Lens focal length f")
    freq_signal: float = Field(120_000.0, gt=0, description="Signal frequency")
    freq_lo1: float = Field(110_005.0, gt=0, description="LO1 frequency")
    freq_lo2: float = Field(110_000.0, gt=0, description="LO2 frequency")
    analyzer_bandwidth: float = Field(100.0, gt=0, description="Band-pass -3 dB width")
    e0: Optional[float] = Field(None, gt=0, description="LO amplitude; auto = unit-norm LO1")


class ScanSettings(BaseModel):
    dx_max: Optional[float] = Field(None, ge=0, description="Mirror offset range +-dx_max")
    p_max: Optional[float] = Field(None, ge=0, description="Center-momentum range +-p_max")
    n_dx: int = Field(40, ge=1, description="Mirror offsets")
    n_p: int = Field(41, ge=1, description="Lens offsets")
    sweep_factors: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0], description="Resolution factors")

    @field_validator("sweep_factors", mode="before")
    @classmethod
    def _split(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("sweep_factors")
    @classmethod
    def _at_least_one(cls, value: List[float]) -> List[float]:
        if not value or min(value) < 1:
            raise ValueError("sweep factors must be >= 1")
        return value


class DspSettings(BaseModel):
    """Time-domain chain (Hz, seconds)"""
    sample_rate: float = Field(160_000.0, gt=0, description="Samples per second")
    n_periods: int = Field(16, ge=1, description="Lock-in window in LO1-LO2 periods")
    settle_time: float = Field(0.2, ge=0, description="Discarded filter transient, each side")
    filter_order: int = Field(4, ge=1, le=12, description="Butterworth order per pass")
    quadrature_phase_deg: float = Field(90.0, description="Quadrature reference phase (+90 or -90)")
    with_spurs: bool = Field(False, description="Inject DC and LO-LO beat terms")
    workers: int = Field(1, ge=1, description="Scan points in parallel")


class TransformSettings(BaseModel):
    sigma_ref: Optional[float] = Field(None, gt=0, description="Kernel scale; auto = signal waist")
    eps_floor: float = Field(1e-6, gt=0, lt=1, description="P mask floor relative to max |M_W|")
    taper: int = Field(4, ge=0, description="Raised-cosine mask edge in samples")
    via: Literal["chirp", "characteristic"] = Field("chirp", description="Wigner path")
    workers: int = Field(1, ge=1, description="scipy.fft workers")


class OutputSettings(BaseModel):
    dir: str = Field("out", description="Output directory")
    format: Literal["bin", "csv"] = Field("bin", description="Grid file format")


SECTIONS = {
    "field": FieldSettings,
    "grid": GridSettings,
    "lo": LOSettings,
    "scan": ScanSettings,
    "dsp": DspSettings,
    "transform": TransformSettings,
    "output": OutputSettings,
}


# ============================================================
# RUN CONFIG
# ============================================================

class RunConfig(BaseModel):
    """Fully validated run configuration"""
    scenario: Literal["gaussian", "wire", "custom"] = Field("gaussian", description="Signal scenario")
    field: FieldSettings = Field(default_factory=FieldSettings)
    grid: GridSettings = Field(default_factory=GridSettings)
    lo: LOSettings = Field(default_factory=LOSettings)
    scan: ScanSettings = Field(default_factory=ScanSettings)
    dsp: DspSettings = Field(default_factory=DspSettings)
    transform: TransformSettings = Field(default_factory=TransformSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)

    _lines: Dict[str, int] = PrivateAttr(default_factory=dict)

    class Config:
        json_schema_extra = {
            "example": {
                "scenario": "wire",
                "grid": {"n_points": 1024, "unit_mode": "millimeters"},
                "lo": {"preset": "bench"},
            }
        }

    # --------------------------------------------------------
    # flat key/value view
    # --------------------------------------------------------

    def flat(self) -> Dict[str, str]:
        """Every key, defaults included, as config-file text"""
        result = {"scenario": self.scenario}
        for section in SECTIONS:
            for name, value in getattr(self, section).model_dump().items():
                result[f"{section}.{name}"] = _format_value(value)
        return result

    @classmethod
    def from_flat(cls, values: Dict[str, Any]) -> "RunConfig":
        return _build((key, _format_value(value), None) for key, value in values.items())

    def with_overrides(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Flag values win over the file; None means not given"""
        merged = self.flat()
        lines = dict(self._lines)
        for key, value in overrides.items():
            if value is None:
                continue
            merged[key] = _format_value(value)
            lines.pop(key, None)
        return _build((key, value, lines.get(key)) for key, value in merged.items())

    def line_of(self, key: str) -> Optional[int]:
        return self._lines.get(key)

    # --------------------------------------------------------
    # builders
    # --------------------------------------------------------

    @property
    def unit_mode(self) -> UnitMode:
        return self.grid.unit_mode

    def scenario_preset(self) -> Scenario:
        if self.scenario == "custom":
            raise ConfigError("scenario = custom has no preset field", self.line_of("scenario"))
        return get_scenario(
            self.scenario,
            self.unit_mode,
            waist=self.field.waist,
            obstruction_half_width=self.field.obstruction_half_width,
            curvature_radius=self.field.curvature_radius,
            center=self.field.center,
        )

    def wavenumber(self) -> float:
        return self.field.wavenumber or default_wavenumber(self.unit_mode)

    def grid_spec(self, waist: float) -> Grid1D:
        extent = self.grid.extent or GRID_EXTENT_IN_WAISTS * waist
        return Grid1D(n_points=self.grid.n_points, extent=extent, unit_mode=self.unit_mode)

    def lo_config(self, waist: float) -> LOConfig:
        preset = self._lo_preset()
        if self.lo.preset == "bench":
            a, A = preset["a"], preset["A"]
            alpha, focal = preset["alpha"], preset["focal_length"]
        else:
            a, A = preset["a_in_waists"] * waist, preset["A_in_waists"] * waist
            alpha, focal = 1.0, 60.0
        try:
            return LOConfig(
                a=self.lo.a or a,
                A=self.lo.A or A,
                alpha=alpha if self.lo.alpha is None else self.lo.alpha,
                focal_length=self.lo.focal_length or focal,
                freq_signal=self.lo.freq_signal,
                freq_lo1=self.lo.freq_lo1,
                freq_lo2=self.lo.freq_lo2,
                analyzer_bandwidth=self.lo.analyzer_bandwidth,
                e0=self.lo.e0,
            )
        except ConfigError as exc:
            raise ConfigError(exc.reason, self.line_of("lo.a") or self.line_of("lo.preset")) from None

    def scan_ranges(self, waist: float, wavenumber: float) -> Tuple[float, float]:
        """(dx_max, p_max): explicit values, else the LO preset's"""
        preset = self._lo_preset()
        if self.lo.preset == "bench":
            dx_max, p_max = preset["dx_max"], preset["p_max_in_wavenumbers"] * wavenumber
        else:
            dx_max, p_max = preset["dx_max_in_waists"] * waist, preset["p_max_times_waist"] / waist
        return (
            dx_max if self.scan.dx_max is None else self.scan.dx_max,
            p_max if self.scan.p_max is None else self.scan.p_max,
        )

    def scan_config(self, waist: float, wavenumber: float, lo: LOConfig) -> ScanConfig:
        dx_max, p_max = self.scan_ranges(waist, wavenumber)
        return ScanConfig.from_ranges(
            dx_max=dx_max,
            p_max=p_max,
            n_dx=self.scan.n_dx,
            n_p=self.scan.n_p,
            wavenumber=wavenumber,
            focal_length=lo.focal_length,
        )

    def resolved(self) -> Dict[str, str]:
        """
        What every `auto` key stands for in this run, as config-file text

        Keys that need the field file (scenario = custom) or an LO preset
        the unit mode does not support are left out.
        """
        k = self.wavenumber()
        values: Dict[str, Any] = {"field.wavenumber": k}
        if self.scenario != "custom":
            scenario = self.scenario_preset()
            waist = scenario.waist
            values.update(
                {
                    "field.waist": waist,
                    "field.obstruction_half_width": scenario.obstruction_half_width,
                    "grid.extent": self.grid_spec(waist).extent,
                    "transform.sigma_ref": self.transform.sigma_ref or waist,
                }
            )
            try:
                lo = self.lo_config(waist)
                dx_max, p_max = self.scan_ranges(waist, k)
            except ConfigError as exc:
                logger.debug("LO keys left unresolved: %s", exc)
            else:
                values.update(
                    {
                        "lo.a": lo.a,
                        "lo.A": lo.A,
                        "lo.alpha": lo.alpha,
                        "lo.focal_length": lo.focal_length,
                        "lo.e0": lo.amplitude,
                        "scan.dx_max": dx_max,
                        "scan.p_max": p_max,
                    }
                )
        return {key: _format_value(value) for key, value in values.items()}

    def dsp_spec(self) -> DspSpec:
        return DspSpec(**self.dsp.model_dump())

    def reg_spec(self) -> RegSpec:
        return RegSpec(eps_floor=self.transform.eps_floor, taper=self.transform.taper)

    def _lo_preset(self) -> Dict[str, float]:
        if self.lo.preset == "bench" and self.unit_mode is not BENCH_PRESET_UNITS:
            raise ConfigError(
                "lo.preset = bench is defined in millimeters only", self.line_of("lo.preset")
            )
        return LO_PRESETS[self.lo.preset]


# ============================================================
# PARSING
# ============================================================

def _format_value(value: Any) -> str:
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, UnitMode):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(item) for item in value)
    return str(value)


def _known_keys() -> Dict[str, Tuple[str, str]]:
    keys = {"scenario": ("", "scenario")}
    for section, model in SECTIONS.items():
        for name in model.model_fields:
            keys[f"{section}.{name}"] = (section, name)
    return keys


def _build(entries: Iterable[Tuple[str, str, Optional[int]]]) -> RunConfig:
    """Validate (key, text, line) triples into a RunConfig"""
    known = _known_keys()
    raw: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    seen = set()
    for key, text, line in entries:
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", line)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", line)
        seen.add(key)
        if line is not None:
            lines[key] = line
        section, name = known[key]
        value = None if text.strip().lower() == AUTO else text.strip()
        if not section:
            raw[name] = value
        elif value is not None:
            raw.setdefault(section, {})[name] = value

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = ".".join(str(part) for part in error["loc"][:2] if not isinstance(part, int))
        raise ConfigError(f"{key}: {error['msg']}", lines.get(key)) from None

    if config.scenario == "custom" and not config.field.path:
        raise ConfigError("scenario = custom requires field.path", lines.get("scenario"))
    config._lines = lines
    return config


def _read_entries(path: Path) -> List[Tuple[str, str, int]]:
    entries = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            key, sep, value = text.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"expected 'key = value', got {text!r}", number)
            if not value.strip():
                raise ConfigError(f"missing value for {key.strip()!r}", number)
            entries.append((key.strip(), value.strip(), number))
    return entries


def parse_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Parse a config file; None gives the all-defaults config

    Raises:
        ConfigError: unknown/duplicate key, bad value or missing required
            key, carrying the 1-based line number
    """
    if path is None:
        return RunConfig()
    entries = _read_entries(Path(path))
    config = _build(entries)
    logger.debug("config %s: %d explicit keys", path, len(entries))
    return config


def resolve_output_dir(flag_value: Optional[str], config: RunConfig) -> Path:
    """--out flag, then KRPHASE_OUTPUT_DIR, then output.dir"""
    if flag_value:
        return Path(flag_value)
    env_value = os.getenv(OUTPUT_DIR_ENV)
    if env_value:
        return Path(env_value)
    return Path(config.output.dir)
