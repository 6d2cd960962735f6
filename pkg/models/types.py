"""
Type Definitions for the phase-space toolkit

Grids, fields and configuration records are frozen dataclasses; array
members are copied on construction and marked read-only, so instances can
be shared freely between threads.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from .errors import ConfigError, GridResolutionError


HENE_WAVELENGTH_MM = 633e-6
HENE_WAVENUMBER_MM = 2.0 * math.pi / HENE_WAVELENGTH_MM


class UnitMode(str, Enum):
    """Length units of a run"""
    DIMENSIONLESS = "dimensionless"
    MILLIMETERS = "millimeters"


class Domain(str, Enum):
    """Which coordinate a sampled field is expressed in"""
    POSITION = "position"
    MOMENTUM = "momentum"


class GridKind(str, Enum):
    """Tag carried by every phase-space grid and stored in its file header"""
    KR_CONJ = "KRconj"
    KR = "KR"
    WIGNER = "Wigner"
    P = "P"
    Q = "Q"
    CHAR_KR = "CharKR"
    CHAR_W = "CharW"
    KR_ESTIMATE = "KRconjEstimate"

    @property
    def is_real(self) -> bool:
        return self in (GridKind.WIGNER, GridKind.P, GridKind.Q)

    @property
    def is_characteristic(self) -> bool:
        return self in (GridKind.CHAR_KR, GridKind.CHAR_W)


def _readonly(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


# ============================================================
# AXES AND GRIDS
# ============================================================

@dataclass(frozen=True)
class Axis:
    """Uniform axis: value_j = (j - origin) * step"""
    step: float
    n: int
    origin: float

    def __post_init__(self):
        if self.n < 1:
            raise GridResolutionError(f"axis needs at least one sample, got {self.n}")
        if not self.step > 0:
            raise GridResolutionError(f"axis step must be positive, got {self.step}")

    @property
    def values(self) -> np.ndarray:
        return (np.arange(self.n) - self.origin) * self.step

    @classmethod
    def symmetric(cls, half_range: float, n: int) -> "Axis":
        """n samples spanning [-half_range, +half_range] inclusive"""
        if n == 1:
            return cls(step=max(abs(half_range), 1.0), n=1, origin=0.0)
        return cls(step=2.0 * half_range / (n - 1), n=n, origin=(n - 1) / 2.0)


@dataclass(frozen=True)
class Grid1D:
    """
    Uniform transverse grid spanning [-extent/2, +extent/2)

    Sample j sits at x_j = -extent/2 + j * spacing; the conjugate momentum
    grid has spacing 2*pi/extent and spans [-pi/spacing, +pi/spacing).
    """
    n_points: int
    extent: float
    unit_mode: UnitMode = UnitMode.MILLIMETERS

    def __post_init__(self):
        if self.n_points < 2 or self.n_points % 2:
            raise GridResolutionError(f"n_points must be even and >= 2, got {self.n_points}")
        if not self.extent > 0:
            raise GridResolutionError(f"extent must be positive, got {self.extent}")
        object.__setattr__(self, "unit_mode", UnitMode(self.unit_mode))

    @property
    def spacing(self) -> float:
        return self.extent / self.n_points

    @property
    def momentum_spacing(self) -> float:
        return 2.0 * math.pi / self.extent

    @property
    def x_axis(self) -> Axis:
        return Axis(step=self.spacing, n=self.n_points, origin=self.n_points // 2)

    @property
    def p_axis(self) -> Axis:
        return Axis(step=self.momentum_spacing, n=self.n_points, origin=self.n_points // 2)

    @property
    def x(self) -> np.ndarray:
        return self.x_axis.values

    @property
    def p(self) -> np.ndarray:
        return self.p_axis.values


@dataclass(frozen=True)
class SampledField:
    """
    Complex field amplitude on a Grid1D

    `grid` is always the spatial grid; a MOMENTUM-domain field holds psi~(p_j)
    on the grid's conjugate axis.
    """
    grid: Grid1D
    amplitudes: np.ndarray
    wavenumber: float = HENE_WAVENUMBER_MM
    domain: Domain = Domain.POSITION

    def __post_init__(self):
        amplitudes = _readonly(self.amplitudes, np.complex128)
        if amplitudes.shape != (self.grid.n_points,):
            raise GridResolutionError(
                f"field has {amplitudes.shape} samples, grid expects ({self.grid.n_points},)"
            )
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "domain", Domain(self.domain))

    @classmethod
    def normalized(
        cls,
        grid: Grid1D,
        amplitudes: np.ndarray,
        wavenumber: float = HENE_WAVENUMBER_MM,
        domain: Domain = Domain.POSITION,
    ) -> "SampledField":
        """Build a field rescaled to unit L2 norm"""
        raw = cls(grid, amplitudes, wavenumber, domain)
        norm = raw.norm()
        if not norm > 0:
            raise GridResolutionError("cannot normalize a field with zero norm")
        return raw.with_amplitudes(raw.amplitudes / math.sqrt(norm))

    @property
    def coordinates(self) -> np.ndarray:
        return self.grid.x if self.domain is Domain.POSITION else self.grid.p

    @property
    def step(self) -> float:
        return self.grid.spacing if self.domain is Domain.POSITION else self.grid.momentum_spacing

    def norm(self) -> float:
        """Sum |psi_j|^2 * step"""
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.step)

    def with_amplitudes(self, amplitudes: np.ndarray, domain: Optional[Domain] = None) -> "SampledField":
        return replace(self, amplitudes=amplitudes, domain=domain or self.domain)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """
    Function sampled on an x-by-p rectangle (or x'-by-p' for characteristic
    kinds). values[i, j] belongs to (x_axis.values[i], p_axis.values[j]).
    """
    x_axis: Axis
    p_axis: Axis
    values: np.ndarray
    kind: GridKind
    unit_mode: UnitMode = UnitMode.MILLIMETERS
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        kind = GridKind(self.kind)
        dtype = np.float64 if kind.is_real else np.complex128
        values = _readonly(self.values, dtype)
        if values.shape != (self.x_axis.n, self.p_axis.n):
            raise GridResolutionError(
                f"{kind.value} values have shape {values.shape}, axes expect "
                f"({self.x_axis.n}, {self.p_axis.n})"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "unit_mode", UnitMode(self.unit_mode))
        object.__setattr__(self, "meta", {str(k): str(v) for k, v in self.meta.items()})

    @property
    def x(self) -> np.ndarray:
        return self.x_axis.values

    @property
    def p(self) -> np.ndarray:
        return self.p_axis.values

    @property
    def dx(self) -> float:
        return self.x_axis.step

    @property
    def dp(self) -> float:
        return self.p_axis.step

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.values)))

    def derive(self, values: np.ndarray, kind: GridKind, **meta: str) -> "PhaseSpaceGrid":
        """Same axes, new values/kind, metadata merged"""
        merged = dict(self.meta)
        merged.update({k: str(v) for k, v in meta.items()})
        return PhaseSpaceGrid(self.x_axis, self.p_axis, values, kind, self.unit_mode, merged)


class Marginals(NamedTuple):
    position: np.ndarray
    momentum: np.ndarray
    residual_imag: float


@dataclass(frozen=True)
class GaussianFitResult:
    """a * exp(-(x - c)^2 / w^2) fit; residual_l2 = ||model - samples||_2"""
    amplitude: float
    center: float
    width: float
    residual_l2: float
    evaluations: int = 0


@dataclass(frozen=True)
class RegSpec:
    """Regularization of the P kernel"""
    eps_floor: float = 1e-6
    taper: int = 4
    overflow_threshold: float = 1e300
    ill_conditioned_fraction: float = 0.5

    def __post_init__(self):
        if not 0 < self.eps_floor < 1:
            raise ConfigError(f"eps_floor must lie in (0, 1), got {self.eps_floor}")
        if self.taper < 0:
            raise ConfigError(f"taper must be >= 0 samples, got {self.taper}")


@dataclass(frozen=True)
class RegularizationReport:
    removed_fraction: float
    kept_points: int
    ill_conditioned: bool


# ============================================================
# HETERODYNE CONFIGURATION
# ============================================================

@dataclass(frozen=True)
class LOConfig:
    """
    Dual local oscillator: focused LO1 (waist a) plus collimated LO2
    (waist A, relative amplitude alpha). Frequencies are in Hz of the scaled
    plan; only their differences enter the simulation.
    """
    a: float
    A: float
    alpha: float = 1.0
    focal_length: float = 60.0
    freq_signal: float = 120_000.0
    freq_lo1: float = 110_005.0
    freq_lo2: float = 110_000.0
    analyzer_bandwidth: float = 100.0
    e0: Optional[float] = None

    def __post_init__(self):
        if not self.A > self.a > 0:
            raise ConfigError(f"LO waists must satisfy A > a > 0, got a={self.a}, A={self.A}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if not self.focal_length > 0:
            raise ConfigError(f"focal length must be positive, got {self.focal_length}")
        if self.delta <= 0:
            raise ConfigError("LO1 and LO2 frequencies must differ")
        if not self.delta <= 0.1 * abs(self.carrier):
            raise ConfigError(
                f"LO1-LO2 offset {self.delta} Hz is not small against the "
                f"{abs(self.carrier)} Hz beat carrier"
            )
        if not self.analyzer_bandwidth >= 4.0 * self.delta:
            raise ConfigError(
                f"analyzer bandwidth {self.analyzer_bandwidth} Hz must be at least "
                f"4x the LO1-LO2 offset {self.delta} Hz"
            )

    @property
    def omega1(self) -> float:
        """Signal-LO1 beat frequency (Hz, signed)"""
        return self.freq_signal - self.freq_lo1

    @property
    def omega2(self) -> float:
        return self.freq_signal - self.freq_lo2

    @property
    def delta(self) -> float:
        return abs(self.omega1 - self.omega2)

    @property
    def carrier(self) -> float:
        return 0.5 * (self.omega1 + self.omega2)

    @property
    def amplitude(self) -> float:
        """E0; defaults to the value giving LO1 unit L2 norm"""
        if self.e0 is not None:
            return self.e0
        return (math.pi * self.a ** 2) ** -0.25

    def with_resolution(self, factor: float) -> "LOConfig":
        return replace(self, a=self.a / factor, A=self.A * factor)

    def scaled(self, factor: float) -> "LOConfig":
        """Same plan with every frequency multiplied by factor"""
        return replace(
            self,
            freq_signal=self.freq_signal * factor,
            freq_lo1=self.freq_lo1 * factor,
            freq_lo2=self.freq_lo2 * factor,
            analyzer_bandwidth=self.analyzer_bandwidth * factor,
        )


@dataclass(frozen=True)
class ScanConfig:
    """
    Mirror/lens offsets. x0 = d_x and p0 = k * d_p / f; the scan axes are
    stored in (x0, p0) so the output grid reuses them directly.
    """
    x_axis: Axis
    p_axis: Axis
    wavenumber: float
    focal_length: float

    @classmethod
    def from_ranges(
        cls,
        dx_max: float,
        p_max: float,
        n_dx: int,
        n_p: int,
        wavenumber: float,
        focal_length: float,
    ) -> "ScanConfig":
        if dx_max < 0 or p_max < 0:
            raise ConfigError("scan ranges must be >= 0")
        return cls(Axis.symmetric(dx_max, n_dx), Axis.symmetric(p_max, n_p), wavenumber, focal_length)

    @property
    def x0(self) -> np.ndarray:
        return self.x_axis.values

    @property
    def p0(self) -> np.ndarray:
        return self.p_axis.values

    @property
    def dx_values(self) -> np.ndarray:
        return self.x0

    @property
    def dp_values(self) -> np.ndarray:
        return self.p0 * self.focal_length / self.wavenumber


@dataclass(frozen=True)
class DspSpec:
    """Time-domain chain settings (scaled frequency plan, Hz and seconds)"""
    sample_rate: float = 160_000.0
    n_periods: int = 16
    settle_time: float = 0.2
    filter_order: int = 4
    quadrature_phase_deg: float = 90.0
    with_spurs: bool = False
    workers: int = 1

    def scaled(self, factor: float) -> "DspSpec":
        return replace(self, sample_rate=self.sample_rate * factor, settle_time=self.settle_time / factor)


@dataclass(frozen=True)
class DemodResult:
    """Lock-in outputs on the scan grid plus the gain fitted against the analytic product"""
    x_axis: Axis
    p_axis: Axis
    s_r: np.ndarray
    s_i: np.ndarray
    gain: complex
    relative_l2: float

    def __post_init__(self):
        object.__setattr__(self, "s_r", _readonly(self.s_r, np.float64))
        object.__setattr__(self, "s_i", _readonly(self.s_i, np.float64))

    @property
    def values(self) -> np.ndarray:
        return self.s_r + 1j * self.s_i


@dataclass(frozen=True)
class SweepEntry:
    factor: float
    a: float
    A: float
    relative_l2: float
    gain: complex
    joint_resolution: float


@dataclass(frozen=True)
class SweepReport:
    entries: List[SweepEntry]

    @property
    def errors(self) -> List[float]:
        return [entry.relative_l2 for entry in self.entries]

    @property
    def monotone(self) -> bool:
        errors = self.errors
        return all(later <= earlier for earlier, later in zip(errors, errors[1:]))
