from .types import (
    HENE_WAVENUMBER_MM,
    HENE_WAVELENGTH_MM,
    Axis,
    DemodResult,
    Domain,
    DspSpec,
    GaussianFitResult,
    Grid1D,
    GridKind,
    LOConfig,
    Marginals,
    PhaseSpaceGrid,
    RegSpec,
    RegularizationReport,
    SampledField,
    ScanConfig,
    SweepEntry,
    SweepReport,
    UnitMode,
)

__all__ = [
    "HENE_WAVENUMBER_MM",
    "HENE_WAVELENGTH_MM",
    "Axis",
    "DemodResult",
    "Domain",
    "DspSpec",
    "GaussianFitResult",
    "Grid1D",
    "GridKind",
    "LOConfig",
    "Marginals",
    "PhaseSpaceGrid",
    "RegSpec",
    "RegularizationReport",
    "SampledField",
    "ScanConfig",
    "SweepEntry",
    "SweepReport",
    "UnitMode",
]
