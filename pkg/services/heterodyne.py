"""
Heterodyne Service - dual local oscillator, overlap integrals and scans

Conventions:
    o1 = sum LO1(x - d_x) psi(x) e^(-i p0 x) dx,  o2 likewise with LO2
    p0 = +k d_p / f
    S  = conj(o1) * o2  ->  c * K*(d_x, p0) as a -> 0 and A -> inf
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from models import (
    DemodResult,
    DspSpec,
    Grid1D,
    GridKind,
    LOConfig,
    PhaseSpaceGrid,
    SampledField,
    ScanConfig,
    SweepEntry,
    SweepReport,
    UnitMode,
)
from models.errors import ConfigError, GridResolutionError
from services.dsp import DemodChain
from services.phasespace import kr_conjugate_at
from services.wavefield import MIN_EXTENT_IN_WAISTS, default_wavenumber

logger = logging.getLogger(__name__)

SAMPLES_PER_FOCUSED_WAIST = 6.0
EXTENT_IN_COLLIMATED_WAISTS = 6.0


# ============================================================
# LOCAL OSCILLATOR
# ============================================================

def _check_lo_grid(cfg: LOConfig, grid: Grid1D) -> None:
    max_spacing = cfg.a / SAMPLES_PER_FOCUSED_WAIST
    if grid.spacing > max_spacing:
        needed = 2 * math.ceil(grid.extent / max_spacing / 2)
        raise GridResolutionError(
            f"grid spacing {grid.spacing:.4g} does not resolve LO1 waist a={cfg.a:g}; "
            f"need n_points >= {needed} at extent {grid.extent:g}"
        )
    min_extent = EXTENT_IN_COLLIMATED_WAISTS * cfg.A
    if grid.extent < min_extent:
        raise GridResolutionError(
            f"grid extent {grid.extent:g} truncates LO2 waist A={cfg.A:g}; need extent >= {min_extent:g}"
        )


def lo_components(cfg: LOConfig, grid: Grid1D, d_x=0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Real LO1 and LO2 profiles (alpha included) centered at d_x; a column of offsets gives one row per offset"""
    offset = grid.x - d_x
    e0 = cfg.amplitude
    lo1 = e0 * np.exp(-offset ** 2 / (2.0 * cfg.a ** 2))
    lo2 = e0 * cfg.alpha * np.exp(-offset ** 2 / (2.0 * cfg.A ** 2))
    return lo1, lo2


def make_lo_field(cfg: LOConfig, grid: Grid1D, theta: float = 0.0, wavenumber: Optional[float] = None) -> SampledField:
    """
    E_LO(x) = E0 [exp(-x^2 / 2a^2) + alpha exp(-x^2 / 2A^2) e^(i theta)]

    Raises:
        GridResolutionError: fewer than 6 samples per a, or extent < 6A
    """
    _check_lo_grid(cfg, grid)
    lo1, lo2 = lo_components(cfg, grid)
    k = default_wavenumber(grid.unit_mode) if wavenumber is None else wavenumber
    return SampledField(grid, lo1 + lo2 * np.exp(1j * theta), wavenumber=k)


# ============================================================
# OVERLAPS
# ============================================================

def _overlap_matrices(
    signal: SampledField, cfg: LOConfig, x0: np.ndarray, p0: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """O[i, j] = overlap at (x0_i, p0_j) for LO1 and LO2"""
    grid = signal.grid
    _check_lo_grid(cfg, grid)
    x = grid.x
    lo1, lo2 = lo_components(cfg, grid, np.asarray(x0, dtype=float)[:, None])
    tilted = signal.amplitudes[:, None] * np.exp(-1j * np.outer(x, np.asarray(p0, dtype=float)))
    return (lo1 @ tilted) * grid.spacing, (lo2 @ tilted) * grid.spacing


def overlap_beat(signal: SampledField, cfg: LOConfig, d_x: float, d_p: float) -> Tuple[complex, complex]:
    """
    Transverse overlaps of the signal with the displaced LOs

    Args:
        signal: position-domain field on a grid that resolves both LOs
        cfg: LO configuration
        d_x: mirror offset (x0 = d_x)
        d_p: lens offset (p0 = k d_p / f)

    Returns:
        (o1, o2)
    """
    p0 = signal.wavenumber * d_p / cfg.focal_length
    o1, o2 = _overlap_matrices(signal, cfg, np.array([d_x]), np.array([p0]))
    return complex(o1[0, 0]), complex(o2[0, 0])


def beat_product(o1: np.ndarray, o2: np.ndarray) -> np.ndarray:
    """The slowly varying squarer term S = conj(o1) * o2"""
    return np.conj(o1) * o2


# ============================================================
# SCANS
# ============================================================

def _scan_meta(cfg: LOConfig, scan: ScanConfig, mode: str) -> dict:
    return {
        "mode": mode,
        "a": repr(cfg.a),
        "A": repr(cfg.A),
        "alpha": repr(cfg.alpha),
        "focal_length": repr(cfg.focal_length),
        "wavenumber": repr(scan.wavenumber),
    }


def ideal_scan(
    signal: SampledField, cfg: LOConfig, scan: ScanConfig, unit_mode: Optional[UnitMode] = None
) -> PhaseSpaceGrid:
    """S = conj(o1) * o2 on the (x0, p0) scan grid"""
    o1, o2 = _overlap_matrices(signal, cfg, scan.x0, scan.p0)
    return PhaseSpaceGrid(
        scan.x_axis,
        scan.p_axis,
        beat_product(o1, o2),
        GridKind.KR_ESTIMATE,
        unit_mode or signal.grid.unit_mode,
        _scan_meta(cfg, scan, "ideal"),
    )


def timedomain_scan(signal: SampledField, cfg: LOConfig, scan: ScanConfig, dsp: DspSpec) -> DemodResult:
    """
    Full beat -> band-pass -> squarer -> lock-in chain at every scan point

    The frequency plan is validated before any synthesis. Points are
    independent; with dsp.workers > 1 they run on a thread pool and are
    written back by index.
    """
    chain = DemodChain(cfg, dsp)
    o1, o2 = _overlap_matrices(signal, cfg, scan.x0, scan.p0)
    flat1, flat2 = o1.ravel(), o2.ravel()
    outputs = np.empty(flat1.size, dtype=np.complex128)

    def demodulate(index: int) -> None:
        outputs[index] = chain.demodulate(flat1[index], flat2[index])

    if dsp.workers > 1:
        with ThreadPoolExecutor(max_workers=dsp.workers) as pool:
            list(pool.map(demodulate, range(flat1.size)))
    else:
        for index in range(flat1.size):
            demodulate(index)

    values = outputs.reshape(o1.shape)
    gain, relative = fit_global_gain(values, beat_product(o1, o2))
    logger.info("time-domain scan: %d points, gain=%s, relative L2 vs ideal=%.3e", values.size, gain, relative)
    return DemodResult(scan.x_axis, scan.p_axis, values.real, values.imag, gain, relative)


def fit_global_gain(candidate: np.ndarray, reference: np.ndarray) -> Tuple[complex, float]:
    """
    Least-squares complex c minimizing ||candidate - c * reference||

    Returns:
        (c, ||candidate - c * reference|| / ||candidate||)
    """
    candidate = np.asarray(candidate, dtype=np.complex128).ravel()
    reference = np.asarray(reference, dtype=np.complex128).ravel()
    energy = float(np.vdot(reference, reference).real)
    if energy == 0:
        raise ConfigError("reference is identically zero; no gain can be fitted")
    gain = complex(np.vdot(reference, candidate) / energy)
    norm = float(np.linalg.norm(candidate))
    residual = float(np.linalg.norm(candidate - gain * reference))
    return gain, residual / norm if norm > 0 else residual


def normalized_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """|<a, b>| / (||a|| ||b||)"""
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    denominator = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(abs(np.vdot(a, b)) / denominator) if denominator > 0 else 0.0


def resolution_sweep(
    signal: SampledField, cfg_base: LOConfig, scan: ScanConfig, factors: Iterable[float] = (1, 2, 4, 8)
) -> SweepReport:
    """
    Tighten LO1 (a/m) and widen LO2 (A*m) for each factor m; the error
    against K* after a global gain fit must not grow with m.
    """
    factors = sorted(float(m) for m in factors)
    if not factors or factors[0] < 1:
        raise ConfigError(f"resolution factors must be >= 1, got {factors}")

    oracle = kr_conjugate_at(signal, scan.x0, scan.p0)
    entries = []
    for factor in factors:
        cfg = cfg_base.with_resolution(factor)
        estimate = ideal_scan(signal, cfg, scan).values
        gain, relative = fit_global_gain(estimate, oracle)
        entries.append(SweepEntry(factor, cfg.a, cfg.A, relative, gain, cfg.a / cfg.A))
        logger.info("sweep m=%g: a=%.4g A=%.4g relative L2=%.3e", factor, cfg.a, cfg.A, relative)

    report = SweepReport(entries)
    if not report.monotone:
        logger.warning("resolution sweep errors are not monotone: %s", report.errors)
    return report


# ============================================================
# DETECTION GRID
# ============================================================

def _next_even_power_of_two(value: float) -> int:
    return max(2, 1 << int(math.ceil(math.log2(max(value, 2.0)))))


def detection_grid(
    cfg: LOConfig,
    scan: ScanConfig,
    waist: float,
    unit_mode: UnitMode = UnitMode.MILLIMETERS,
    base: Optional[Grid1D] = None,
    factors: Sequence[float] = (1.0,),
) -> Grid1D:
    """
    Grid fine enough for LO1, wide enough for LO2 and every scan offset

    With factors, the tightest (a / max m) and widest (A * max m) LO of a
    resolution sweep are covered.
    """
    widest = max(factors)
    a = cfg.a / widest
    A = cfg.A * widest
    x_reach = float(np.max(np.abs(scan.x0))) if scan.x0.size else 0.0
    p_reach = float(np.max(np.abs(scan.p0))) if scan.p0.size else 0.0

    spacing = a / SAMPLES_PER_FOCUSED_WAIST
    if p_reach > 0:
        spacing = min(spacing, math.pi / (2.0 * p_reach))
    extent = max(EXTENT_IN_COLLIMATED_WAISTS * A, MIN_EXTENT_IN_WAISTS * waist + 2.0 * x_reach)
    if base is not None:
        spacing = min(spacing, base.spacing)
        extent = max(extent, base.extent)

    n_points = _next_even_power_of_two(extent / spacing)
    logger.debug("detection grid: n=%d extent=%g (a=%g A=%g)", n_points, extent, a, A)
    return Grid1D(n_points=n_points, extent=extent, unit_mode=unit_mode)
