"""
Pipeline - Scenario-driven stages shared by the CLI subcommands

Service functions are wrapped once here with stage tracking, so every
command records the same stage names in its run log and manifest.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import RunConfig
from models import Grid1D, GridKind, PhaseSpaceGrid, SampledField
from models.errors import ConfigError, FitConvergenceError, MalformedHeaderError
from observability import with_observability
from persistence import load_field, load_grid, load_marginal
from services.closed_forms import (
    gaussian_husimi,
    gaussian_kr_characteristic,
    gaussian_kr_conjugate,
    gaussian_wigner,
    gaussian_wigner_characteristic,
)
from services.fitting import fit_gaussian_width, waist_from_momentum_width
from services.heterodyne import (
    detection_grid,
    fit_global_gain,
    ideal_scan,
    normalized_correlation,
    resolution_sweep,
    timedomain_scan,
)
from services.phasespace import (
    characteristic_from_kr,
    direct_wigner,
    kr_conjugate,
    kr_conjugate_at,
    kr_from_conjugate,
    kr_from_wigner,
    marginals,
    p_from_characteristic,
    q_from_characteristic,
    wigner_characteristic,
    wigner_from_characteristic,
    wigner_from_kr,
)

logger = logging.getLogger(__name__)

TRANSFORM_TARGETS = ("wigner", "p", "q", "characteristic", "wigner-characteristic", "conjugate", "krconj")
COMPARE_ORACLES = ("kr", "direct-wigner", "closed-form")

# Stage wrappers
kr_stage = with_observability("kr_conjugate")(kr_conjugate)
marginals_stage = with_observability("marginals")(marginals)
characteristic_stage = with_observability("characteristic_from_kr")(characteristic_from_kr)
wigner_chirp_stage = with_observability("wigner_from_kr")(wigner_from_kr)
wigner_characteristic_stage = with_observability("wigner_from_characteristic")(wigner_from_characteristic)
kr_from_wigner_stage = with_observability("kr_from_wigner")(kr_from_wigner)
direct_wigner_stage = with_observability("direct_wigner")(direct_wigner)
q_stage = with_observability("q_from_characteristic")(q_from_characteristic)
p_stage = with_observability("p_from_characteristic")(p_from_characteristic)
ideal_scan_stage = with_observability("ideal_scan")(ideal_scan)
timedomain_scan_stage = with_observability("timedomain_scan")(timedomain_scan)
sweep_stage = with_observability("resolution_sweep")(resolution_sweep)
fit_stage = with_observability("fit_gaussian_width")(fit_gaussian_width)


# ============================================================
# SIGNAL
# ============================================================

@dataclass(frozen=True)
class Signal:
    """Signal field plus the beam parameters the oracles need"""
    field: SampledField
    waist: float
    curvature_radius: float = math.inf
    center: float = 0.0
    obstruction_half_width: float = 0.0
    source: str = "gaussian"


def resample_field(field: SampledField, grid: Grid1D) -> SampledField:
    """Linear interpolation onto another grid; zero outside the source"""
    x = field.grid.x
    amplitudes = np.interp(grid.x, x, field.amplitudes.real, left=0.0, right=0.0) + 1j * np.interp(
        grid.x, x, field.amplitudes.imag, left=0.0, right=0.0
    )
    return SampledField(grid, amplitudes, wavenumber=field.wavenumber)


@with_observability("build_signal")
def build_signal(config: RunConfig, grid: Optional[Grid1D] = None) -> Signal:
    """
    Scenario field on the configured grid (or on `grid` when given)

    Custom fields are loaded from field.path; their waist is field.waist or,
    when auto, the fitted width of |psi|^2.
    """
    if config.scenario == "custom":
        field = load_field(config.field.path)
        waist = config.field.waist
        if waist is None:
            waist = fit_gaussian_width(np.abs(field.amplitudes) ** 2, field.grid).width
            logger.info("custom field: fitted waist %.6g", waist)
        if grid is not None:
            field = resample_field(field, grid)
        return Signal(field, waist, config.field.curvature_radius, config.field.center, 0.0, str(config.field.path))

    scenario = config.scenario_preset()
    grid = grid or config.grid_spec(scenario.waist)
    field = scenario.build(grid, config.wavenumber())
    return Signal(
        field,
        scenario.waist,
        scenario.curvature_radius,
        scenario.center,
        scenario.obstruction_half_width,
        scenario.name,
    )


# ============================================================
# KR AND TRANSFORMS
# ============================================================

def grid_integral(psg: PhaseSpaceGrid) -> complex:
    return complex(np.sum(psg.values) * psg.dx * psg.dp)


def kr_diagnostics(krc: PhaseSpaceGrid, field: SampledField) -> Dict[str, Any]:
    """Marginal identities and marginal-width fits of a K* grid"""
    margs = marginals_stage(krc)
    intensity = np.abs(field.amplitudes) ** 2
    diagnostics: Dict[str, Any] = {
        "marginal_x_linf": float(np.max(np.abs(margs.position - intensity))),
        "marginal_residual_imag": margs.residual_imag,
        "integral": grid_integral(krc),
        "peak": krc.peak,
    }
    try:
        position_fit = fit_stage(margs.position, krc.x_axis)
        momentum_fit = fit_stage(margs.momentum, krc.p_axis)
        diagnostics["width_from_x_marginal"] = position_fit.width
        diagnostics["width_from_p_marginal"] = waist_from_momentum_width(momentum_fit.width)
    except (ConfigError, FitConvergenceError) as exc:
        logger.warning("marginal width fit failed: %s", exc)
    return diagnostics


def _as_krc(psg: PhaseSpaceGrid) -> PhaseSpaceGrid:
    if psg.kind is GridKind.KR:
        return kr_from_conjugate(psg)
    if psg.kind is not GridKind.KR_CONJ:
        raise ConfigError(f"expected a KRconj or KR grid, got {psg.kind.value}")
    return psg


def _as_characteristic(psg: PhaseSpaceGrid, workers: int) -> PhaseSpaceGrid:
    if psg.kind in (GridKind.CHAR_KR, GridKind.CHAR_W):
        return psg
    return characteristic_stage(_as_krc(psg), workers)


def transform(
    source: PhaseSpaceGrid,
    to: str,
    config: RunConfig,
    sigma_ref: Optional[float] = None,
    via: Optional[str] = None,
) -> Tuple[PhaseSpaceGrid, Dict[str, Any]]:
    """
    Dispatch one transform; returns the result grid and its diagnostics

    sigma_ref defaults to transform.sigma_ref, then the waist recorded in
    the grid metadata.
    """
    if to not in TRANSFORM_TARGETS:
        raise ConfigError(f"unknown transform target {to!r}; choose from {TRANSFORM_TARGETS}")
    workers = config.transform.workers
    via = via or config.transform.via
    diagnostics: Dict[str, Any] = {}

    if to == "conjugate":
        result = kr_from_conjugate(source)
    elif to == "krconj":
        if source.kind is not GridKind.WIGNER:
            raise ConfigError(f"krconj is recovered from a Wigner grid, got {source.kind.value}")
        result = kr_from_wigner_stage(source, workers)
    elif to in ("characteristic", "wigner-characteristic"):
        result = _as_characteristic(source, workers)
        if to == "wigner-characteristic":
            result = wigner_characteristic(result)
        diagnostics["value_at_origin"] = complex(result.values[result.x_axis.n // 2, result.p_axis.n // 2])
    elif to == "wigner":
        if via == "chirp" and source.kind in (GridKind.KR_CONJ, GridKind.KR):
            result = wigner_chirp_stage(_as_krc(source), workers)
        else:
            result = wigner_characteristic_stage(_as_characteristic(source, workers), workers)
        diagnostics.update(_real_grid_diagnostics(result))
    else:
        waist = float(source.meta.get("waist", "nan"))
        sigma = sigma_ref or config.transform.sigma_ref or waist
        if not sigma > 0:
            raise ConfigError("sigma_ref is auto but the grid carries no waist; pass --sigma-ref")
        char = _as_characteristic(source, workers)
        if to == "q":
            result = q_stage(char, sigma, workers)
        else:
            result, report = p_stage(char, sigma, config.reg_spec(), workers)
            diagnostics.update(
                removed_fraction=report.removed_fraction,
                kept_points=report.kept_points,
                ill_conditioned=report.ill_conditioned,
            )
        diagnostics["sigma_ref"] = sigma
        diagnostics.update(_real_grid_diagnostics(result))

    return result, diagnostics


def _real_grid_diagnostics(psg: PhaseSpaceGrid) -> Dict[str, Any]:
    values = psg.values
    peak = float(np.max(values))
    return {
        "integral": float(np.sum(values) * psg.dx * psg.dp),
        "max": peak,
        "min": float(np.min(values)),
        "negativity_ratio": float(-np.min(values) / peak) if peak > 0 else 0.0,
    }


# ============================================================
# HETERODYNE
# ============================================================

def heterodyne(
    config: RunConfig, mode: str, signal: Optional[Signal] = None
) -> Tuple[PhaseSpaceGrid, Signal, Dict[str, Any]]:
    """
    One heterodyne run: ideal, timedomain or sweep

    The signal is rebuilt on a detection grid that resolves LO1, contains
    LO2 and every scan offset.

    Returns:
        (estimate grid, signal on the detection grid, diagnostics)
    """
    if mode not in ("ideal", "timedomain", "sweep"):
        raise ConfigError(f"unknown heterodyne mode {mode!r}")
    signal = signal or build_signal(config)
    k = signal.field.wavenumber
    lo = config.lo_config(signal.waist)
    scan = config.scan_config(signal.waist, k, lo)
    factors: Sequence[float] = config.scan.sweep_factors if mode == "sweep" else (1.0,)
    grid = detection_grid(lo, scan, signal.waist, config.unit_mode, base=signal.field.grid, factors=factors)
    if grid != signal.field.grid:
        signal = _rebuild(signal, config, grid)

    oracle = kr_conjugate_at(signal.field, scan.x0, scan.p0)
    diagnostics: Dict[str, Any] = {
        "detection_grid_points": grid.n_points,
        "detection_grid_extent": grid.extent,
        "a": lo.a,
        "A": lo.A,
    }

    if mode == "ideal":
        estimate = ideal_scan_stage(signal.field, lo, scan, config.unit_mode)
    elif mode == "timedomain":
        result = timedomain_scan_stage(signal.field, lo, scan, config.dsp_spec())
        estimate = PhaseSpaceGrid(
            result.x_axis,
            result.p_axis,
            result.values,
            GridKind.KR_ESTIMATE,
            config.unit_mode,
            {"mode": "timedomain", "gain": repr(result.gain), "a": repr(lo.a), "A": repr(lo.A)},
        )
        diagnostics["gain_vs_ideal"] = result.gain
        diagnostics["relative_l2_vs_ideal"] = result.relative_l2
    else:
        report = sweep_stage(signal.field, lo, scan, factors)
        diagnostics["sweep"] = [
            {
                "factor": entry.factor,
                "a": entry.a,
                "A": entry.A,
                "relative_l2": entry.relative_l2,
                "gain": entry.gain,
                "joint_resolution": entry.joint_resolution,
            }
            for entry in report.entries
        ]
        diagnostics["sweep_monotone"] = report.monotone
        estimate = ideal_scan_stage(signal.field, lo.with_resolution(max(factors)), scan, config.unit_mode)

    gain, relative = fit_global_gain(estimate.values, oracle)
    diagnostics["gain_vs_kr"] = gain
    diagnostics["relative_l2_vs_kr"] = relative
    diagnostics["correlation_vs_kr"] = normalized_correlation(estimate.values, oracle)
    return estimate.derive(estimate.values, estimate.kind, waist=repr(signal.waist)), signal, diagnostics


def _rebuild(signal: Signal, config: RunConfig, grid: Grid1D) -> Signal:
    if config.scenario == "custom":
        return Signal(
            resample_field(signal.field, grid),
            signal.waist,
            signal.curvature_radius,
            signal.center,
            signal.obstruction_half_width,
            signal.source,
        )
    return build_signal(config, grid)


# ============================================================
# COMPARISON
# ============================================================

def compare_values(candidate: np.ndarray, reference: np.ndarray) -> Dict[str, float]:
    """Absolute L-infinity, relative L2 and normalized correlation"""
    candidate = np.asarray(candidate)
    reference = np.asarray(reference)
    if candidate.shape != reference.shape:
        raise ConfigError(f"cannot compare shapes {candidate.shape} and {reference.shape}")
    difference = candidate - reference
    reference_norm = float(np.linalg.norm(reference))
    return {
        "linf": float(np.max(np.abs(difference))),
        "l2": float(np.linalg.norm(difference)) / reference_norm if reference_norm > 0 else math.inf,
        "correlation": normalized_correlation(candidate, reference),
    }


def field_for(candidate: PhaseSpaceGrid, config: RunConfig, field_path: Optional[Union[str, Path]] = None) -> Signal:
    """Field a grid was computed from: explicit path, grid metadata, or the scenario"""
    path = field_path or candidate.meta.get("field")
    if path:
        field = load_field(path)
        waist = float(candidate.meta.get("waist", "nan"))
        if not waist > 0:
            waist = fit_gaussian_width(np.abs(field.amplitudes) ** 2, field.grid).width
        return Signal(field, waist, source=str(path))
    return build_signal(config)


def reference_values(
    candidate: PhaseSpaceGrid,
    against: str,
    config: RunConfig,
    field_path: Optional[Union[str, Path]] = None,
) -> np.ndarray:
    """Oracle values on the candidate's axes"""
    if against not in COMPARE_ORACLES:
        reference = load_grid(against)
        if reference.values.shape != candidate.values.shape:
            raise ConfigError(f"{against} has shape {reference.values.shape}, expected {candidate.values.shape}")
        return reference.values

    if against == "closed-form":
        return _closed_form(candidate, config)

    signal = field_for(candidate, config, field_path)
    if against == "kr":
        values = kr_conjugate_at(signal.field, candidate.x, candidate.p)
        return np.conj(values) if candidate.kind is GridKind.KR else values

    if candidate.values.shape != (signal.field.grid.n_points, signal.field.grid.n_points):
        raise ConfigError("direct-wigner needs the candidate on the field's own DFT grid")
    return direct_wigner_stage(signal.field, config.transform.workers).values


def _closed_form(candidate: PhaseSpaceGrid, config: RunConfig) -> np.ndarray:
    if config.scenario != "gaussian" or (config.field.obstruction_half_width or 0) > 0:
        raise ConfigError("closed forms exist only for the unobstructed gaussian scenario")
    scenario = config.scenario_preset()
    k = float(candidate.meta.get("wavenumber", config.wavenumber()))
    waist, radius, center = scenario.waist, scenario.curvature_radius, scenario.center
    x, p = candidate.x, candidate.p
    kind = candidate.kind
    if kind in (GridKind.KR_CONJ, GridKind.KR_ESTIMATE):
        return gaussian_kr_conjugate(x, p, waist, radius, center, k)
    if kind is GridKind.KR:
        return np.conj(gaussian_kr_conjugate(x, p, waist, radius, center, k))
    if center != 0 and kind not in (GridKind.WIGNER,):
        raise ConfigError(f"the {kind.value} closed form assumes a centered beam")
    if kind is GridKind.WIGNER:
        return gaussian_wigner(x, p, waist, radius, center, k)
    if kind is GridKind.CHAR_W:
        return gaussian_wigner_characteristic(x, p, waist, radius, k)
    if kind is GridKind.CHAR_KR:
        return gaussian_kr_characteristic(x, p, waist, radius, k)
    if kind is GridKind.Q:
        sigma_ref = float(candidate.meta.get("sigma_ref", waist))
        return gaussian_husimi(x, p, waist, sigma_ref, radius, k)
    raise ConfigError(f"no closed form for {kind.value} grids")


# ============================================================
# FITS
# ============================================================

def fit_input(path: Union[str, Path], slice_spec: Optional[str] = None) -> Dict[str, Any]:
    """
    Fit a Gaussian to a marginal CSV or to a grid slice

    slice_spec is `p=<value>` (x-profile at the nearest p) or `x=<value>`.
    A momentum profile additionally reports the implied beam waist.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv" and slice_spec is None:
        try:
            coordinates, samples, header = load_marginal(path)
            axis = header.axis
        except MalformedHeaderError:
            coordinates = None
        if coordinates is not None:
            return _fit_profile(samples, coordinates, axis)

    psg = load_grid(path)
    axis_name, _, value_text = (slice_spec or "p=0").partition("=")
    axis_name = axis_name.strip()
    try:
        value = float(value_text)
    except ValueError:
        raise ConfigError(f"slice must look like p=0 or x=0, got {slice_spec!r}") from None
    values = np.real(psg.values)
    if axis_name == "p":
        column = int(np.argmin(np.abs(psg.p - value)))
        return _fit_profile(values[:, column], psg.x, "x")
    if axis_name == "x":
        row = int(np.argmin(np.abs(psg.x - value)))
        return _fit_profile(values[row, :], psg.p, "p")
    raise ConfigError(f"slice axis must be x or p, got {axis_name!r}")


def _fit_profile(samples: np.ndarray, coordinates: np.ndarray, axis: str) -> Dict[str, Any]:
    result = fit_stage(samples, coordinates)
    report: Dict[str, Any] = {
        "axis": axis,
        "amplitude": result.amplitude,
        "center": result.center,
        "width": result.width,
        "residual_l2": result.residual_l2,
    }
    if axis == "p":
        report["waist"] = waist_from_momentum_width(result.width)
    return report
