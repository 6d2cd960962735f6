"""
Gaussian width fitting for marginals and phase-space slices
"""

import logging
import math
from typing import Union

import numpy as np
from scipy.optimize import least_squares

from models import Axis, GaussianFitResult, Grid1D
from models.errors import ConfigError, FitConvergenceError

logger = logging.getLogger(__name__)

MAX_EVALUATIONS = 2000
FIT_TOLERANCE = 1e-12

Coordinates = Union[Grid1D, Axis, np.ndarray]


def _coordinates(grid: Coordinates) -> np.ndarray:
    if isinstance(grid, Grid1D):
        return grid.x
    if isinstance(grid, Axis):
        return grid.values
    return np.asarray(grid, dtype=float)


def _principal_lobe(samples: np.ndarray) -> slice:
    """Contiguous positive run around the maximum"""
    peak = int(np.argmax(samples))
    left = peak
    while left > 0 and samples[left - 1] > 0:
        left -= 1
    right = peak
    while right < samples.size - 1 and samples[right + 1] > 0:
        right += 1
    return slice(left, right + 1)


def _moment_estimate(samples: np.ndarray, x: np.ndarray) -> np.ndarray:
    lobe = _principal_lobe(samples)
    weights = np.clip(samples[lobe], 0.0, None)
    coords = x[lobe]
    total = float(np.sum(weights))
    if total <= 0:
        return np.array([float(np.max(samples)), float(x[np.argmax(samples)]), float(np.ptp(x)) / 4.0])
    center = float(np.sum(weights * coords) / total)
    rms = math.sqrt(float(np.sum(weights * (coords - center) ** 2) / total))
    width = rms * math.sqrt(2.0) if rms > 0 else float(abs(x[1] - x[0]))
    return np.array([float(np.max(samples)), center, width])


def fit_gaussian_width(
    samples: np.ndarray, grid: Coordinates, max_evaluations: int = MAX_EVALUATIONS
) -> GaussianFitResult:
    """
    Least-squares fit of a * exp(-(x - c)^2 / w^2)

    w is the 1/e-intensity half-width. Initialization is deterministic:
    a = max, c = centroid and w = RMS * sqrt(2) over the principal lobe.

    Args:
        samples: real samples, one per coordinate
        grid: Grid1D (fit against x), Axis or coordinate array
        max_evaluations: function-evaluation budget

    Returns:
        GaussianFitResult with |w| and the final residual norm

    Raises:
        FitConvergenceError: budget exhausted or the solver failed
    """
    y = np.asarray(samples, dtype=float)
    x = _coordinates(grid)
    if y.shape != x.shape or y.size < 3:
        raise ConfigError(f"need matching samples and coordinates (>= 3), got {y.shape} and {x.shape}")
    if not np.all(np.isfinite(y)):
        raise ConfigError("samples contain non-finite values")

    def residual(params: np.ndarray) -> np.ndarray:
        amplitude, center, width = params
        return amplitude * np.exp(-((x - center) / width) ** 2) - y

    initial = _moment_estimate(y, x)
    result = least_squares(
        residual,
        initial,
        method="lm",
        x_scale="jac",
        ftol=FIT_TOLERANCE,
        xtol=FIT_TOLERANCE,
        gtol=FIT_TOLERANCE,
        max_nfev=max_evaluations,
    )
    best = float(np.linalg.norm(result.fun))
    if result.status <= 0:
        raise FitConvergenceError(f"Gaussian fit did not converge: {result.message}", best)

    amplitude, center, width = result.x
    logger.debug("gaussian fit: a=%.6g c=%.6g w=%.6g residual=%.3e nfev=%d", amplitude, center, width, best, result.nfev)
    return GaussianFitResult(
        amplitude=float(amplitude),
        center=float(center),
        width=float(abs(width)),
        residual_l2=best,
        evaluations=int(result.nfev),
    )


def waist_from_momentum_width(momentum_width: float) -> float:
    """Beam waist from the fitted 1/e width of the momentum marginal"""
    if not momentum_width > 0:
        raise ConfigError(f"momentum width must be positive, got {momentum_width}")
    return 1.0 / momentum_width
