"""
DSP Service - beat synthesis, band-pass, squarer and dual-phase lock-in

One scan point goes through:

    V_B(t) = 2 Re[o1 e^(-2 pi i W1 t) + o2 e^(-2 pi i W2 t)]   (W in Hz)
    band-pass around the mean beat frequency (zero phase, two passes)
    square
    project onto cos / shifted cos at the LO1-LO2 difference frequency,
    averaged over an integer number of its periods

so that (s_r, s_i) = g * (Re, Im) of conj(o1) * o2 with a real, scan-point
independent filter gain g.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal as sp_signal

from models import DspSpec, LOConfig
from models.errors import DspConfigError

logger = logging.getLogger(__name__)

OVERSAMPLING = 8.0
MIN_PERIODS = 16


@dataclass(frozen=True)
class DemodPlan:
    """Sample counts of one record"""
    samples_per_period: int
    n_window: int
    n_settle: int

    @property
    def n_total(self) -> int:
        return self.n_window + 2 * self.n_settle

    @property
    def window(self) -> slice:
        return slice(self.n_settle, self.n_settle + self.n_window)


@dataclass(frozen=True)
class BeatCarriers:
    """cos/sin of both beat notes on the record's time axis"""
    cos1: np.ndarray
    sin1: np.ndarray
    cos2: np.ndarray
    sin2: np.ndarray


def validate_plan(cfg: LOConfig, dsp: DspSpec) -> DemodPlan:
    """
    Check the frequency plan before anything is synthesized

    Raises:
        DspConfigError: aliasing, short record, non-integer window or a
            pass band outside (0, fs/2)
    """
    highest = max(abs(cfg.omega1), abs(cfg.omega2))
    if not dsp.sample_rate > OVERSAMPLING * highest:
        raise DspConfigError(
            f"sample rate {dsp.sample_rate:g} Hz must exceed {OVERSAMPLING:g}x the highest beat "
            f"frequency {highest:g} Hz"
        )
    if dsp.n_periods < MIN_PERIODS:
        raise DspConfigError(f"record must span >= {MIN_PERIODS} difference periods, got {dsp.n_periods}")
    if dsp.settle_time < 0:
        raise DspConfigError(f"settle time must be >= 0, got {dsp.settle_time}")
    if dsp.filter_order < 1:
        raise DspConfigError(f"filter order must be >= 1, got {dsp.filter_order}")

    exact = dsp.sample_rate / cfg.delta
    samples_per_period = int(round(exact))
    if abs(exact - samples_per_period) > 1e-9 * exact:
        raise DspConfigError(
            f"sample rate {dsp.sample_rate:g} Hz is not an integer multiple of the "
            f"{cfg.delta:g} Hz difference frequency; the lock-in window would not close"
        )

    low, high = passband(cfg, dsp.filter_order)
    if not 0 < low < high < dsp.sample_rate / 2.0:
        raise DspConfigError(
            f"pass band [{low:g}, {high:g}] Hz must lie inside (0, {dsp.sample_rate / 2.0:g}) Hz"
        )

    n_settle = int(math.ceil(dsp.settle_time * dsp.sample_rate - 1e-9))
    return DemodPlan(samples_per_period, dsp.n_periods * samples_per_period, n_settle)


def passband(cfg: LOConfig, order: int) -> tuple:
    """
    Design edges whose two-pass (squared) response is -3 dB at
    carrier +/- bandwidth/2
    """
    shrink = (math.sqrt(2.0) - 1.0) ** (1.0 / (2.0 * order))
    half = 0.5 * cfg.analyzer_bandwidth / shrink
    center = abs(cfg.carrier)
    return center - half, center + half


def design_bandpass(cfg: LOConfig, dsp: DspSpec) -> np.ndarray:
    low, high = passband(cfg, dsp.filter_order)
    return sp_signal.butter(dsp.filter_order, [low, high], btype="bandpass", output="sos", fs=dsp.sample_rate)


def beat_carriers(cfg: LOConfig, t: np.ndarray) -> BeatCarriers:
    phase1 = 2.0 * math.pi * cfg.omega1 * t
    phase2 = 2.0 * math.pi * cfg.omega2 * t
    return BeatCarriers(np.cos(phase1), np.sin(phase1), np.cos(phase2), np.sin(phase2))


def synthesize_beat(
    o1: complex, o2: complex, carriers: BeatCarriers, spurs: Optional[np.ndarray] = None
) -> np.ndarray:
    """V_B = 2 Re[o1 e^(-i w1 t) + o2 e^(-i w2 t)] (+ optional common-mode spurs)"""
    o1, o2 = complex(o1), complex(o2)
    waveform = 2.0 * (
        o1.real * carriers.cos1 + o1.imag * carriers.sin1 + o2.real * carriers.cos2 + o2.imag * carriers.sin2
    )
    if spurs is not None:
        waveform = waveform + spurs
    return waveform


def common_mode_spurs(cfg: LOConfig, t: np.ndarray) -> np.ndarray:
    """
    DC from the signal and LO powers plus the LO1-LO2 beat, the terms a
    balanced detector would cancel
    """
    e0 = cfg.amplitude
    dc = 1.0 + e0 ** 2 * math.sqrt(math.pi) * (cfg.a + cfg.alpha ** 2 * cfg.A)
    lo_beat = e0 ** 2 * cfg.alpha * math.sqrt(2.0 * math.pi) * cfg.a * cfg.A / math.hypot(cfg.a, cfg.A)
    return dc + 2.0 * lo_beat * np.cos(2.0 * math.pi * (cfg.omega1 - cfg.omega2) * t)


def bandpass(waveform: np.ndarray, sos: np.ndarray) -> np.ndarray:
    """Zero-phase forward-backward filtering"""
    return sp_signal.sosfiltfilt(sos, waveform)


def squarer(waveform: np.ndarray) -> np.ndarray:
    return waveform * waveform


def lockin_references(cfg: LOConfig, t: np.ndarray, quadrature_phase_deg: float = 90.0) -> np.ndarray:
    """
    (2, n) in-phase and quadrature references at the signed difference
    frequency W2 - W1; a -90 degree quadrature conjugates the output
    """
    phase = 2.0 * math.pi * (cfg.omega2 - cfg.omega1) * t
    return np.vstack([np.cos(phase), np.cos(phase - math.radians(quadrature_phase_deg))])


def lockin(squared: np.ndarray, references: np.ndarray, window: slice) -> complex:
    """s_r + i s_i, each the window mean of squared * reference, halved"""
    projected = references[:, window] @ squared[window] / (window.stop - window.start)
    return complex(0.5 * projected[0], 0.5 * projected[1])


class DemodChain:
    """
    Precomputed time axis, filter and references shared by every scan point

    demodulate() only reads instance arrays, so one chain can serve a
    thread pool.
    """

    def __init__(self, cfg: LOConfig, dsp: DspSpec):
        self.cfg = cfg
        self.dsp = dsp
        self.plan = validate_plan(cfg, dsp)
        self.sos = design_bandpass(cfg, dsp)
        t = np.arange(self.plan.n_total) / dsp.sample_rate
        self.carriers = beat_carriers(cfg, t)
        self.references = lockin_references(cfg, t, dsp.quadrature_phase_deg)
        self.spurs = common_mode_spurs(cfg, t) if dsp.with_spurs else None
        logger.debug(
            "demod plan: %d samples (%d settle each side, %d-sample window = %d periods)",
            self.plan.n_total,
            self.plan.n_settle,
            self.plan.n_window,
            dsp.n_periods,
        )

    def demodulate(self, o1: complex, o2: complex) -> complex:
        waveform = synthesize_beat(o1, o2, self.carriers, self.spurs)
        return lockin(squarer(bandpass(waveform, self.sos)), self.references, self.plan.window)
