"""
Exception hierarchy shared by every krphase package

The CLI maps these onto exit codes (see main.py).
"""

from typing import Optional


class KRPhaseError(Exception):
    """Base class for all krphase errors"""


# ============================================================
# CONFIGURATION (exit code 2)
# ============================================================

class ConfigError(KRPhaseError):
    """Invalid run configuration, optionally tied to a config-file line"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        self.reason = message
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GridResolutionError(KRPhaseError):
    """Grid too coarse or too narrow for the requested field"""


class DspConfigError(KRPhaseError):
    """Frequency plan or record length cannot be demodulated exactly"""


# ============================================================
# NUMERICS (exit code 3)
# ============================================================

class ConventionError(KRPhaseError):
    """A result violates a property that only a convention bug can break"""


class KernelOverflowError(KRPhaseError):
    """The regularized P kernel still overflows"""

    def __init__(self, radius: float, threshold: float):
        self.radius = radius
        self.threshold = threshold
        super().__init__(
            f"P kernel exceeds {threshold:.1e} at characteristic-plane radius "
            f"{radius:.6g}; raise the floor or shrink sigma_ref"
        )


class FitConvergenceError(KRPhaseError):
    """Least-squares fit stopped before converging"""

    def __init__(self, message: str, best_residual: float):
        self.best_residual = best_residual
        super().__init__(f"{message} (best residual {best_residual:.6g})")


class ToleranceError(KRPhaseError):
    """A comparison exceeded its tolerance"""


# ============================================================
# FILE FORMATS (exit code 4)
# ============================================================

class GridFormatError(KRPhaseError):
    """Base class for grid/field file problems"""


class MalformedHeaderError(GridFormatError):
    """Header or sidecar cannot be parsed"""


class TruncatedPayloadError(GridFormatError):
    """Payload shorter or longer than the header promises"""

    def __init__(self, path: str, expected: int, actual: int, unit: str = "bytes"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{path}: expected {expected} {unit} of payload, found {actual}")


class FormatVersionError(GridFormatError):
    """File written by an incompatible format version"""
