from .fitting import fit_gaussian_width, waist_from_momentum_width
from .heterodyne import (
    detection_grid,
    fit_global_gain,
    ideal_scan,
    make_lo_field,
    normalized_correlation,
    overlap_beat,
    resolution_sweep,
    timedomain_scan,
)
from .phasespace import (
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
from .wavefield import apply_obstruction, from_momentum, make_gaussian, to_momentum

__all__ = [
    "fit_gaussian_width",
    "waist_from_momentum_width",
    "detection_grid",
    "fit_global_gain",
    "ideal_scan",
    "make_lo_field",
    "normalized_correlation",
    "overlap_beat",
    "resolution_sweep",
    "timedomain_scan",
    "characteristic_from_kr",
    "direct_wigner",
    "kr_conjugate",
    "kr_conjugate_at",
    "kr_from_conjugate",
    "kr_from_wigner",
    "marginals",
    "p_from_characteristic",
    "q_from_characteristic",
    "wigner_characteristic",
    "wigner_from_characteristic",
    "wigner_from_kr",
    "apply_obstruction",
    "from_momentum",
    "make_gaussian",
    "to_momentum",
]
