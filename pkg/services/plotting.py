"""
Plot Emission - gnuplot data blocks and scripts for phase-space grids

Each plot is a `<stem>.dat` file (one block per x row, blank line between
rows, values divided by the peak of the plotted part) and a `<stem>.gp`
script laying out a 2-D map on the left and a 3-D surface on the right.
Rendering happens outside this process (`gnuplot <stem>.gp`).
"""

import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from models import PhaseSpaceGrid, UnitMode
from models.errors import ConfigError

logger = logging.getLogger(__name__)

PARTS = ("re", "im", "abs")

_AXIS_LABELS = {
    UnitMode.MILLIMETERS: ("x [mm]", "p [1/mm]"),
    UnitMode.DIMENSIONLESS: ("x [w]", "p [1/w]"),
}

_SCRIPT = """\
# {kind} ({part}), peak-scaled by {peak:.6g}
set terminal pngcairo size 1400,600 enhanced
set output '{png}'
set multiplot layout 1,2 title '{kind} ({part})'
set xlabel '{xlabel}'
set ylabel '{ylabel}'
set palette defined (-1 'blue', 0 'white', 1 'red')
set cbrange [-1:1]
set view map
splot '{dat}' using 1:2:3 with pm3d notitle
set view 60,30
set hidden3d
set zlabel 'scaled'
splot '{dat}' using 1:2:3 with pm3d notitle
unset multiplot
"""


def select_part(psg: PhaseSpaceGrid, part: str) -> np.ndarray:
    if part not in PARTS:
        raise ConfigError(f"plot part must be one of {PARTS}, got {part!r}")
    if part == "abs":
        return np.abs(psg.values)
    if part == "im":
        return np.zeros(psg.values.shape) if psg.kind.is_real else psg.values.imag
    return np.real(psg.values)


def write_plot(
    psg: PhaseSpaceGrid, stem: Union[str, Path], part: str = "re", stride: int = 1
) -> Tuple[Path, Path]:
    """
    Write `<stem>.dat` and `<stem>.gp`

    Args:
        psg: grid to plot
        stem: output path without suffix
        part: re, im or abs
        stride: keep every stride-th row and column

    Returns:
        (data path, script path)
    """
    if stride < 1:
        raise ConfigError(f"plot stride must be >= 1, got {stride}")
    stem = Path(stem)
    values = select_part(psg, part)[::stride, ::stride]
    x = psg.x[::stride]
    p = psg.p[::stride]
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    scaled = values / peak if peak > 0 else values

    dat_path = stem.with_suffix(".dat")
    with open(dat_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"# kind = {psg.kind.value}\n# part = {part}\n# peak = {peak!r}\n")
        for row, x_value in enumerate(x):
            block = np.column_stack([np.full(p.size, x_value), p, scaled[row]])
            np.savetxt(handle, block, fmt="%.10g")
            handle.write("\n")

    xlabel, ylabel = _AXIS_LABELS[psg.unit_mode]
    if psg.kind.is_characteristic:
        xlabel, ylabel = xlabel.replace("x", "x'", 1), ylabel.replace("p", "p'", 1)
    script_path = stem.with_suffix(".gp")
    script_path.write_text(
        _SCRIPT.format(
            kind=psg.kind.value,
            part=part,
            peak=peak,
            png=stem.with_suffix(".png").name,
            dat=dat_path.name,
            xlabel=xlabel,
            ylabel=ylabel,
        ),
        encoding="utf-8",
    )
    logger.debug("plot %s: %dx%d points", stem, values.shape[0], values.shape[1])
    return dat_path, script_path
