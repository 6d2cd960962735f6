"""
krphase - Kirkwood-Rihaczek phase-space toolkit
Command-line front end

Subcommands compose through files in the output directory:

    field -> kr -> transform -> marginals | fit | compare | plot
    heterodyne -> compare | plot

Every command writes its outputs plus a JSON manifest; commands run
without --input pick up the grid named by the last manifest, and kr
without --field picks up its field.

Exit codes: 0 success, 2 configuration, 3 numeric tolerance, 4 I/O.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from config import RunConfig, parse_config, resolve_output_dir
from models import PhaseSpaceGrid
from models.errors import (
    ConfigError,
    ConventionError,
    DspConfigError,
    FitConvergenceError,
    GridFormatError,
    GridResolutionError,
    KernelOverflowError,
    ToleranceError,
)
from observability import get_run_tracker
from persistence import (
    RunManifest,
    load_field,
    load_grid,
    read_field_meta,
    read_manifest,
    save_field,
    save_grid,
    save_marginal,
    write_manifest,
)
from services.fitting import fit_gaussian_width
from services.pipeline import (
    COMPARE_ORACLES,
    TRANSFORM_TARGETS,
    Signal,
    build_signal,
    compare_values,
    fit_input,
    heterodyne,
    kr_diagnostics,
    kr_stage,
    marginals_stage,
    reference_values,
    transform,
)
from services.plotting import PARTS, write_plot

logger = logging.getLogger("krphase")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_IO = 4

CONFIG_ERRORS = (ConfigError, DspConfigError, GridResolutionError)
NUMERIC_ERRORS = (ToleranceError, ConventionError, KernelOverflowError, FitConvergenceError)
IO_ERRORS = (GridFormatError, OSError)

LATEST_MANIFEST = "latest.manifest.json"
RULE = "=" * 80

TRANSFORM_OUTPUT_NAMES = {
    "wigner": "wigner",
    "p": "p",
    "q": "q",
    "characteristic": "char_kr",
    "wigner-characteristic": "char_w",
    "conjugate": "kr_conjugated",
    "krconj": "kr_from_wigner",
}

# flag dest -> config key
OVERRIDE_KEYS = {
    "scenario": "scenario",
    "unit_mode": "grid.unit_mode",
    "n_points": "grid.n_points",
    "extent": "grid.extent",
    "waist": "field.waist",
    "field_path": "field.path",
    "lo_preset": "lo.preset",
    "workers": "transform.workers",
    "format": "output.format",
    "sigma_ref": "transform.sigma_ref",
    "via": "transform.via",
    "eps_floor": "transform.eps_floor",
    "with_spurs": "dsp.with_spurs",
    "quadrature_phase": "dsp.quadrature_phase_deg",
    "dsp_workers": "dsp.workers",
}

# flags that change the field kr would build
FIELD_FLAGS = ("config", "scenario", "unit_mode", "n_points", "extent", "waist", "field_path")


# ============================================================
# RUN CONTEXT
# ============================================================

@dataclass
class RunContext:
    """State shared by one command"""
    args: argparse.Namespace
    config: RunConfig
    out_dir: Path
    argv: List[str]
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    stem: str = ""

    @property
    def suffix(self) -> str:
        return ".csv" if self.config.output.format == "csv" else ".bin"

    def output(self, name: str, suffix: Optional[str] = None) -> Path:
        return self.out_dir / f"{name}{suffix or self.suffix}"

    def input_grid(self) -> Path:
        """--input, else the grid of the last manifest in the output directory"""
        if getattr(self.args, "input", None):
            return Path(self.args.input)
        latest = self.out_dir / LATEST_MANIFEST
        if not latest.exists():
            raise ConfigError(f"no --input given and no previous run in {self.out_dir}")
        grid = read_manifest(latest).outputs.get("grid")
        if not grid:
            raise ConfigError(f"the last run in {self.out_dir} produced no grid; pass --input")
        return Path(grid)

    def latest_field(self) -> Optional[Path]:
        """Field written or read by the last run in the output directory"""
        latest = self.out_dir / LATEST_MANIFEST
        if not latest.exists():
            return None
        recorded = read_manifest(latest)
        path = recorded.outputs.get("field") or recorded.inputs.get("field")
        return Path(path) if path else None


def _print_banner(title: str) -> None:
    print(RULE)
    print(title)
    print(RULE)


def _format(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{value:.6g}"
    if isinstance(value, complex):
        return f"{value.real:.6g}{value.imag:+.6g}j"
    return str(value)


def _print_diagnostics(diagnostics: Dict[str, Any]) -> None:
    for key, value in diagnostics.items():
        if isinstance(value, list):
            continue
        print(f"   {key:<28} {_format(value)}")


def _save_grid(ctx: RunContext, psg: PhaseSpaceGrid, name: str, role: str = "grid") -> Path:
    path = save_grid(psg, ctx.output(name))
    ctx.outputs[role] = str(path.resolve())
    ctx.stem = ctx.stem or name
    print(f"   ✓ {psg.kind.value} grid {psg.values.shape[0]}x{psg.values.shape[1]} -> {path}")
    return path


def _shapes_field(args: argparse.Namespace) -> bool:
    return any(getattr(args, dest, None) is not None for dest in FIELD_FLAGS)


def _signal(ctx: RunContext) -> Signal:
    """
    Signal from --field, else the field of the last run in the output
    directory, else the scenario (saved as kr_field.*)

    Flags that describe the field (--scenario, --n-points, --config, ...)
    skip the last run and rebuild from the scenario.
    """
    field_arg = getattr(ctx.args, "field", None)
    if not field_arg and not _shapes_field(ctx.args):
        field_arg = ctx.latest_field()
        if field_arg:
            logger.info("using the field of the last run: %s", field_arg)
    if field_arg:
        path = Path(field_arg)
        field_data = load_field(path)
        meta = read_field_meta(path)
        waist = float(meta["waist"]) if "waist" in meta else fit_gaussian_width(
            np.abs(field_data.amplitudes) ** 2, field_data.grid
        ).width
        ctx.inputs["field"] = str(path.resolve())
        return Signal(
            field_data,
            waist,
            obstruction_half_width=float(meta.get("obstruction_half_width", 0.0)),
            source=meta.get("scenario", str(path)),
        )

    signal = build_signal(ctx.config)
    path = _save_field(ctx, signal, "kr_field")
    ctx.inputs["field"] = str(path.resolve())
    return signal


def _save_field(ctx: RunContext, signal: Signal, name: str) -> Path:
    path = save_field(
        signal.field,
        ctx.output(name),
        meta={
            "scenario": signal.source,
            "waist": repr(signal.waist),
            "obstruction_half_width": repr(signal.obstruction_half_width),
        },
    )
    ctx.outputs[name] = str(path.resolve())
    print(f"   ✓ field ({signal.field.grid.n_points} points, extent {signal.field.grid.extent:g}) -> {path}")
    return path


# ============================================================
# COMMANDS
# ============================================================

def cmd_field(ctx: RunContext) -> None:
    """Build the scenario field and save it"""
    signal = build_signal(ctx.config)
    _save_field(ctx, signal, "field")
    ctx.stem = "field"
    ctx.diagnostics.update(
        waist=signal.waist,
        norm=signal.field.norm(),
        n_points=signal.field.grid.n_points,
        extent=signal.field.grid.extent,
    )


def cmd_kr(ctx: RunContext) -> None:
    """
    K* of a field, plus its position and momentum marginals

    The grid metadata records the field file, so compare and transform can
    find the field again.
    """
    signal = _signal(ctx)
    krc = kr_stage(signal.field, ctx.config.transform.workers)
    krc = krc.derive(krc.values, krc.kind, field=ctx.inputs["field"], waist=repr(signal.waist), scenario=signal.source)
    _save_grid(ctx, krc, "kr")
    _save_marginals(ctx, krc, "marginal")
    ctx.diagnostics["field_source"] = signal.source
    ctx.diagnostics.update(kr_diagnostics(krc, signal.field))


def _save_marginals(ctx: RunContext, psg: PhaseSpaceGrid, prefix: str) -> None:
    margs = marginals_stage(psg)
    meta = {"kind": psg.kind.value, "source": ctx.outputs.get("grid", ctx.inputs.get("grid", ""))}
    x_path = save_marginal(psg.x, margs.position, ctx.output(f"{prefix}_x", ".csv"), "x", psg.unit_mode, meta)
    p_path = save_marginal(psg.p, margs.momentum, ctx.output(f"{prefix}_p", ".csv"), "p", psg.unit_mode, meta)
    ctx.outputs[f"{prefix}_x"] = str(x_path.resolve())
    ctx.outputs[f"{prefix}_p"] = str(p_path.resolve())
    ctx.diagnostics["marginal_residual_imag"] = margs.residual_imag
    print(f"   ✓ marginals -> {x_path}, {p_path}")


def cmd_transform(ctx: RunContext) -> None:
    """KRconj -> Wigner / P / Q / characteristic functions (and back)"""
    path = ctx.input_grid()
    ctx.inputs["grid"] = str(path.resolve())
    source = load_grid(path)
    result, diagnostics = transform(source, ctx.args.to, ctx.config, ctx.args.sigma_ref, ctx.args.via)
    _save_grid(ctx, result, TRANSFORM_OUTPUT_NAMES[ctx.args.to])
    ctx.diagnostics.update(diagnostics)
    if diagnostics.get("ill_conditioned"):
        print("   ⚠ regularized P is ill-conditioned (mask removed more than half the energy)")


def cmd_marginals(ctx: RunContext) -> None:
    """Position and momentum marginals of a grid"""
    path = ctx.input_grid()
    ctx.inputs["grid"] = str(path.resolve())
    ctx.stem = f"{path.stem}_marginals"
    _save_marginals(ctx, load_grid(path), f"{path.stem}_marginal")


def cmd_heterodyne(ctx: RunContext) -> None:
    """
    Dual-LO heterodyne estimate of K*

    Modes:
    - ideal: analytic beat product on the scan grid
    - timedomain: beat -> band-pass -> squarer -> lock-in at every point
    - sweep: ideal scans with tightening LO1 and widening LO2
    """
    mode = ctx.args.mode
    estimate, signal, diagnostics = heterodyne(ctx.config, mode)
    field_path = _save_field(ctx, signal, "heterodyne_field")
    estimate = estimate.derive(estimate.values, estimate.kind, field=str(field_path.resolve()))
    _save_grid(ctx, estimate, f"heterodyne_{mode}")
    ctx.diagnostics.update(diagnostics)
    for entry in diagnostics.get("sweep", []):
        print(
            f"   m={entry['factor']:<4g} a={entry['a']:<10.4g} A={entry['A']:<10.4g} "
            f"relative L2={entry['relative_l2']:.3e}"
        )


def cmd_fit(ctx: RunContext) -> None:
    """Gaussian 1/e width of a marginal CSV or a grid slice"""
    path = ctx.input_grid()
    ctx.inputs["profile"] = str(path.resolve())
    ctx.stem = f"{path.stem}_fit"
    report = fit_input(path, ctx.args.slice)
    ctx.diagnostics.update(report)
    print(f"   ✓ width = {report['width']:.6g} ({report['axis']} profile)")
    if "waist" in report:
        print(f"   ✓ implied beam waist = {report['waist']:.6g}")


def cmd_compare(ctx: RunContext) -> None:
    """
    Compare a grid with an oracle or another grid file

    Exits with the tolerance code when any given threshold is violated.
    """
    path = ctx.input_grid()
    ctx.inputs["grid"] = str(path.resolve())
    ctx.stem = f"{path.stem}_compare"
    candidate = load_grid(path)
    reference = reference_values(candidate, ctx.args.against, ctx.config, ctx.args.field)
    metrics = compare_values(candidate.values, reference)
    ctx.diagnostics.update(against=ctx.args.against, **metrics)

    failures = []
    if ctx.args.max_linf is not None and not metrics["linf"] <= ctx.args.max_linf:
        failures.append(f"L-inf {metrics['linf']:.3e} > {ctx.args.max_linf:g}")
    if ctx.args.max_l2 is not None and not metrics["l2"] <= ctx.args.max_l2:
        failures.append(f"relative L2 {metrics['l2']:.3e} > {ctx.args.max_l2:g}")
    if ctx.args.min_corr is not None and not metrics["correlation"] >= ctx.args.min_corr:
        failures.append(f"correlation {metrics['correlation']:.6f} < {ctx.args.min_corr:g}")
    if failures:
        raise ToleranceError(f"{path.name} vs {ctx.args.against}: " + "; ".join(failures))


def cmd_plot(ctx: RunContext) -> None:
    """gnuplot data and script (2-D map left, 3-D surface right)"""
    path = ctx.input_grid()
    ctx.inputs["grid"] = str(path.resolve())
    stem = ctx.out_dir / f"{path.stem}_{ctx.args.part}"
    dat_path, script_path = write_plot(load_grid(path), stem, ctx.args.part, ctx.args.stride)
    ctx.outputs["plot_data"] = str(dat_path.resolve())
    ctx.outputs["plot_script"] = str(script_path.resolve())
    ctx.stem = stem.name
    print(f"   ✓ {dat_path}, {script_path}")


COMMANDS: Dict[str, Callable[[RunContext], None]] = {
    "field": cmd_field,
    "kr": cmd_kr,
    "transform": cmd_transform,
    "marginals": cmd_marginals,
    "heterodyne": cmd_heterodyne,
    "fit": cmd_fit,
    "compare": cmd_compare,
    "plot": cmd_plot,
}


# ============================================================
# ARGUMENTS
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--manifest", help="replay the command recorded in a manifest")
    common.add_argument("--out", help="output directory (overrides KRPHASE_OUTPUT_DIR and output.dir)")
    common.add_argument("--format", choices=["bin", "csv"], help="grid/field file format")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    common.add_argument("--scenario", choices=["gaussian", "wire", "custom"])
    common.add_argument("--unit-mode", choices=["millimeters", "dimensionless"])
    common.add_argument("--n-points", type=int, help="transverse grid samples")
    common.add_argument("--extent", type=float, help="transverse grid extent")
    common.add_argument("--waist", type=float, help="signal waist")
    common.add_argument("--field-path", help="field file for --scenario custom")
    common.add_argument("--workers", type=int, help="FFT worker threads")

    parser = argparse.ArgumentParser(
        prog="krphase",
        description="Kirkwood-Rihaczek phase-space distributions and dual-LO heterodyne simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("field", parents=[common], help="build and save the scenario field")

    kr = sub.add_parser("kr", parents=[common], help="K* grid and marginals")
    kr.add_argument("--field", help="field file (default: the latest field, else built from the scenario)")

    tr = sub.add_parser("transform", parents=[common], help="Wigner / P / Q / characteristic functions")
    tr.add_argument("--input", help="source grid (default: last grid)")
    tr.add_argument("--to", required=True, choices=TRANSFORM_TARGETS)
    tr.add_argument("--via", choices=["chirp", "characteristic"], help="Wigner path")
    tr.add_argument("--sigma-ref", type=float, help="P/Q kernel scale (default: signal waist)")
    tr.add_argument("--eps-floor", type=float, help="P mask floor")

    mg = sub.add_parser("marginals", parents=[common], help="marginals of a grid")
    mg.add_argument("--input", help="grid (default: last grid)")

    het = sub.add_parser("heterodyne", parents=[common], help="dual-LO heterodyne estimate of K*")
    het.add_argument("--mode", choices=["ideal", "timedomain", "sweep"], default="ideal")
    het.add_argument("--lo-preset", choices=["oracle", "bench"])
    het.add_argument("--scan-points", type=int, help="scan points per axis")
    het.add_argument("--with-spurs", action="store_true", default=None, help="inject DC and LO-LO beats")
    het.add_argument("--quadrature-phase", type=float, help="lock-in quadrature phase in degrees")
    het.add_argument("--dsp-workers", type=int, help="scan points demodulated in parallel")

    fit = sub.add_parser("fit", parents=[common], help="Gaussian width of a marginal or grid slice")
    fit.add_argument("--input", help="marginal CSV or grid (default: last grid)")
    fit.add_argument("--slice", help="grid slice, p=<value> or x=<value>")

    cmp_ = sub.add_parser("compare", parents=[common], help="compare a grid with an oracle")
    cmp_.add_argument("--input", help="grid (default: last grid)")
    cmp_.add_argument("--against", required=True, help=f"{', '.join(COMPARE_ORACLES)} or a grid file")
    cmp_.add_argument("--field", help="field file for the kr/direct-wigner oracles")
    cmp_.add_argument("--max-linf", type=float)
    cmp_.add_argument("--max-l2", type=float)
    cmp_.add_argument("--min-corr", type=float)

    plot = sub.add_parser("plot", parents=[common], help="gnuplot data and script")
    plot.add_argument("--input", help="grid (default: last grid)")
    plot.add_argument("--part", choices=PARTS, default="re")
    plot.add_argument("--stride", type=int, default=1)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file, then flag overrides"""
    config = parse_config(args.config)
    overrides = {key: getattr(args, dest, None) for dest, key in OVERRIDE_KEYS.items()}
    scan_points = getattr(args, "scan_points", None)
    if scan_points is not None:
        overrides["scan.n_dx"] = scan_points
        overrides["scan.n_p"] = scan_points
    return config.with_overrides(overrides)


def _resolved(config: RunConfig) -> Dict[str, str]:
    try:
        return config.resolved()
    except CONFIG_ERRORS as exc:
        logger.debug("auto keys left unresolved: %s", exc)
        return {}


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


# ============================================================
# ENTRY POINT
# ============================================================

def run(argv: List[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    if args.manifest:
        recorded = read_manifest(args.manifest)
        out_flag = args.out
        argv = list(recorded.argv)
        args = parser.parse_args(argv)
        args.out = out_flag or args.out
        config = RunConfig.from_flat(recorded.config)
        logger.info("replaying %s recorded as run %s", recorded.command, recorded.run_id)
    else:
        config = resolve_config(args)

    out_dir = resolve_output_dir(args.out, config)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(args=args, config=config, out_dir=out_dir, argv=list(argv))

    tracker = get_run_tracker(out_dir / "runs")
    run_id = tracker.start_run(args.command, scenario=config.scenario)
    _print_banner(f"krphase {args.command}  (scenario {config.scenario}, {config.unit_mode.value})")

    success = False
    try:
        COMMANDS[args.command](ctx)
        success = True
    finally:
        report = tracker.finalize_run(diagnostics=ctx.diagnostics, success=success)
        manifest = RunManifest(
            command=args.command,
            argv=ctx.argv,
            run_id=run_id,
            config=config.flat(),
            resolved=_resolved(config),
            inputs=ctx.inputs,
            outputs=ctx.outputs,
            diagnostics=ctx.diagnostics,
            stages=report.get("stage_metrics", []),
        )
        manifest_path = write_manifest(manifest, out_dir / f"{ctx.stem or args.command}.manifest.json")
        if success and ("grid" in ctx.outputs or "field" in ctx.outputs):
            write_manifest(manifest, out_dir / LATEST_MANIFEST)
        _print_diagnostics(ctx.diagnostics)
        print(f"   manifest -> {manifest_path}")
        print(RULE)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return run(argv)
    except CONFIG_ERRORS as exc:
        print(f"✗ configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"✗ numeric check failed: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except IO_ERRORS as exc:
        print(f"✗ I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
