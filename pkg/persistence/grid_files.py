"""
Grid Files - Binary and CSV persistence for fields, phase-space grids and marginals

Binary: little-endian payload (<c16 complex, <f8 real) plus a JSON sidecar
`<file>.json` holding the header. CSV: `# key = value` header lines, then
comma-separated rows written with 17 significant digits.

The suffix picks the format: `.csv` for CSV, anything else binary.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from models import Axis, Domain, Grid1D, GridKind, PhaseSpaceGrid, SampledField, UnitMode
from models.errors import FormatVersionError, GridFormatError, MalformedHeaderError, TruncatedPayloadError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
GRID_MAGIC = "KRPHASE-GRID"
FIELD_MAGIC = "KRPHASE-FIELD"
MARGINAL_MAGIC = "KRPHASE-MARGINAL"
CSV_FORMAT = "%.17g"

PathLike = Union[str, Path]


# ============================================================
# HEADERS
# ============================================================

class AxisHeader(BaseModel):
    """Axis stored as (step, n, origin) so coordinates regenerate bitwise"""
    step: float = Field(..., gt=0, description="Sample spacing")
    n: int = Field(..., ge=1, description="Number of samples")
    origin: float = Field(..., description="Index of coordinate zero")

    @classmethod
    def from_axis(cls, axis: Axis) -> "AxisHeader":
        return cls(step=axis.step, n=axis.n, origin=axis.origin)

    def to_axis(self) -> Axis:
        return Axis(step=self.step, n=self.n, origin=self.origin)


class GridFileHeader(BaseModel):
    """Header of a phase-space grid file"""
    magic: Literal["KRPHASE-GRID"] = Field(GRID_MAGIC, description="File type marker")
    version: int = Field(FORMAT_VERSION, description="Format version")
    kind: GridKind = Field(..., description="Distribution tag")
    n_x: int = Field(..., ge=1, description="Rows (x or x')")
    n_p: int = Field(..., ge=1, description="Columns (p or p')")
    x_axis: AxisHeader
    p_axis: AxisHeader
    unit_mode: UnitMode = Field(UnitMode.MILLIMETERS, description="Length units")
    value_type: Literal["complex128", "real64"] = Field(..., description="Payload element type")
    endianness: Literal["little"] = Field("little", description="Payload byte order")
    meta: Dict[str, str] = Field(default_factory=dict, description="Free-form provenance")

    class Config:
        json_schema_extra = {
            "example": {
                "magic": GRID_MAGIC,
                "version": FORMAT_VERSION,
                "kind": "KRconj",
                "n_x": 512,
                "n_p": 512,
                "x_axis": {"step": 0.02656, "n": 512, "origin": 256},
                "p_axis": {"step": 0.4620, "n": 512, "origin": 256},
                "unit_mode": "millimeters",
                "value_type": "complex128",
                "endianness": "little",
                "meta": {"field": "field.bin"},
            }
        }

    @model_validator(mode="after")
    def _consistent(self) -> "GridFileHeader":
        if self.x_axis.n != self.n_x or self.p_axis.n != self.n_p:
            raise ValueError("axis lengths disagree with n_x/n_p")
        expected = "real64" if self.kind.is_real else "complex128"
        if self.value_type != expected:
            raise ValueError(f"{self.kind.value} grids store {expected}, header says {self.value_type}")
        return self

    @property
    def dtype(self) -> str:
        return "<f8" if self.value_type == "real64" else "<c16"

    @property
    def payload_bytes(self) -> int:
        return self.n_x * self.n_p * np.dtype(self.dtype).itemsize


class FieldFileHeader(BaseModel):
    """Header of a sampled-field file"""
    magic: Literal["KRPHASE-FIELD"] = Field(FIELD_MAGIC, description="File type marker")
    version: int = Field(FORMAT_VERSION, description="Format version")
    n_points: int = Field(..., ge=2, description="Samples (even)")
    extent: float = Field(..., gt=0, description="Grid extent")
    unit_mode: UnitMode = Field(UnitMode.MILLIMETERS, description="Length units")
    wavenumber: float = Field(..., gt=0, description="Optical wavenumber k")
    domain: Domain = Field(Domain.POSITION, description="position or momentum samples")
    value_type: Literal["complex128"] = Field("complex128", description="Payload element type")
    endianness: Literal["little"] = Field("little", description="Payload byte order")
    meta: Dict[str, str] = Field(default_factory=dict, description="Free-form provenance")

    @property
    def payload_bytes(self) -> int:
        return self.n_points * 16


class MarginalFileHeader(BaseModel):
    """Header of a marginal-density CSV"""
    magic: Literal["KRPHASE-MARGINAL"] = Field(MARGINAL_MAGIC, description="File type marker")
    version: int = Field(FORMAT_VERSION, description="Format version")
    axis: Literal["x", "p"] = Field(..., description="Coordinate the density is a function of")
    n: int = Field(..., ge=1, description="Samples")
    unit_mode: UnitMode = Field(UnitMode.MILLIMETERS, description="Length units")
    meta: Dict[str, str] = Field(default_factory=dict, description="Free-form provenance")


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _is_csv(path: PathLike) -> bool:
    return Path(path).suffix.lower() == ".csv"


def _validate_header(raw: Any, model, magic: str, path: PathLike):
    """Check magic, then version, then the full schema"""
    if not isinstance(raw, dict):
        raise MalformedHeaderError(f"{path}: header is not a key/value mapping")
    if raw.get("magic") != magic:
        raise MalformedHeaderError(f"{path}: expected magic {magic!r}, found {raw.get('magic')!r}")
    try:
        version = int(raw.get("version"))
    except (TypeError, ValueError):
        raise MalformedHeaderError(f"{path}: missing or non-integer format version") from None
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"{path}: format version {version} is not supported (expected {FORMAT_VERSION})")
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        raise MalformedHeaderError(f"{path}: invalid header: {exc.errors()[0]['msg']}") from None


# ============================================================
# CSV HEADER LINES
# ============================================================

def _format_value(value: Any) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _flatten(data: Dict[str, Any], prefix: str = "") -> Dict[str, str]:
    flat: Dict[str, str] = {}
    for key, value in data.items():
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{prefix}{key}."))
        else:
            flat[f"{prefix}{key}"] = _format_value(value)
    return flat


def _nest(flat: Dict[str, str]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        head, dot, tail = key.partition(".")
        if dot:
            nested.setdefault(head, {})[tail] = value
        else:
            nested[key] = value
    return nested


def _write_csv(path: Path, header: BaseModel, columns: str, rows: np.ndarray) -> None:
    flat = _flatten(header.model_dump(mode="json"))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for key, value in flat.items():
            handle.write(f"# {key} = {value}\n")
        handle.write(f"# columns = {columns}\n")
        np.savetxt(handle, rows, fmt=CSV_FORMAT, delimiter=",")


def _read_csv(path: Path) -> Tuple[Dict[str, Any], np.ndarray]:
    flat: Dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                if not line.startswith("#"):
                    break
                key, sep, value = line[1:].partition("=")
                if not sep:
                    raise MalformedHeaderError(f"{path}: header line without '=': {line.strip()!r}")
                flat[key.strip()] = value.strip()
    except UnicodeDecodeError:
        raise MalformedHeaderError(f"{path}: not a text file") from None
    flat.pop("columns", None)
    try:
        rows = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as exc:
        raise GridFormatError(f"{path}: unreadable data row: {exc}") from None
    return _nest(flat), rows


# ============================================================
# PHASE-SPACE GRIDS
# ============================================================

def grid_header(psg: PhaseSpaceGrid) -> GridFileHeader:
    return GridFileHeader(
        kind=psg.kind,
        n_x=psg.x_axis.n,
        n_p=psg.p_axis.n,
        x_axis=AxisHeader.from_axis(psg.x_axis),
        p_axis=AxisHeader.from_axis(psg.p_axis),
        unit_mode=psg.unit_mode,
        value_type="real64" if psg.kind.is_real else "complex128",
        meta=dict(psg.meta),
    )


def save_grid(psg: PhaseSpaceGrid, path: PathLike) -> Path:
    """Write a grid; returns the data file path"""
    path = Path(path)
    header = grid_header(psg)
    if _is_csv(path):
        xs, ps = np.meshgrid(psg.x, psg.p, indexing="ij")
        if psg.kind.is_real:
            rows = np.column_stack([xs.ravel(), ps.ravel(), psg.values.ravel()])
            columns = "x,p,value"
        else:
            rows = np.column_stack([xs.ravel(), ps.ravel(), psg.values.real.ravel(), psg.values.imag.ravel()])
            columns = "x,p,re,im"
        _write_csv(path, header, columns, rows)
    else:
        payload = np.ascontiguousarray(psg.values, dtype=header.dtype).tobytes()
        path.write_bytes(payload)
        sidecar_path(path).write_text(header.model_dump_json(indent=2), encoding="utf-8")
    logger.debug("saved %s grid %dx%d to %s", psg.kind.value, header.n_x, header.n_p, path)
    return path


def load_grid(path: PathLike) -> PhaseSpaceGrid:
    """
    Read a grid written by save_grid

    Raises:
        MalformedHeaderError, TruncatedPayloadError, FormatVersionError
    """
    path = Path(path)
    if _is_csv(path):
        raw, rows = _read_csv(path)
        header = _validate_header(raw, GridFileHeader, GRID_MAGIC, path)
        expected = header.n_x * header.n_p
        if rows.shape[0] != expected:
            raise TruncatedPayloadError(str(path), expected, rows.shape[0], unit="rows")
        width = 3 if header.kind.is_real else 4
        if rows.shape[1] != width:
            raise GridFormatError(f"{path}: expected {width} columns, found {rows.shape[1]}")
        values = rows[:, 2] if header.kind.is_real else rows[:, 2] + 1j * rows[:, 3]
    else:
        header = _load_sidecar(path, GridFileHeader, GRID_MAGIC)
        values = _read_payload(path, header.payload_bytes, header.dtype)
    return PhaseSpaceGrid(
        header.x_axis.to_axis(),
        header.p_axis.to_axis(),
        values.reshape(header.n_x, header.n_p),
        header.kind,
        header.unit_mode,
        header.meta,
    )


def _load_sidecar(path: Path, model, magic: str):
    sidecar = sidecar_path(path)
    if not sidecar.exists():
        raise MalformedHeaderError(f"{path}: header sidecar {sidecar.name} is missing")
    try:
        raw = json.loads(sidecar.read_text(encoding="utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedHeaderError(f"{sidecar}: not valid JSON ({exc})") from None
    return _validate_header(raw, model, magic, sidecar)


def _read_payload(path: Path, expected: int, dtype: str) -> np.ndarray:
    payload = path.read_bytes()
    if len(payload) != expected:
        raise TruncatedPayloadError(str(path), expected, len(payload))
    return np.frombuffer(payload, dtype=dtype).copy()


# ============================================================
# FIELDS
# ============================================================

def save_field(field: SampledField, path: PathLike, meta: Optional[Dict[str, str]] = None) -> Path:
    path = Path(path)
    header = FieldFileHeader(
        n_points=field.grid.n_points,
        extent=field.grid.extent,
        unit_mode=field.grid.unit_mode,
        wavenumber=field.wavenumber,
        domain=field.domain,
        meta={str(k): str(v) for k, v in (meta or {}).items()},
    )
    if _is_csv(path):
        rows = np.column_stack([field.coordinates, field.amplitudes.real, field.amplitudes.imag])
        columns = "x,re,im" if field.domain is Domain.POSITION else "p,re,im"
        _write_csv(path, header, columns, rows)
    else:
        path.write_bytes(np.ascontiguousarray(field.amplitudes, dtype="<c16").tobytes())
        sidecar_path(path).write_text(header.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_field(path: PathLike) -> SampledField:
    path = Path(path)
    if _is_csv(path):
        raw, rows = _read_csv(path)
        header = _validate_header(raw, FieldFileHeader, FIELD_MAGIC, path)
        if rows.shape[0] != header.n_points:
            raise TruncatedPayloadError(str(path), header.n_points, rows.shape[0], unit="rows")
        if rows.shape[1] != 3:
            raise GridFormatError(f"{path}: expected 3 columns, found {rows.shape[1]}")
        amplitudes = rows[:, 1] + 1j * rows[:, 2]
    else:
        header = _load_sidecar(path, FieldFileHeader, FIELD_MAGIC)
        amplitudes = _read_payload(path, header.payload_bytes, "<c16")
    grid = Grid1D(n_points=header.n_points, extent=header.extent, unit_mode=header.unit_mode)
    return SampledField(grid, amplitudes, wavenumber=header.wavenumber, domain=header.domain)


def read_field_meta(path: PathLike) -> Dict[str, str]:
    """Provenance stored with a field file"""
    path = Path(path)
    if _is_csv(path):
        raw, _ = _read_csv(path)
        return _validate_header(raw, FieldFileHeader, FIELD_MAGIC, path).meta
    return _load_sidecar(path, FieldFileHeader, FIELD_MAGIC).meta


# ============================================================
# MARGINALS
# ============================================================

def save_marginal(
    coordinates: np.ndarray,
    values: np.ndarray,
    path: PathLike,
    axis: str,
    unit_mode: UnitMode = UnitMode.MILLIMETERS,
    meta: Optional[Dict[str, str]] = None,
) -> Path:
    """Two-column CSV (coordinate, density)"""
    path = Path(path)
    coordinates = np.asarray(coordinates, dtype=float)
    values = np.asarray(values, dtype=float)
    header = MarginalFileHeader(
        axis=axis,
        n=coordinates.size,
        unit_mode=unit_mode,
        meta={str(k): str(v) for k, v in (meta or {}).items()},
    )
    _write_csv(path, header, f"{axis},density", np.column_stack([coordinates, values]))
    return path


def load_marginal(path: PathLike) -> Tuple[np.ndarray, np.ndarray, MarginalFileHeader]:
    path = Path(path)
    raw, rows = _read_csv(path)
    header = _validate_header(raw, MarginalFileHeader, MARGINAL_MAGIC, path)
    if rows.shape[0] != header.n:
        raise TruncatedPayloadError(str(path), header.n, rows.shape[0], unit="rows")
    if rows.shape[1] != 2:
        raise GridFormatError(f"{path}: expected 2 columns, found {rows.shape[1]}")
    return rows[:, 0].copy(), rows[:, 1].copy(), header
