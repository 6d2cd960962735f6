from .grid_files import (
    FORMAT_VERSION,
    FieldFileHeader,
    GridFileHeader,
    MarginalFileHeader,
    load_field,
    load_grid,
    load_marginal,
    read_field_meta,
    save_field,
    save_grid,
    save_marginal,
    sidecar_path,
)
from .manifest import RunManifest, read_manifest, write_manifest

__all__ = [
    "FORMAT_VERSION",
    "FieldFileHeader",
    "GridFileHeader",
    "MarginalFileHeader",
    "load_field",
    "load_grid",
    "load_marginal",
    "read_field_meta",
    "save_field",
    "save_grid",
    "save_marginal",
    "sidecar_path",
    "RunManifest",
    "read_manifest",
    "write_manifest",
]
