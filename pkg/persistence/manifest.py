"""
Run manifests: one JSON document per CLI command with everything needed to
replay it (argv, config, the values its auto keys resolved to, inputs) and
what it produced.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Literal, Union

from pydantic import BaseModel, Field, ValidationError

from models.errors import FormatVersionError, MalformedHeaderError
from observability import sanitize_numpy_types

from .grid_files import FORMAT_VERSION

logger = logging.getLogger(__name__)

MANIFEST_MAGIC = "KRPHASE-MANIFEST"


class RunManifest(BaseModel):
    """Self-contained record of one command"""
    magic: Literal["KRPHASE-MANIFEST"] = Field(MANIFEST_MAGIC, description="File type marker")
    format_version: int = Field(FORMAT_VERSION, description="Format version")
    command: str = Field(..., description="Subcommand name")
    argv: List[str] = Field(default_factory=list, description="Command line as given")
    run_id: str = Field("", description="Identifier shared with the run log")
    created: str = Field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(),
        description="UTC timestamp",
    )
    config: Dict[str, Any] = Field(default_factory=dict, description="Every config key as given, defaults included")
    resolved: Dict[str, Any] = Field(default_factory=dict, description="Values the auto keys resolved to")
    inputs: Dict[str, str] = Field(default_factory=dict, description="Input role -> path")
    outputs: Dict[str, str] = Field(default_factory=dict, description="Output role -> path")
    diagnostics: Dict[str, Any] = Field(default_factory=dict, description="Numeric diagnostics")
    stages: List[Dict[str, Any]] = Field(default_factory=list, description="Stage timings")

    class Config:
        json_schema_extra = {
            "example": {
                "magic": MANIFEST_MAGIC,
                "format_version": FORMAT_VERSION,
                "command": "kr",
                "argv": ["kr", "--scenario", "gaussian"],
                "config": {"scenario": "gaussian", "grid.n_points": 512},
                "resolved": {"field.waist": "0.85", "grid.extent": "13.6"},
                "inputs": {},
                "outputs": {"grid": "out/kr.bin"},
                "diagnostics": {"marginal_x_linf": 3.1e-16},
            }
        }


def write_manifest(manifest: RunManifest, path: Union[str, Path]) -> Path:
    path = Path(path)
    payload = sanitize_numpy_types(manifest.model_dump(mode="python"))
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    logger.debug("manifest for %s written to %s", manifest.command, path)
    return path


def read_manifest(path: Union[str, Path]) -> RunManifest:
    """
    Raises:
        MalformedHeaderError: not a manifest
        FormatVersionError: written by another format version
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedHeaderError(f"{path}: manifest is not valid JSON ({exc})") from None
    if not isinstance(raw, dict) or raw.get("magic") != MANIFEST_MAGIC:
        raise MalformedHeaderError(f"{path}: not a krphase manifest")
    if raw.get("format_version") != FORMAT_VERSION:
        raise FormatVersionError(
            f"{path}: manifest format version {raw.get('format_version')} is not supported"
        )
    try:
        return RunManifest.model_validate(raw)
    except ValidationError as exc:
        raise MalformedHeaderError(f"{path}: invalid manifest: {exc.errors()[0]['msg']}") from None
