from .settings import OUTPUT_DIR_ENV, RunConfig, parse_config, resolve_output_dir

__all__ = ["OUTPUT_DIR_ENV", "RunConfig", "parse_config", "resolve_output_dir"]
