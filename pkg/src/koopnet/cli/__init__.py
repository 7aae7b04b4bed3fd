from koopnet.cli.app import build_parser, main
from koopnet.cli.config import RunConfig, load_config

__all__ = ["RunConfig", "build_parser", "load_config", "main"]
