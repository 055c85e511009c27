# CLI package

from cli.main import CommandConfig, dispatch, main, parse_args

__all__ = ["CommandConfig", "dispatch", "main", "parse_args"]
