from .commands import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_VALIDATION,
    CliCommand,
    NullCheckConfig,
    Verb,
    build_parser,
    cmd_dump_covariance,
    cmd_run,
    cmd_show,
    cmd_validate_null,
    main,
    resolve_config,
)

__all__ = [
    "EXIT_CONFIG",
    "EXIT_IO",
    "EXIT_OK",
    "EXIT_VALIDATION",
    "CliCommand",
    "NullCheckConfig",
    "Verb",
    "build_parser",
    "cmd_dump_covariance",
    "cmd_run",
    "cmd_show",
    "cmd_validate_null",
    "main",
    "resolve_config",
]
