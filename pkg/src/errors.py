"""Exception types shared by the emulation, statistics and CLI layers."""


class ConfigError(ValueError):
    """An experiment or CLI configuration value is invalid.

    ``field`` names the offending configuration key so callers can report it.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ScheduleError(ValueError):
    """A reduction schedule is malformed."""


class ShapeMismatchError(ValueError):
    """Operand lengths or matrix dimensions disagree."""


class DegenerateModelError(ValueError):
    """The i.i.d. noise model is undefined (sigma == 0)."""


class ReportError(RuntimeError):
    """A report or one of its sidecar artifacts is missing or unreadable."""
