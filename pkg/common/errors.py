"""Exception hierarchy shared by every package.

Exit codes used by the command line:
    1 - validation or assertion failure (ValidationError and subclasses)
    2 - malformed input or contract violation (InputError and subclasses)
"""
from typing import Optional


class SteenrodLabError(Exception):
    """Base class for all errors raised by the library."""

    exit_code = 1
    kind = "error"


class InputError(SteenrodLabError):
    """Malformed input or a violated precondition."""

    exit_code = 2
    kind = "input"


class SchemaError(InputError):
    """A serialized object does not match its schema."""

    kind = "schema"

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class WindowError(InputError):
    """A request reaches outside the computed or trusted window."""

    kind = "window"


class UnknownPresetError(InputError):
    """Preset name not present in the registry."""

    kind = "unknown-preset"


class AlgebraError(SteenrodLabError):
    """Algebra construction failed (product left the basis, decomposable generator, ...)."""

    kind = "algebra"


class LiftError(SteenrodLabError):
    """A chain map could not be lifted inside the computed window."""

    kind = "lift"


class ValidationError(SteenrodLabError):
    """A module, presentation or scenario failed validation."""

    kind = "validation"

    def __init__(self, message: str, report: Optional[object] = None):
        self.report = report
        super().__init__(message)


class ScenarioMismatch(ValidationError):
    """A scenario's computed values disagree with its expected-results block."""

    kind = "scenario-mismatch"
