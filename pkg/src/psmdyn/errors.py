"""Exception hierarchy.

Geometry problems (``SingularConfiguration``, ``UnreachableConfiguration``)
are kept apart from physics problems (``DegenerateInertia``) so callers can
report an actionable cause.
"""

from __future__ import annotations


class PSMError(Exception):
    """Base class for all package errors."""


class ModelDefinitionError(PSMError, ValueError):
    """A model parameter violates its invariants (e.g. a non-unit screw)."""


class ConfigurationError(PSMError):
    """Base class for configuration-dependent failures.

    ``module`` is the zero-based index of the offending module inside a
    manipulator chain, when known. ``sample`` is filled in by trajectory
    drivers.
    """

    def __init__(self, message: str, *, module: int | None = None, sample: int | None = None):
        super().__init__(message)
        self.module = module
        self.sample = sample

    def __str__(self) -> str:
        msg = super().__str__()
        where = []
        if self.module is not None:
            where.append(f"module {self.module}")
        if self.sample is not None:
            where.append(f"sample {self.sample}")
        return f"{msg} ({', '.join(where)})" if where else msg


class UnreachableConfiguration(ConfigurationError):
    """The loop cannot be closed: an arccos argument left [-1, 1]."""


class SingularConfiguration(ConfigurationError):
    """A passive-joint sine or the loop determinant is (numerically) zero."""


class DegenerateInertia(ConfigurationError):
    """The articulated scalar inertia felt by an actuator is not positive."""


class ParseError(PSMError):
    """Syntax error in a model or trajectory document."""

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{loc}: {message}" if loc else message)
        self.line = line
        self.column = column


class ValidationError(PSMError):
    """A document parsed but describes an invalid model.

    ``issues`` is a list of ``(line, path, message)`` tuples; ``line`` may be
    ``None`` when the offending value has no source location.
    """

    def __init__(self, issues: list[tuple[int | None, str, str]]):
        self.issues = list(issues)
        lines = []
        for line, path, message in self.issues:
            loc = f"line {line}" if line is not None else "?"
            lines.append(f"{loc}: {path}: {message}")
        super().__init__("invalid model:\n  " + "\n  ".join(lines))


class RangeError(PSMError, ValueError):
    """A requested trajectory leaves the reachable, non-singular range."""
