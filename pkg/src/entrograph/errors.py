"""Exception types shared across the package.

The CLI maps these onto exit codes: parse/validation/degenerate-input
problems are "bad input" (exit 2), everything else raised at runtime is
an execution failure (exit 3).
"""

from __future__ import annotations


class EntrographError(Exception):
    """Base class for all package-specific errors."""


class ParseError(EntrographError):
    """A file could not be parsed. Carries the path and 1-based line number."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}: "
        if line is not None:
            loc = f"{loc}line {line}: "
        super().__init__(f"{loc}{message}")


class ValidationError(EntrographError):
    """An in-memory value violates a documented contract."""


class ConfigError(EntrographError):
    """A configuration value is missing or out of range."""


class DegenerateGraphError(EntrographError):
    """The input graph is outside the domain of the requested quantity
    (no edges, isolated vertex, ...)."""


class ProviderError(EntrographError):
    """An external embedding provider misbehaved (bad exit code, malformed
    or missing output)."""


class StageError(EntrographError):
    """A pipeline stage failed. Wraps the original error with the iteration
    index and stage name so callers can tell where a long run died."""

    def __init__(self, iteration: int, stage: str, cause: BaseException):
        self.iteration = iteration
        self.stage = stage
        super().__init__(f"iteration {iteration}, stage '{stage}': {cause}")
