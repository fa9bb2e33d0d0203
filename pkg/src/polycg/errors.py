"""Exception types shared across the toolchain."""

from __future__ import annotations


class PolycgError(Exception):
    """Base class for all toolchain errors."""


class ParseError(PolycgError):
    """Unrecoverable syntax failure in a source file."""

    def __init__(self, message: str, line: int, column: int, token: str = ""):
        self.line = line
        self.column = column
        self.token = token
        super().__init__(f"line {line}, col {column}: {message}")


class UnsupportedConstruct(PolycgError):
    """Out-of-subset syntax.

    Recoverable: the frontend downgrades the statement to an Other block and
    reports the construct through its issue callback instead of raising.
    """

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SchemaMismatch(PolycgError):
    """CSV header or row shape does not match the expected table schema."""


class MalformedCsv(PolycgError):
    """CSV text that cannot be tokenised (unbalanced quotes, stray bytes)."""


class RegistryError(PolycgError):
    """Invalid interoperability-API registry entry."""


class UnknownScope(PolycgError):
    """Dataflow query names a scope absent from the fact tables."""


class UnknownLabel(PolycgError):
    """Dataflow query names a statement index outside the scope."""


class AmbiguousDefinition(PolycgError):
    """More than one unit defines the requested procedure or file name.

    Raised only when callers ask for strict resolution; the merge layer
    reports it as a diagnostic and picks the lexicographically smallest
    unit id.
    """


class ConfigError(PolycgError):
    """Invalid pipeline configuration (exit code 2 at the CLI)."""
