"""Exception hierarchy shared across the package."""


class PaxnnError(Exception):
    """Base class for all errors raised by paxnn."""


class DomainError(PaxnnError):
    """An argument is outside the domain an operation is defined on."""


class ValidationError(PaxnnError):
    """Structured data violates an invariant (bad feature range, bad sequence, ...)."""


class ParseError(PaxnnError):
    """An input file could not be parsed.

    ``lines`` collects the offending (line_number, message) pairs so a caller
    can report every bad row at once instead of the first.
    """

    def __init__(self, message, lines=()):
        super().__init__(message)
        self.lines = list(lines)

    def __str__(self):
        base = super().__str__()
        if not self.lines:
            return base
        detail = "; ".join(f"line {n}: {m}" for n, m in self.lines)
        return f"{base} ({detail})"


class TrainingError(PaxnnError):
    """Training diverged or produced non-finite values."""


class ConfigError(PaxnnError):
    """A run configuration is missing, malformed, or contains unknown keys."""
