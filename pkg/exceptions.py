"""mindblend domain exception hierarchy."""
from typing import Any


class MindBlendError(Exception):
    """Base exception for all mindblend errors."""

    def __init__(self, message: str, context: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.context: dict[str, Any] = context or {}

    def __str__(self) -> str:
        if self.context:
            ctx = ", ".join(f"{k}={v}" for k, v in self.context.items())
            return f"{super().__str__()} [{ctx}]"
        return super().__str__()


# ─── DATA ERRORS (exit 1) ─────────────────────────────────────────────────────


class DataError(MindBlendError):
    """Input data is malformed, incomplete or inconsistent."""


class ParseError(DataError):
    """A line of an input file cannot be parsed."""

    def __init__(self, path: str, line: int, reason: str) -> None:
        super().__init__(
            f"Cannot parse {path}:{line}: {reason}",
            context={"path": path, "line": line},
        )
        self.path = path
        self.line = line
        self.reason = reason


class DatasetValidationError(DataError):
    """Parsed values violate a dataset invariant (duplicate id, empty list, ...)."""


class CoverageError(DataError):
    """A score table does not cover every (impression, candidate) pair exactly once."""

    def __init__(self, message: str, gaps: list[tuple[str, str]] | None = None) -> None:
        gaps = gaps or []
        ctx: dict[str, Any] = {}
        if gaps:
            ctx["first_gaps"] = ", ".join(f"{i}/{a}" for i, a in gaps[:10])
            ctx["total"] = len(gaps)
        super().__init__(message, context=ctx)
        self.gaps = gaps


class AlignmentError(DataError):
    """Predictions are not aligned with the behaviors file."""

    def __init__(self, position: int, expected: str | None, received: str | None) -> None:
        super().__init__(
            f"Prediction misaligned at line {position}",
            context={"expected": expected or "<end of file>", "received": received or "<end of file>"},
        )
        self.position = position


class UnknownTermError(DataError):
    """Term has zero document frequency and is outside the vocabulary."""

    def __init__(self, term: str) -> None:
        super().__init__(f"Term '{term}' is not in the vocabulary", context={"term": term})


class DimensionMismatchError(DataError):
    """Two vectors of different dimensionality were compared."""

    def __init__(self, left: int, right: int) -> None:
        super().__init__("Vector dimensions differ", context={"left": left, "right": right})


class UndefinedMetricError(DataError):
    """Metric is undefined for this ranking (no positive or no negative label)."""


# ─── USAGE / CONFIG ERRORS (exit 2) ───────────────────────────────────────────


class UsageError(MindBlendError):
    """Command-line usage error."""


class UnknownLearnerError(UsageError):
    """Learner name is not configured."""

    def __init__(self, name: str, configured: list[str]) -> None:
        super().__init__(
            f"Unknown learner '{name}'",
            context={"configured": ", ".join(configured) or "<none>"},
        )
        self.name = name
        self.configured = configured


class ConfigError(MindBlendError):
    """Configuration error."""


class MissingConfigError(ConfigError):
    """Required config key is absent."""

    def __init__(self, key: str) -> None:
        super().__init__(f"Missing config key: '{key}'", context={"key": key})


class InvalidConfigError(ConfigError):
    """Config value is invalid."""


# ─── FILE ERRORS (exit 1) ─────────────────────────────────────────────────────


class FileError(MindBlendError):
    """File operation error."""


class MindBlendFileNotFoundError(FileError):
    """Referenced file does not exist."""

    def __init__(self, filepath: str) -> None:
        super().__init__(f"File not found: '{filepath}'", context={"filepath": filepath})
