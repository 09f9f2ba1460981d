"""Exception hierarchy.

Every error raised on purpose by seqeb derives from :class:`SeqEBError` and
carries the process exit code the CLI maps it to.
"""
from __future__ import annotations

from typing import Any, Optional, Sequence


class SeqEBError(Exception):
    """Base class for all seqeb errors."""

    exit_code: int = 1

    def details(self) -> dict[str, Any]:
        """Extra machine-readable fields for error payloads."""
        return {}


class ConfigError(SeqEBError, ValueError):
    """Invalid or inconsistent run configuration."""

    exit_code = 2

    def __init__(self, message: str, problems: Optional[Sequence[str]] = None) -> None:
        self.problems = list(problems or [])
        if self.problems:
            message = message + ":\n  - " + "\n  - ".join(self.problems)
        super().__init__(message)

    def details(self) -> dict[str, Any]:
        return {"problems": self.problems}


class DataError(SeqEBError, ValueError):
    """Malformed observation data."""

    exit_code = 3

    def __init__(self, message: str, rows: Optional[Sequence[int]] = None) -> None:
        self.rows = [int(r) for r in (rows or [])]
        if self.rows:
            shown = ", ".join(str(r) for r in self.rows[:10])
            more = "" if len(self.rows) <= 10 else f" (+{len(self.rows) - 10} more)"
            message = f"{message} (rows {shown}{more})"
        super().__init__(message)

    def details(self) -> dict[str, Any]:
        return {"rows": self.rows}


class CheckpointError(SeqEBError):
    """Checkpoint blob is corrupt, truncated or from another format version."""

    exit_code = 3


class NumericalError(SeqEBError):
    """A numerical procedure failed."""

    exit_code = 4


class DomainError(NumericalError, ValueError):
    """An argument lies outside the domain of the operation."""


class ContractViolation(NumericalError):
    """Inputs were built against incompatible objects (e.g. another φ)."""


class FactorizationError(NumericalError):
    """Cholesky factorization failed; ``pivot`` is the 1-based failing index."""

    def __init__(self, message: str, pivot: int) -> None:
        self.pivot = pivot
        super().__init__(f"{message} (failing pivot {pivot})")

    def details(self) -> dict[str, Any]:
        return {"pivot": self.pivot}


class NotPositiveDefiniteError(NumericalError):
    """A posterior precision is not positive definite."""


class AccumulatorError(NumericalError):
    """Sufficient statistics produced an impossible value."""


class ConvergenceError(NumericalError):
    """An iterative solver stopped without converging."""

    def __init__(self, message: str, last_iterate: Any = None) -> None:
        self.last_iterate = last_iterate
        super().__init__(message)


class DegenerateProposalError(NumericalError):
    """Every importance weight is zero."""


class ChainFailure(NumericalError):
    """A chain update failed inside an engine step."""

    def __init__(self, k: int, l: int, cause: BaseException) -> None:  # noqa: E741
        self.k = k
        self.l = l
        self.cause = cause
        super().__init__(f"chain (k={k}, l={l}) failed: {type(cause).__name__}: {cause}")
        self.exit_code = getattr(cause, "exit_code", NumericalError.exit_code)

    def details(self) -> dict[str, Any]:
        return {"chain": [self.k, self.l], "cause": type(self.cause).__name__}


class SingularityWarning(UserWarning):
    """Correlation matrix is singular (coincident sites)."""
