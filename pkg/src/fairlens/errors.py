"""Exception hierarchy shared across fairlens."""

from __future__ import annotations


class FairlensError(Exception):
    """Base class for all toolkit errors."""


class InputError(FairlensError, ValueError):
    """Malformed or inconsistent input data (manifests, hypotheses, turns)."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"row {line}: "
        super().__init__(where + message)


class DuplicateIdError(InputError):
    pass


class UndefinedMetricError(FairlensError, ValueError):
    """Raised when a metric is undefined, e.g. WER against an empty reference."""


class UnsupportedSampleError(FairlensError, ValueError):
    """Sample size outside what a statistical test supports."""


class DegenerateSampleError(FairlensError, ValueError):
    """Sample has zero variance where the statistic needs spread."""


class NoTestableGroupsError(FairlensError):
    """Fewer than two representative groups remain after filtering."""
