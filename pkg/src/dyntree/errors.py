"""Exception hierarchy shared by every module of the package."""


class DyntreeError(Exception):
    """Base class for all errors raised by dyntree."""


class DeleteAbsent(DyntreeError, KeyError):
    """A DEL request names an example that is not in the active set."""

    def __init__(self, example, index=None):
        self.example = example
        self.index = index
        where = "" if index is None else f" (request #{index})"
        super().__init__(f"cannot delete absent example {example!r}{where}")

    def __str__(self):
        return self.args[0]


class BothEmpty(DyntreeError, ValueError):
    """Relative edit distance is undefined for two empty multisets."""


class EmptySet(DyntreeError, ValueError):
    """An operation that needs at least one example received none."""


class BadFeatureIndex(DyntreeError, IndexError):
    pass


class DimensionMismatch(DyntreeError, ValueError):
    pass


class InvalidFeature(DyntreeError, ValueError):
    """Feature values must be totally ordered; NaN is rejected."""


class BadEpsilon(DyntreeError, ValueError):
    pass


class TooSmall(DyntreeError, ValueError):
    pass


class Exhausted(DyntreeError, RuntimeError):
    """A delayed-rebuild instance was fed after it finished."""


class ImproperSplit(DyntreeError, RuntimeError):
    """A decision rule produced a split with an empty side."""


class InternalConsistencyError(DyntreeError, RuntimeError):
    pass


class StreamFormatError(DyntreeError, ValueError):
    """Malformed stream file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
