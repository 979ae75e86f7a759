"""Exception types shared across posepool."""


class PosepoolError(Exception):
    """Base class for all posepool errors."""


class InvalidArgumentError(PosepoolError, ValueError):
    """A caller passed an argument outside an operation's domain."""


class DataValidationError(PosepoolError, ValueError):
    """Input data (poses, features, files) failed validation."""


class UndefinedObjectiveError(PosepoolError, ArithmeticError):
    """The clustering ratio objective has an empty denominator (k == 1)."""


class VideoNotFoundError(PosepoolError, KeyError):
    """A pair references a video id that the dataset cannot resolve."""

    def __str__(self):
        return f"video not found in dataset: {self.args[0]!r}"
