"""Exception types shared across the toolkit."""


class ShapeError(ValueError):
    """Tensor or layer shapes are incompatible."""


class InsufficientDataError(ValueError):
    """A pool or dataset is too small for the requested operation."""


class MissingSyntheticError(ValueError):
    """Synthetic windows were requested but no source is available."""


class DivergedError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class AliasingRiskError(ValueError):
    """Surrogate natural frequency is at or above the Nyquist frequency."""


class UndefinedMetricError(ValueError):
    """Metric is undefined for the given inputs (e.g. AP with no positives)."""


class RecordParseError(ValueError):
    """A record file could not be parsed."""

    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")
