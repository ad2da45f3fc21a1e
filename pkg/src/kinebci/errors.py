"""Exception hierarchy shared by every stage of the pipeline."""


class KinebciError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(KinebciError, ValueError):
    """Dimensions or settings do not agree (channel count, lag count, axes)."""


class ValidationError(KinebciError, ValueError):
    """Input data is malformed, empty or out of range."""


class SequencingError(KinebciError):
    """Frames arrived out of time order."""


class NotWarmError(KinebciError):
    """A lag window was used before it held K+1 frames."""


class InsufficientDataError(ValidationError):
    """Too few samples to build a single lag-embedded row."""


class RankDeficiencyError(KinebciError, ArithmeticError):
    """Least-squares design does not have full column rank.

    Parameters
    ----------
    n_deficient : int
        Number of columns beyond the numerical rank.
    width : int
        Total number of design columns.
    """

    def __init__(self, n_deficient, width):
        self.n_deficient = int(n_deficient)
        self.width = int(width)
        super().__init__(
            f"design is rank deficient: {self.n_deficient} of {self.width} columns "
            "are linearly dependent (set ridge > 0 to regularize)"
        )


class ProtocolError(KinebciError, ValueError):
    """A gesture wire stream does not follow the line grammar."""
