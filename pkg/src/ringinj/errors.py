"""Exception types shared across the package."""


class NotApplicableError(Exception):
    """The requested analysis does not apply to the given field."""


class InconclusiveError(Exception):
    """The numerics cannot certify either outcome."""


class QuadratureError(Exception):
    """Quadrature failure (non-integrable interior singularity, bad samples)."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class UnsupportedMapError(Exception):
    """Operation defined only for radial maps was handed something else."""


class KorSearchError(Exception):
    """Certificate search failed; carries the best candidate found."""

    def __init__(self, message, best_point=None, best_fraction=0.0):
        super().__init__(message)
        self.best_point = best_point
        self.best_fraction = best_fraction
