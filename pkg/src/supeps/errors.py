"""Exception taxonomy shared across the package.

Every raised error derives from SupepsError so callers can catch the
package's failures without also swallowing genuine bugs (TypeError etc).
"""


class SupepsError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(SupepsError):
    """Tensor leg extents (or array shapes) do not match the operation."""


class LegLabelError(SupepsError):
    """A named leg does not exist, or labels would collide."""


class SplitError(SupepsError):
    """A row/column split of tensor legs is empty or exhaustive."""


class DegenerateInputError(SupepsError):
    """Input carries no usable signal (zero tensor, empty spectrum, ...)."""


class ParameterError(SupepsError):
    """A scalar argument is outside its documented domain."""


class SizeError(SupepsError):
    """A lattice or problem size is outside the supported range."""


class ResourceError(SupepsError):
    """A computation was refused because it would exceed a resource cap.

    Attributes:
        required: estimated requirement (bytes unless stated otherwise).
        cap: the configured limit that refused it.
    """

    def __init__(self, message: str, required: int = 0, cap: int = 0):
        super().__init__(message)
        self.required = required
        self.cap = cap


class AlignmentError(SupepsError):
    """Records that should share a grid (depths, lattices) do not."""


class UnderdeterminedError(SupepsError):
    """Too few data points to fix the requested fit."""


class DegenerateDataError(SupepsError):
    """A fit or statistic is undefined on this data (zero variance, ...)."""


class EmptyOutputError(SupepsError):
    """An emit/selection request matched nothing."""
