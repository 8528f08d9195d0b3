"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`BICError`.
The CLI maps :class:`InputError` subclasses to exit code 2 and every other
``BICError`` to exit code 1.
"""


class BICError(Exception):
    """Base class for library errors."""


class InputError(BICError):
    """Malformed file or unparseable input."""


class InvalidArgumentError(BICError, ValueError):
    pass


class InvalidMeasureError(BICError, ValueError):
    """A measure violates its invariants or a quadrature produced non-finite values."""


class InvalidTestFunctionError(BICError, ValueError):
    pass


class SingularEvaluationError(BICError, ValueError):
    """A kernel or potential was evaluated on its singular set."""


class BalanceViolationError(BICError, ValueError):
    """Total mass incompatible with the background (zero mean / Gauss-Bonnet)."""


class InadmissibleAtomError(BICError, ValueError):
    """An atom of mass >= 2*pi was found where it is not allowed."""

    def __init__(self, message, point=None, mass=None):
        super().__init__(message)
        self.point = point
        self.mass = mass


class InfiniteLengthError(BICError, ValueError):
    """The requested curve passes through a point at infinity."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class IndeterminateSingularityError(InfiniteLengthError):
    """Atom of mass exactly 2*pi whose distance behaviour is not declared."""


class VertexNotFoundError(BICError, KeyError):
    pass


class StencilError(BICError, ValueError):
    """Finite-difference stencil does not fit the grid."""


class BudgetExceededError(BICError, ValueError):
    pass


class UnreachableError(BICError, RuntimeError):
    pass


class MismatchedSamplesError(BICError, ValueError):
    pass
