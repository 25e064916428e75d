"""Exception hierarchy shared by all solver modules."""


class MsoextError(Exception):
    """Base class for every error raised by the toolkit."""


class InputError(MsoextError):
    """Malformed input file or argument."""


class ParseError(InputError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class UnboundVariable(InputError):
    pass


class UnknownGlobalConstraint(InputError):
    pass


class OracleFailure(MsoextError):
    pass


class ResourceLimit(MsoextError):
    pass


class InvalidDecomposition(MsoextError):
    pass


class VertexNotInDecomposition(MsoextError):
    pass


class Infeasible(MsoextError):
    pass


class UnboundedVariable(MsoextError):
    pass


class LocalityViolation(MsoextError):
    pass


class UnsupportedPredicate(MsoextError):
    pass


class UnknownKind(InputError):
    pass


class ColorMissing(InputError):
    pass


class ShapeViolation(InputError):
    pass


class NonUniform(InputError):
    pass


class FragmentMismatch(InputError):
    """Instance contents do not fit the solver's fragment."""
