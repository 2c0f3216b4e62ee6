"""Exception hierarchy shared by every momentforge module."""


class MomentForgeError(ValueError):
    """Base class; every error raised on purpose by the library derives from it."""


class EmptySequence(MomentForgeError):
    pass


class EvenLength(MomentForgeError):
    pass


class DimensionMismatch(MomentForgeError):
    pass


class NotSymmetric(MomentForgeError):
    pass


class NoConvergence(MomentForgeError):
    def __init__(self, iterations, message=None):
        self.iterations = iterations
        super().__init__(message or f"no convergence after {iterations} sweeps")


class NegativeOrder(MomentForgeError):
    pass


class UnsupportedModel(MomentForgeError):
    pass


class IndexOverflow(MomentForgeError):
    pass


class NotContractive(MomentForgeError):
    pass


class NotHankel(MomentForgeError):
    pass


class BadCorner(MomentForgeError):
    pass


class RankDeficient(MomentForgeError):
    def __init__(self, order, message=None):
        self.order = order
        super().__init__(message or f"leading Hankel minor D_{order} vanishes")


class QuadratureUnavailable(MomentForgeError):
    pass


class NotPSD(MomentForgeError):
    pass


class TruncationTooSmall(MomentForgeError):
    pass


class NonpositiveWeight(MomentForgeError):
    pass


class OutOfRange(MomentForgeError):
    pass


class OutsideRadius(MomentForgeError):
    pass


class BoundNotApplicable(MomentForgeError):
    pass


class SeriesDivergent(MomentForgeError):
    pass


class ZeroDelta(MomentForgeError):
    pass


class SingularMatrix(MomentForgeError):
    pass


class SpecParseError(MomentForgeError):
    """Bad model/IFS/weight spec string; `token` and `position` locate the culprit."""

    def __init__(self, message, token=None, position=None):
        self.token = token
        self.position = position
        where = ""
        if token is not None:
            where = f" (token {token!r}"
            where += f" at position {position})" if position is not None else ")"
        super().__init__(message + where)
