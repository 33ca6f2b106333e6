"""Exception hierarchy shared by all solver modules."""


class OTBaryError(ValueError):
    """Base class for invalid inputs to the barycenter solvers."""


class AllZeroInput(OTBaryError):
    pass


class NegativeInput(OTBaryError):
    pass


class NonFiniteInput(OTBaryError):
    pass


class NotMeanZero(OTBaryError):
    pass


class NotConvex(OTBaryError):
    pass


class InvalidSplit(OTBaryError):
    pass


class GridMismatch(OTBaryError):
    pass


class Infeasible(OTBaryError):
    pass


class Singular(OTBaryError):
    pass
