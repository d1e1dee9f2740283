"""Exception hierarchy shared by all qdcavity modules."""


class QDCavityError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QDCavityError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ExceptionalPoint(QDCavityError, ArithmeticError):
    """The two complex Rabi poles coincide; the pole decomposition is undefined."""


class SingularSystem(QDCavityError, ArithmeticError):
    pass


class TruncationNotConverged(QDCavityError, RuntimeError):
    pass


class NonConvergedIntegration(QDCavityError, RuntimeError):
    pass


class QuadratureError(QDCavityError, RuntimeError):
    """Estimated quadrature error exceeds the requested tolerance."""


class WindowTooNarrow(QuadratureError):
    pass


class GridTooCoarse(QuadratureError):
    pass


class NotConverged(QDCavityError, RuntimeError):
    pass


class SingularJacobian(QDCavityError, ArithmeticError):
    pass


class InsufficientData(QDCavityError, ValueError):
    pass


class InconsistentFit(QDCavityError, RuntimeError):
    pass


class ParseError(QDCavityError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class EmptyDataset(QDCavityError, ValueError):
    pass
