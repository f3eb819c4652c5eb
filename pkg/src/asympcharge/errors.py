"""Exception hierarchy shared by all modules."""


class AsympChargeError(Exception):
    """Base class for every error raised by the package."""


# expression ingestion


class ExpressionError(AsympChargeError, ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class ExprSyntaxError(ExpressionError):
    pass


class UnknownIdentifier(ExpressionError):
    pass


class ArityMismatch(ExpressionError):
    pass


class DimensionExceeded(ExpressionError):
    pass


# numerical failures


class NumericalError(AsympChargeError, ArithmeticError):
    """Failures that map to the CLI's numerical-failure exit code."""


class SingularEvaluation(NumericalError):
    def __init__(self, node, why):
        self.node = node
        self.why = why
        super().__init__(f"singular evaluation at {node}: {why}")


class SingularMetric(NumericalError):
    pass


class ChartDomainViolation(NumericalError):
    pass


class DegenerateSurface(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class NonConvergent(AsympChargeError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


# geometry / configuration


class UnsupportedKernel(AsympChargeError):
    pass


class NotAnIsometry(AsympChargeError, ValueError):
    pass


class WrongBackground(AsympChargeError, ValueError):
    pass


class BadSchedule(AsympChargeError, ValueError):
    pass


class CertificationFailed(AsympChargeError):
    def __init__(self, message, certificate=None):
        self.certificate = certificate
        super().__init__(message)


class ConfigError(AsympChargeError, ValueError):
    def __init__(self, message, pointer=""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


class IdentityViolation(NumericalError):
    """A pointwise algebraic identity failed beyond its tolerance."""


class IoError(AsympChargeError, OSError):
    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{message}: {path}" if path is not None else message)
