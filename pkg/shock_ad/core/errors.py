class ShockADError(Exception):
    exit_code = 1


class ConfigError(ShockADError):
    exit_code = 2


class NumericalError(ShockADError):
    exit_code = 3


class DomainError(NumericalError, ValueError):
    """Dual arithmetic outside the domain of the operation."""


class OutOfDomainError(NumericalError):
    """Reconstruction evaluated outside the grid."""


class BoundaryCellError(OutOfDomainError, IndexError):
    pass


class CFLViolationError(NumericalError):
    pass


class StateError(NumericalError):
    def __init__(self, message: str, cell: int = None):
        super().__init__(message)
        self.cell = cell


class NoShockError(NumericalError):
    pass


class TrackingLostError(NumericalError):
    pass


class ProbeDegenerateError(NumericalError):
    pass


class HarnessIOError(ShockADError):
    exit_code = 4

    def __init__(self, message: str, path: str = None):
        super().__init__(message)
        self.path = path
