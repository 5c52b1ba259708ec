"""Exception hierarchy shared by every dcclab module."""


class DccError(Exception):
    """Base class for all dcclab errors."""


class DomainError(DccError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(DccError, ValueError):
    """A caller violated an interface precondition."""


class CaseError(ContractError):
    """An unsupported signal/interference cognition pair was requested."""


class DegenerateInputError(DccError, ValueError):
    """Inputs describe an empty or degenerate physical configuration."""


class SizeError(DccError):
    """A combinatorial or trial budget exceeded its configured cap."""


class ParameterError(DccError, ValueError):
    """Model parameters fall outside the validity range of a formula."""


class AccuracyError(DccError):
    """A numerical procedure did not reach its tolerance.

    ``estimate`` carries the best value obtained before giving up.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class InfeasibleQosError(DccError):
    """No positive rate meets the BLER target; ``floor_bler`` is the rate-0+ BLER."""

    def __init__(self, message, floor_bler=None):
        super().__init__(message)
        self.floor_bler = floor_bler
