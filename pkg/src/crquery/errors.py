"""Exception hierarchy. Each family maps to one CLI exit status."""


class CRQueryError(Exception):
    exit_code = 1


class ValidationError(CRQueryError, ValueError):
    """Bad input or violated precondition."""

    exit_code = 2


class ResourceError(CRQueryError):
    """Desk-scale guard exceeded (search space, alphabet product, ...)."""

    exit_code = 3


class ContractError(CRQueryError):
    """A postcondition, certificate or stated property did not hold."""

    exit_code = 4


class AbsoluteContinuityError(ValidationError):
    pass


class DegenerateDualError(ValidationError):
    pass


class DefinitenessError(ValidationError):
    pass


class InfeasibleProgramError(ContractError):
    pass


class InsufficientSuccessError(ContractError):
    pass
