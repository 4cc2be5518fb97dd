"""Exception hierarchy shared by all modules."""


class CLLError(Exception):
    """Base class for every error raised by the package."""


class StabilityViolation(CLLError):
    pass


class BlowUp(CLLError):
    pass


class CornerMismatch(CLLError):
    pass


class OutOfDomain(CLLError):
    pass


class RegionViolation(CLLError):
    pass


class IntegratorFailure(CLLError):
    pass


class IllConditionedFit(CLLError):
    pass


class DivisionFloor(CLLError):
    pass


class WindingAmbiguous(CLLError):
    pass


class NewtonDivergence(CLLError):
    pass


class NonSimpleZero(CLLError):
    pass


class LadderInadmissible(CLLError):
    pass


class IntegrityError(CLLError):
    """Stored artifacts do not match their manifest."""


class ConfigError(CLLError):
    pass
