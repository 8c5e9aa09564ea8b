"""Exception hierarchy shared by every harmonia module."""


class HarmoniaError(Exception):
    """Base class for all library errors."""


class KeyMismatch(HarmoniaError, ValueError):
    pass


class InvalidValue(HarmoniaError, ValueError):
    pass


class EmptyParticipants(HarmoniaError, ValueError):
    pass


class EmptySelection(HarmoniaError, ValueError):
    pass


class EmptyInterval(HarmoniaError, ValueError):
    pass


class InvalidAngle(HarmoniaError, ValueError):
    pass


class EmptyOperands(HarmoniaError, ValueError):
    pass


class KeyNotFound(HarmoniaError, KeyError):
    pass


class KeyCollision(HarmoniaError, ValueError):
    pass


class InvalidSpec(HarmoniaError, ValueError):
    pass


class NotOwned(HarmoniaError, ValueError):
    pass


class InvalidChain(HarmoniaError, ValueError):
    pass


class InvalidCapacity(HarmoniaError, ValueError):
    pass


class StubNotFound(HarmoniaError, KeyError):
    pass


class ParseError(HarmoniaError):
    pass


class ValidationError(HarmoniaError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))
