"""Exception hierarchy."""


class PoisbinError(Exception):
    """Base class for library errors."""


class InputError(PoisbinError, ValueError):
    """Invalid parameters or input data."""


class ProbabilityFileError(InputError):
    def __init__(self, path, line, message):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class SizeLimitError(InputError):
    """Brute-force enumeration requested beyond its size limit."""


class UnderResolutionError(InputError):
    """Too few DFT nodes to resolve a degree-n polynomial."""


class NoSolutionError(PoisbinError):
    """The saddle equation has no positive root for the requested k."""


class DegenerateInstanceError(PoisbinError):
    """Every probability is 0 or 1, so the saddle machinery does not apply."""


class ResolutionError(PoisbinError):
    """Quadrature failed to converge under node doubling."""


class EscalationError(PoisbinError):
    """Extended-precision re-evaluation could not produce a finite value."""
