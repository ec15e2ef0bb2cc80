"""Exception types raised by the library."""


class CosshellError(Exception):
    """Base class for all library errors."""


class DegenerateChart(CosshellError):
    """The chart is not an immersion at an evaluated point."""


class SingularShifter(CosshellError):
    """The thickness coordinate reaches a focal point (det of the shifter vanishes)."""


class FrameMismatch(CosshellError):
    """Two tensors living on different surface frames were combined."""


class NotSkew(CosshellError):
    pass


class NotARotation(CosshellError):
    pass


class NotSymmetric(CosshellError):
    pass


class GridTooSmall(CosshellError):
    """Finite-difference stencils need at least three nodes per direction."""


class DegenerateDeformedSurface(CosshellError):
    pass


class KLViolated(CosshellError):
    """The director d3 does not coincide with the deformed normal."""


class NonConvergence(CosshellError):
    """The equilibrium solver stopped before reaching its tolerance.

    The best iterate and the report are attached so callers can still use them.
    """

    def __init__(self, message, config=None, report=None):
        super().__init__(message)
        self.config = config
        self.report = report


class ScenarioError(CosshellError):
    """Invalid scenario or field file."""
