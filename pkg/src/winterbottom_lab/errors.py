"""Exception hierarchy shared by all modules."""


class WinterbottomLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(WinterbottomLabError, ValueError):
    pass


class DegenerateAnisotropyError(WinterbottomLabError, ValueError):
    """The anisotropy vanishes (or turns negative) on some direction."""


class InvalidEtaError(WinterbottomLabError, ValueError):
    """A user-supplied vector is not a subgradient at the requested pole."""


class InvalidPolygonError(WinterbottomLabError, ValueError):
    pass


class EmptyClipError(WinterbottomLabError, ValueError):
    """Clipping against the half-plane left nothing of positive area."""


class RegimeError(WinterbottomLabError, ValueError):
    """The adhesion coefficient lies outside the regime an operation needs."""

    def __init__(self, message, regime=None, required=None):
        super().__init__(message)
        self.regime = regime
        self.required = required


class GeneratorFailureError(WinterbottomLabError, RuntimeError):
    pass


class OptimizationFailureError(WinterbottomLabError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
