"""Exception hierarchy shared across the package."""


class AggDiffError(Exception):
    """Base class for all errors raised by this package."""


class BadParameter(AggDiffError):
    """A constructor argument violates its documented range."""


class MassTooSmall(AggDiffError):
    """Initial density has nonpositive mass or its quadrature failed."""


class DegenerateQuantile(AggDiffError):
    """Two initialization quantiles coincide (unresolvable spike in rho0)."""


class OutOfRange(AggDiffError):
    """Argument outside the function's domain (e.g. z not in [0, mass])."""


class InvalidState(AggDiffError):
    """Particle state violates ordering/positivity invariants."""


class StepTooSmall(AggDiffError):
    """Time step fell below the floor after repeated halving: particle collision.

    Carries the failure time in ``t_fail``.
    """

    def __init__(self, message: str, t_fail: float):
        super().__init__(message)
        self.t_fail = t_fail


class QuadratureFailure(AggDiffError):
    """Adaptive quadrature did not reach the requested tolerance."""


class MassMismatch(AggDiffError):
    """Two densities passed to a comparison do not carry equal mass."""


class DomainMismatch(AggDiffError):
    """Two objects live on tori of different length."""


class CFLViolation(AggDiffError):
    """Finite-volume step called with dt above the CFL bound."""


class NegativeDensity(AggDiffError):
    """Finite-volume solver produced a cell below -1e-12 (solver failure)."""


class ConfigError(AggDiffError):
    """Base class for configuration file errors; carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParseError(ConfigError):
    """Config line is not `dotted.key = value`."""


class UnknownKey(ConfigError):
    """Config key (or enumeration member) is not documented."""


class BadValue(ConfigError):
    """Config value has the wrong type or violates its range."""
