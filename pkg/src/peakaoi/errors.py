"""Exception hierarchy shared by every module in the package."""


class AoiError(Exception):
    """Base class for all package errors."""


class InvalidParam(AoiError, ValueError):
    """A parameter violates a domain invariant."""


class DeadPolicy(InvalidParam):
    """The policy gate can never pass, so no cycle would ever complete."""


class GateNeverPasses(AoiError, ValueError):
    """Conditioning on an event of zero probability (``Pr(C + I <= W) = 0``)."""


class CycleOverflow(AoiError, RuntimeError):
    """A single renewal cycle exceeded the simulator's event budget."""


class NoFiniteValue(AoiError, ValueError):
    """An objective was infinite at every grid point of a search."""


class ConfigError(AoiError, ValueError):
    """A configuration file could not be parsed; the message names the key."""
