"""Exception types raised across the package.

Every error the library raises deliberately derives from :class:`HeomcorrError`
so callers can catch the whole family with one clause. The CLI maps these onto
exit codes (config 1, propagation 2, oracle 3).
"""


class HeomcorrError(Exception):
    """Base class for all errors raised by heomcorr."""


class DimensionError(HeomcorrError, ValueError):
    """Matrix or subsystem dimensions violate an operation's contract."""


class ParameterError(HeomcorrError, ValueError):
    """Physical or numerical parameters outside their valid domain."""


class PositivityError(HeomcorrError):
    """A density matrix eigenvalue is negative beyond numerical slack."""


class CapacityError(HeomcorrError):
    """Hierarchy size would exceed the configured memory budget."""


class StiffnessError(HeomcorrError):
    """The adaptive integrator underflowed its step size."""


class PropagationError(HeomcorrError):
    """Propagation produced an unphysical state or failed to finish."""


class ConfigError(HeomcorrError, ValueError):
    """Configuration text failed to parse or validate."""


class OracleError(HeomcorrError):
    """An independent-oracle check exceeded its budget or failed."""
