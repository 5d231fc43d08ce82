"""Exception types shared across the package.

The CLI maps these onto exit codes: OSError/EOFError -> 1,
everything below except VerificationError -> 2, VerificationError -> 3.
"""


class ChartAttribError(Exception):
    """Base class for errors raised by this package."""


class FormatError(ChartAttribError):
    """Byte stream or document does not follow the declared format."""


class ValidationError(ChartAttribError):
    """Data violates a type invariant (non-finite values, bad geometry, ...)."""


class ContractError(ChartAttribError):
    """Caller broke an operation precondition (dimension mismatch, bounds, ...)."""


class CapacityError(ChartAttribError):
    """Input exceeds a configured memory or size budget."""


class VerificationError(ChartAttribError):
    """Fast-path result disagrees with its independent oracle."""
