"""Exception types shared across the package.

CLI exit-code mapping: :class:`PreconditionError` (and other ValueErrors
from validation) exit 2, :class:`BudgetExceededError` exits 3.
"""


class BudgetExceededError(RuntimeError):
    """An enumeration or table would exceed the caller-supplied budget."""


class PreconditionError(ValueError):
    """An operation was invoked outside its stated preconditions."""
