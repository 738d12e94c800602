"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument or configuration supplied by the caller."""


class StateError(RuntimeError):
    """Operation is not valid in the object's current state."""


class ContractError(RuntimeError):
    """A documented precondition of an operation was violated."""
