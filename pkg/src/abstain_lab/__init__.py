"""Online classification with abstentions under clean-label corruption."""
__version__ = "0.1.0"

from .errors import ContractError, InputError, StateError
from .labels import ABSTAIN

__all__ = ["ABSTAIN", "ContractError", "InputError", "StateError", "__version__"]
