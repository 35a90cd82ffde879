# solver/exceptions.py
from expressions.exceptions import DomainError


class IntegrationError(ValueError):
    """Bad integrator input (step, tolerances, initial state)."""


class StepSizeUnderflowError(IntegrationError):
    def __init__(self, t_reached, message=""):
        super().__init__(f"step size underflow at t = {t_reached:.17g}" + (f": {message}" if message else ""))
        self.t_reached = t_reached


class HorizonError(DomainError):
    def __init__(self, t_requested, t_max):
        super().__init__(
            f"t = {t_requested:.17g} is beyond the valid horizon t_max = {t_max:.17g} of the exact solution"
        )
        self.t_requested = t_requested
        self.t_max = t_max


class BracketError(DomainError):
    def __init__(self, s, detail=""):
        super().__init__(f"no sign change bracketing the root at S = {s:.17g}" + (f" ({detail})" if detail else ""))
        self.s = s


class UnsupportedModelError(ValueError):
    def __init__(self, kind):
        super().__init__(f"exact solution not available for '{kind}'")
        self.kind = kind
