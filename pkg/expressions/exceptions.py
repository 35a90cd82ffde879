# expressions/exceptions.py


class ExpressionError(ValueError):
    """Base class for everything the expression engine raises."""


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message, position):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownFunctionError(ExpressionSyntaxError):
    def __init__(self, name, position):
        super().__init__(f"unknown function '{name}'", position)
        self.name = name


class UnboundNameError(ExpressionError):
    def __init__(self, name, kind="name"):
        super().__init__(f"unbound {kind} '{name}'")
        self.name = name


class DomainError(ExpressionError):
    """Evaluation left the open domain of an expression (shared by every app)."""


class ZeroDenominatorError(DomainError):
    pass


class LogDomainError(DomainError):
    pass


class PowerDomainError(DomainError):
    pass
