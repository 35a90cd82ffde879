# bihamiltonian/exceptions.py
from expressions.exceptions import DomainError


class DomainGuardError(DomainError):
    def __init__(self, message, point=None):
        where = f" at {tuple(float(x) for x in point)}" if point is not None else ""
        super().__init__(f"{message}{where}")
        self.guard = message
        self.point = None if point is None else tuple(float(x) for x in point)


class UnknownStructureError(ValueError):
    def __init__(self, name, known):
        super().__init__(f"unknown structure '{name}'; choose one of {sorted(known)}")
        self.name = name
