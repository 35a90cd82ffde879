# poisson/exceptions.py


class PoissonError(ValueError):
    pass


class DimensionMismatchError(PoissonError):
    def __init__(self, left, right):
        super().__init__(f"structures act on different variables: {list(left)} vs {list(right)}")
        self.left = tuple(left)
        self.right = tuple(right)
