# compartments/exceptions.py


class ModelError(ValueError):
    """A compartmental model or raw ODE system is malformed."""


class LinearityError(ModelError):
    def __init__(self, name, detail):
        super().__init__(
            f"{name} must be a homogeneous linear function of S and I for the exponential-growth "
            f"rescaling to hold ({detail})"
        )
        self.name = name
