# compartments/rescaling.py
"""
Generalized SIR with births b*N and deaths d*X, so that N' = (b - d) N.

For phi1, phi2 homogeneous linear in (S, I) the fractions s = S/N, i = I/N,
r = R/N obey a constant-population generalized SIR with

    phi1~ = b - d*s + phi1(s, i) - (b - d)*s
    phi2~ = -d*i + phi2(s, i) - (b - d)*i
"""
import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from expressions import Expr, Param, Var, compile_exprs, diff, free_variables, parse, rename
from expressions.exceptions import DomainError

from .exceptions import LinearityError, ModelError
from .models import CompartmentalModel, Flow, OdeSystem

logger = logging.getLogger(__name__)

RAW = ("S", "I", "R")
FRACTIONS = ("s", "i", "r")

_PROBES = np.array([[0.2, 0.7, 1.3, 2.9, 0.05], [0.6, 0.1, 2.2, 0.4, 1.7]])


def _phi(value, name):
    phi = value if isinstance(value, Expr) else parse(str(value), variables=RAW)
    if "R" in free_variables(phi):
        raise LinearityError(name, "it may only depend on S and I")
    return phi


def require_linear(phi, name, parameters):
    """phi(0, 0) = 0 and every second derivative vanishes (checked on fixed probe points)."""
    try:
        at_origin = compile_exprs([phi], ("S", "I"))(np.zeros(2), parameters)[0]
        second = [diff(diff(phi, a), b) for a in ("S", "I") for b in ("S", "I")]
        curvature = compile_exprs(second, ("S", "I"))(_PROBES, parameters)
    except DomainError as exc:
        raise LinearityError(name, f"not defined everywhere: {exc}") from exc
    if abs(at_origin) > 1e-12:
        raise LinearityError(name, f"value {at_origin:g} at S = I = 0")
    if np.max(np.abs(curvature)) > 1e-12:
        raise LinearityError(name, "non-zero second derivative")


@dataclass(frozen=True, eq=False)
class NonconstantSir:
    alpha: float
    beta: float
    b: float
    d: float
    phi1: Expr
    phi2: Expr
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("alpha", "beta", "b", "d"):
            if getattr(self, name) < 0.0:
                raise ModelError(f"parameter '{name}' must be non-negative, got {getattr(self, name)}")
        object.__setattr__(self, "phi1", _phi(self.phi1, "phi1"))
        object.__setattr__(self, "phi2", _phi(self.phi2, "phi2"))
        object.__setattr__(self, "parameters", MappingProxyType(dict(self.parameters)))

    @property
    def all_parameters(self):
        return {"alpha": self.alpha, "beta": self.beta, "b": self.b, "d": self.d, **self.parameters}

    def raw_ode(self):
        """Absolute counts with N = S + I + R growing (or decaying) exponentially."""
        S, I, R = (Var(v) for v in RAW)
        N = S + I + R
        p = {name: Param(name) for name in ("alpha", "beta", "b", "d")}
        incidence = p["beta"] * S * I / N
        rhs = (
            p["b"] * N - p["d"] * S - incidence + self.phi1,
            incidence - p["alpha"] * I - p["d"] * I + self.phi2,
            p["alpha"] * I - p["d"] * R - self.phi1 - self.phi2,
        )
        return OdeSystem(RAW, rhs, self.all_parameters, "nonconstant_sir")


def nonconstant_sir(alpha, beta, b, d, phi1="0", phi2="0", **parameters):
    return NonconstantSir(float(alpha), float(beta), float(b), float(d), phi1, phi2, parameters)


def rescale_nonconstant(system):
    """Constant-population generalized SIR in the fractions (s, i, r)."""
    parameters = system.all_parameters
    require_linear(system.phi1, "phi1", parameters)
    require_linear(system.phi2, "phi2", parameters)
    to_fractions = {"S": "s", "I": "i"}
    phi1 = rename(system.phi1, to_fractions)
    phi2 = rename(system.phi2, to_fractions)
    s, i = Var("s"), Var("i")
    b, d = Param("b"), Param("d")
    growth = b - d
    phi1_tilde = b - d * s + phi1 - growth * s
    phi2_tilde = -(d * i) + phi2 - growth * i
    flows = (
        Flow("s", "i", parse("beta*s*i", variables=FRACTIONS)),
        Flow("i", "r", parse("alpha*i", variables=FRACTIONS)),
        Flow("r", "s", phi1_tilde),
        Flow("r", "i", phi2_tilde),
    )
    logger.debug("rescaled phi1~ = %s, phi2~ = %s", phi1_tilde, phi2_tilde)
    return CompartmentalModel(FRACTIONS, flows, parameters, "r", "rescaled_sir")
