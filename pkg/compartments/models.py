# compartments/models.py
"""
Flow-arrow compartmental models and the Hamiltonian structure they induce.

Nothing here is a database model; the module keeps the app's conventional
name for its domain types.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Optional, Tuple

import numpy as np

from expressions import Expr, Var, compile_exprs, const, free_parameters, free_variables, parse, substitute, to_text, total
from expressions.nodes import ONE, sub
from poisson import HamiltonianSystem, PoissonStructure, as_columns, summarise, total_population

from .exceptions import ModelError

logger = logging.getLogger(__name__)


def _as_expr(value, variables, where):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return const(value)
    try:
        return parse(value, variables=variables)
    except ValueError as exc:
        raise ModelError(f"{where}: {exc}") from exc


def _check_parameters(parameters):
    clean = {}
    for name, value in parameters.items():
        try:
            clean[name] = float(value)
        except (TypeError, ValueError):
            raise ModelError(f"parameter '{name}' must be a real number, got {value!r}") from None
    return clean


@dataclass(frozen=True)
class Flow:
    """Arrow source -> target carrying `rate` individuals per unit time."""
    source: str
    target: str
    rate: Expr

    def __str__(self):
        return f"{self.source}->{self.target} [{to_text(self.rate)}]"


@dataclass(frozen=True, eq=False)
class OdeSystem:
    variables: Tuple[str, ...]
    rhs: Tuple[Expr, ...]
    parameters: Mapping[str, float] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rhs", tuple(self.rhs))
        object.__setattr__(self, "parameters", MappingProxyType(_check_parameters(self.parameters)))
        if len(self.rhs) != len(self.variables):
            raise ModelError(f"{len(self.rhs)} right-hand sides for {len(self.variables)} variables")

    @classmethod
    def from_dict(cls, data, name=""):
        """Raw form: {"variables": [...], "rhs": {"S": "...", ...}, "params": {...}}."""
        variables = tuple(data["variables"])
        missing = [v for v in variables if v not in data["rhs"]]
        if missing:
            raise ModelError(f"no right-hand side for {missing}")
        rhs = [_as_expr(data["rhs"][v], variables, f"rhs of {v}") for v in variables]
        return cls(variables, rhs, data.get("params", {}), name)

    @property
    def dim(self):
        return len(self.variables)

    @cached_property
    def compiled(self):
        return compile_exprs(self.rhs, self.variables)

    def velocity(self, state):
        return self.compiled(np.asarray(state, dtype=float), self.parameters)

    def check_closed(self, samples, tol=1e-14):
        """Numeric zero-sum test of the right-hand sides (constant total population)."""
        points = as_columns(samples, self.dim)
        sums = compile_exprs([total(self.rhs)], self.variables)(points, self.parameters)
        return summarise(sums, points, tol)


@dataclass(frozen=True, eq=False)
class CanonicalSystem(HamiltonianSystem):
    """
    Hamiltonian form of a constant-population model: {x^mu, x^M} = f^mu,
    all other brackets zero, H the total population.

    `hypersurface_only` is set when the distinguished compartment had to be
    eliminated from the rates, so the dynamics only agree with the model on
    the unit-sum hypersurface.
    """
    distinguished: str = ""
    hypersurface_only: bool = False


@dataclass(frozen=True, eq=False)
class CompartmentalModel:
    compartments: Tuple[str, ...]
    flows: Tuple[Flow, ...] = ()
    parameters: Mapping[str, float] = field(default_factory=dict)
    distinguished: Optional[str] = None
    name: str = ""

    def __post_init__(self):
        compartments = tuple(self.compartments)
        if not compartments:
            raise ModelError("a model needs at least one compartment")
        if len(set(compartments)) != len(compartments):
            raise ModelError(f"duplicate compartment names in {list(compartments)}")
        parameters = _check_parameters(self.parameters)
        clash = sorted(set(parameters) & set(compartments))
        if clash:
            raise ModelError(f"names used both as compartment and parameter: {clash}")
        flows = []
        for position, flow in enumerate(self.flows):
            for end in (flow.source, flow.target):
                if end not in compartments:
                    raise ModelError(f"flow {position} ({flow.source}->{flow.target}) references unknown compartment '{end}'")
            rate = _as_expr(flow.rate, compartments, f"rate of flow {flow.source}->{flow.target}")
            stray = sorted(free_variables(rate) - set(compartments))
            if stray:
                raise ModelError(f"rate of flow {flow.source}->{flow.target} uses unknown compartment '{stray[0]}'")
            unbound = sorted(free_parameters(rate) - set(parameters))
            if unbound:
                raise ModelError(f"rate of flow {flow.source}->{flow.target} uses unbound parameter '{unbound[0]}'")
            flows.append(Flow(flow.source, flow.target, rate))
        distinguished = self.distinguished or compartments[-1]
        if distinguished not in compartments:
            raise ModelError(f"distinguished compartment '{distinguished}' is not one of {list(compartments)}")
        object.__setattr__(self, "compartments", compartments)
        object.__setattr__(self, "flows", tuple(flows))
        object.__setattr__(self, "parameters", MappingProxyType(parameters))
        object.__setattr__(self, "distinguished", distinguished)

    @classmethod
    def from_dict(cls, data, name=""):
        compartments = tuple(data["compartments"])
        flows = [
            Flow(item["from"], item["to"], _as_expr(item["rate"], compartments, f"flow {i} rate"))
            for i, item in enumerate(data.get("flows", []))
        ]
        return cls(compartments, tuple(flows), data.get("params", {}), data.get("distinguished"), name)

    def to_dict(self):
        return {
            "compartments": list(self.compartments),
            "params": dict(self.parameters),
            "flows": [{"from": f.source, "to": f.target, "rate": to_text(f.rate)} for f in self.flows],
            "distinguished": self.distinguished,
        }

    def with_distinguished(self, name):
        return CompartmentalModel(self.compartments, self.flows, self.parameters, name, self.name)

    def with_parameters(self, **overrides):
        return CompartmentalModel(
            self.compartments, self.flows, {**self.parameters, **overrides}, self.distinguished, self.name
        )

    @property
    def dim(self):
        return len(self.compartments)

    def to_ode(self):
        return to_ode(self)

    def canonical_poisson(self, eliminate=True):
        return canonical_poisson(self, eliminate)

    def __str__(self):
        return f"{self.name or 'model'}({', '.join(str(f) for f in self.flows)})"


def to_ode(model):
    """x'^A = (rates into A) - (rates out of A); self-loops contribute nothing."""
    inflow = {c: [] for c in model.compartments}
    outflow = {c: [] for c in model.compartments}
    for flow in model.flows:
        if flow.source == flow.target:
            continue
        outflow[flow.source].append(flow.rate)
        inflow[flow.target].append(flow.rate)
    rhs = [sub(total(inflow[c]), total(outflow[c])) for c in model.compartments]
    return OdeSystem(model.compartments, rhs, model.parameters, model.name)


def canonical_poisson(model, eliminate=True):
    """
    Hamiltonian system of a constant-population model with x^M = model.distinguished.

    The rates are restricted to the unit-sum hypersurface by substituting
    x^M = 1 - (sum of the others). With `eliminate=False` the rates must
    already be free of x^M; the first offending flow is reported otherwise.
    """
    ode = to_ode(model)
    marked = model.distinguished
    others = [c for c in model.compartments if c != marked]
    if not eliminate:
        for flow in model.flows:
            if marked in free_variables(flow.rate):
                raise ModelError(
                    f"flow {flow} depends on the distinguished compartment '{marked}'; "
                    f"eliminate it or choose another distinguished compartment"
                )
    replacement = sub(ONE, total(Var(c) for c in others))
    brackets = {}
    hypersurface_only = False
    for name, rhs in zip(model.compartments, ode.rhs):
        if name == marked:
            continue
        if marked in free_variables(rhs):
            hypersurface_only = True
            rhs = substitute(rhs, {marked: replacement})
        brackets[(name, marked)] = rhs
    if hypersurface_only:
        logger.info("%s: rates depend on %s; structure is exact only on the unit-sum hypersurface",
                    model.name or "model", marked)
    structure = PoissonStructure.from_brackets(model.compartments, brackets, name=f"{model.name}[{marked}]")
    logger.debug("canonical structure %r", structure)
    return CanonicalSystem(
        structure, total_population(model.compartments), model.parameters, model.name,
        distinguished=marked, hypersurface_only=hypersurface_only,
    )
