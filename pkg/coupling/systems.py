# coupling/systems.py
"""
N interacting populations sharing one Poisson structure.

Population a (1-based) contributes its canonical brackets with every
variable and parameter suffixed `_a`; the distinguished compartments are
linked by {x^M_a, x^M_b} = -tau_ab. The Hamiltonian is the grand total.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Tuple

import numpy as np

from compartments import CompartmentalModel, canonical_poisson, model_from_dict
from expressions import Expr, compile_exprs, const, free_parameters, free_variables, parse, rename, to_text, total
from expressions.nodes import ZERO, neg
from poisson import HamiltonianSystem, PoissonStructure, total_population

from .exceptions import TransferError

logger = logging.getLogger(__name__)


def suffixed(name, a):
    return f"{name}_{a}"


@dataclass(frozen=True, eq=False)
class InteractingSystem:
    populations: Tuple[CompartmentalModel, ...]
    transfers: Mapping[Tuple[int, int], Expr]
    parameters: Mapping[str, float]
    hamiltonian_system: HamiltonianSystem
    name: str = "interacting"

    # negative compartments are flagged and integration continues
    domain_exit = "flag"

    @property
    def size(self):
        return len(self.populations)

    @property
    def compartments_per_population(self):
        return self.populations[0].dim

    @property
    def variables(self):
        return self.hamiltonian_system.variables

    @property
    def structure(self):
        return self.hamiltonian_system.structure

    @property
    def hamiltonian(self):
        return self.hamiltonian_system.hamiltonian

    def population_slice(self, a):
        m = self.compartments_per_population
        return slice((a - 1) * m, a * m)

    def population_variables(self, a):
        return self.variables[self.population_slice(a)]

    def distinguished(self, a):
        return suffixed(self.populations[a - 1].distinguished, a)

    def tau(self, a, b):
        """tau_ab for any ordered pair; the lower triangle is read back negated."""
        if a == b:
            raise TransferError("a population does not transfer to itself")
        if a < b:
            return self.transfers.get((a, b), ZERO)
        return neg(self.transfers.get((b, a), ZERO))

    @cached_property
    def outflow_exprs(self):
        """Per population a: sum over k != a of tau_ak."""
        return tuple(
            total(self.tau(a, k) for k in range(1, self.size + 1) if k != a)
            for a in range(1, self.size + 1)
        )

    @cached_property
    def compiled_outflows(self):
        return compile_exprs(self.outflow_exprs, self.variables)

    def velocity(self, state):
        return self.hamiltonian_system.velocity(state)

    def population_totals(self, states):
        """(N, k) matrix of per-population totals for a (n, k) matrix of states."""
        states = np.asarray(states, dtype=float)
        m = self.compartments_per_population
        return states.reshape(self.size, m, *states.shape[1:]).sum(axis=1)


def _transfer_expr(value, variables):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return const(value)
    try:
        return parse(value, variables=variables)
    except ValueError as exc:
        raise TransferError(f"transfer rate: {exc}") from exc


def couple(models, transfers=None, parameters=None, name="interacting", consistency_seed=0):
    """
    Build the interacting system of `models` (all with the same number of
    compartments) and transfer functions keyed by 1-based pairs (a, b).

    Either orientation may be given; when both are, tau_ba must equal -tau_ab.
    Global `parameters` (such as kappa) stay unsuffixed.
    """
    models = tuple(models)
    if not models:
        raise TransferError("at least one population is required")
    m = models[0].dim
    if any(model.dim != m for model in models):
        raise TransferError(f"populations must share one compartment count, got {[model.dim for model in models]}")
    global_parameters = {k: float(v) for k, v in (parameters or {}).items()}

    variables = []
    combined = dict(global_parameters)
    brackets = {}
    for a, model in enumerate(models, start=1):
        var_map = {c: suffixed(c, a) for c in model.compartments}
        par_map = {p: suffixed(p, a) for p in model.parameters}
        clash = sorted(set(par_map.values()) & set(global_parameters))
        if clash:
            raise TransferError(f"global parameter {clash[0]} collides with a population parameter")
        combined.update({par_map[p]: value for p, value in model.parameters.items()})
        single = canonical_poisson(model)
        for (mu, nu), value in single.structure.entries.items():
            key = (var_map[model.compartments[mu]], var_map[model.compartments[nu]])
            brackets[key] = rename(value, var_map, par_map)
        variables.extend(var_map[c] for c in model.compartments)

    allowed = {
        a: {suffixed(c, a) for c in model.compartments if c != model.distinguished}
        for a, model in enumerate(models, start=1)
    }
    stored = {}
    for (a, b), value in (transfers or {}).items():
        a, b = int(a), int(b)
        if a == b or not (1 <= a <= len(models)) or not (1 <= b <= len(models)):
            raise TransferError(f"transfer ({a}, {b}) must join two different populations out of {len(models)}")
        tau = _transfer_expr(value, variables)
        stray = sorted(free_variables(tau) - allowed[a] - allowed[b])
        if stray:
            raise TransferError(
                f"transfer ({a}, {b}) uses {stray[0]}; only non-distinguished compartments "
                f"of populations {a} and {b} may appear"
            )
        unbound = sorted(free_parameters(tau) - set(combined))
        if unbound:
            raise TransferError(f"transfer ({a}, {b}) uses unbound parameter '{unbound[0]}'")
        key, tau = ((a, b), tau) if a < b else ((b, a), neg(tau))
        if key in stored:
            _require_consistent(key, stored[key], tau, variables, combined, consistency_seed)
            continue
        stored[key] = tau

    for (a, b), tau in stored.items():
        ra, rb = suffixed(models[a - 1].distinguished, a), suffixed(models[b - 1].distinguished, b)
        brackets[(ra, rb)] = neg(tau)

    structure = PoissonStructure.from_brackets(variables, brackets, name=name)
    hs = HamiltonianSystem(structure, total_population(variables), combined, name)
    logger.info("coupled %d populations of %d compartments with %d transfers", len(models), m, len(stored))
    return InteractingSystem(models, MappingProxyType(stored), MappingProxyType(combined), hs, name)


def _require_consistent(key, first, second, variables, parameters, seed):
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.01, 0.99, size=(len(variables), 64))
    values = compile_exprs([first, second], variables)(points, parameters)
    if not np.allclose(values[0], values[1], rtol=1e-12, atol=1e-12):
        a, b = key
        raise TransferError(
            f"transfers ({a}, {b}) and ({b}, {a}) disagree: tau_ba must equal -tau_ab "
            f"({to_text(first)} vs {to_text(second)})"
        )


def couple_from_dict(data):
    """{"populations": [model, ...], "transfers": [{"a": 1, "b": 2, "rate": "..."}], "params": {...}}."""
    models = [model_from_dict(item) for item in data["populations"]]
    transfers = {}
    for item in data.get("transfers", []):
        key = (int(item["a"]), int(item["b"]))
        if key in transfers:
            raise TransferError(f"transfer {key} listed more than once")
        transfers[key] = item["rate"]
    return couple(models, transfers, data.get("params", {}), name=data.get("name", "interacting"))
