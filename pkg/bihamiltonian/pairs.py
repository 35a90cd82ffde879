# bihamiltonian/pairs.py
"""
Bi-Hamiltonian pairs of the SIR family.

Every pair has the canonical structure (R distinguished) with H1 = S + I + R
as its first half. The second structures share one sign pattern

    {S, I}2 = g,  {S, R}2 = -g,  {I, R}2 = g

with g = S' restricted to the infection and return terms; H2 carries the
logarithm whose open domain is recorded as a guard.
"""
import logging

import numpy as np

from compartments import builtin, canonical_poisson
from compartments.exceptions import ModelError
from coupling import couple, suffixed
from expressions import Environment, const, evaluate, free_parameters, free_variables, parse, rename, total
from expressions.exceptions import DomainError
from poisson import BiHamiltonianPair, HamiltonianSystem, PoissonStructure, as_columns, check_pair
from poisson.sampling import population_simplex_points, sample_valid, simplex_points

from .exceptions import DomainGuardError, UnknownStructureError

logger = logging.getLogger(__name__)

VARIABLES = ("S", "I", "R")

ALIASES = {
    "sir": "sir",
    "sirs": "sirs_endemic",
    "sirs_endemic": "sirs_endemic",
    "vacc_i": "sir_vacc_i",
    "sir_vacc_i": "sir_vacc_i",
    "vacc_s": "sir_vacc_s",
    "sir_vacc_s": "sir_vacc_s",
}

# kind -> (second-structure g, H2, guards, rate parameter)
SECOND_HALVES = {
    "sir": (
        "-beta*S*I",
        "-R - alpha/beta*log(S)",
        (("S", "S must be positive for log(S) in H2"),),
        None,
    ),
    "sirs_endemic": (
        "-beta*S*I + mu*I",
        "-(R + alpha/beta*log(beta*S - mu))",
        (("beta*S - mu", "beta*S - mu must be positive for log(beta*S - mu) in H2"),),
        "mu",
    ),
    "sir_vacc_i": (
        "-(beta*S*I + v*I)",
        "-(R + (alpha + v)/beta*log(beta*S + v))",
        (("beta*S + v", "beta*S + v must be positive for log(beta*S + v) in H2"),),
        "v",
    ),
    "sir_vacc_s": (
        "-beta*S*I",
        "-(R + alpha/beta*log(S) - v/beta*log(I))",
        (("S", "S must be positive for log(S) in H2"), ("I", "I must be positive for log(I) in H2")),
        "v",
    ),
}


def pair_kind(name):
    try:
        return ALIASES[name]
    except KeyError:
        raise UnknownStructureError(name, ALIASES) from None


def _parameters(kind, alpha, beta, rate=None):
    if not (alpha > 0.0) or not (beta > 0.0):
        raise ModelError(f"alpha and beta must be positive, got alpha={alpha}, beta={beta}")
    parameters = {"alpha": float(alpha), "beta": float(beta)}
    name = SECOND_HALVES[kind][3]
    if name is not None:
        if rate is None or rate < 0.0:
            raise ModelError(f"{name} must be non-negative, got {rate}")
        parameters[name] = float(rate)
    return parameters


def second_half(kind):
    """(brackets, H2, guards) of one population in the variables S, I, R."""
    g_text, h_text, guard_texts, _ = SECOND_HALVES[kind]
    g = parse(g_text, variables=VARIABLES)
    brackets = {("S", "I"): g, ("S", "R"): -g, ("I", "R"): g}
    h2 = parse(h_text, variables=VARIABLES)
    guards = tuple((parse(text, variables=VARIABLES), message) for text, message in guard_texts)
    return brackets, h2, guards


def make_pair(kind, alpha, beta, rate=None):
    kind = pair_kind(kind)
    parameters = _parameters(kind, alpha, beta, rate)
    model = builtin(kind, parameters)
    first = canonical_poisson(model)
    brackets, h2, guards = second_half(kind)
    structure = PoissonStructure.from_brackets(VARIABLES, brackets, name=f"{kind}:second")
    second = HamiltonianSystem(structure, h2, parameters, f"{kind}:second")
    logger.debug("built %s pair with %s", kind, parameters)
    return BiHamiltonianPair(first, second, guards, kind)


def sir_pair(alpha, beta):
    """The classic bi-Hamiltonian pair of the original SIR model."""
    return make_pair("sir", alpha, beta)


def sirs_pair(alpha, beta, mu):
    return make_pair("sirs_endemic", alpha, beta, mu)


def vacc_i_pair(alpha, beta, v):
    return make_pair("sir_vacc_i", alpha, beta, v)


def vacc_s_pair(alpha, beta, v):
    return make_pair("sir_vacc_s", alpha, beta, v)


def _constant_transfer(key, value):
    if isinstance(value, str):
        expr = parse(value)
        if free_variables(expr) or free_parameters(expr):
            raise ModelError(f"transfer {key} must be a constant for the second structure, got '{value}'")
        return evaluate(expr, Environment())
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ModelError(f"transfer {key} must be a constant for the second structure, got {value!r}") from None


def coupled_pair(kind, populations, transfers=None):
    """
    N populations of one kind coupled through constant transfers tau_ab.

    `populations` holds one {"alpha", "beta", rate} dict per population; the
    first structure is the interacting one and the second adds
    {R_a, R_b}2 = tau_ab to the block-diagonal second structures.
    """
    kind = pair_kind(kind)
    rate_name = SECOND_HALVES[kind][3]
    taus = {key: _constant_transfer(key, value) for key, value in (transfers or {}).items()}
    models = []
    for a, params in enumerate(populations, start=1):
        parameters = _parameters(kind, params.get("alpha"), params.get("beta"),
                                 params.get(rate_name) if rate_name else None)
        models.append(builtin(kind, parameters))
    interacting = couple(models, {key: const(value) for key, value in taus.items()}, name=f"{kind}x{len(models)}")

    brackets = {}
    hamiltonians = []
    guards = []
    single_brackets, h2, single_guards = second_half(kind)
    for a, model in enumerate(models, start=1):
        var_map = {c: suffixed(c, a) for c in VARIABLES}
        par_map = {p: suffixed(p, a) for p in model.parameters}
        for (x, y), value in single_brackets.items():
            brackets[(var_map[x], var_map[y])] = rename(value, var_map, par_map)
        hamiltonians.append(rename(h2, var_map, par_map))
        guards.extend(
            (rename(guard, var_map, par_map), f"population {a}: {message}") for guard, message in single_guards
        )
    for (a, b), tau in interacting.transfers.items():
        brackets[(suffixed("R", a), suffixed("R", b))] = tau
    structure = PoissonStructure.from_brackets(interacting.variables, brackets, name=f"{interacting.name}:second")
    second = HamiltonianSystem(structure, total(hamiltonians), interacting.parameters, structure.name)
    return BiHamiltonianPair(interacting.hamiltonian_system, second, tuple(guards), interacting.name)


def guard_violations(pair, samples):
    """Boolean mask (guards x points) of guard values that are not strictly positive."""
    points = as_columns(samples, len(pair.variables))
    if not pair.guards:
        return np.zeros((0, points.shape[1]), dtype=bool)
    return ~(pair.guard_values(points) > 0.0)


def ensure_in_domain(pair, samples):
    """Raise DomainGuardError for the first sample where a guard of H2 fails."""
    points = as_columns(samples, len(pair.variables))
    bad = guard_violations(pair, points)
    if bad.any():
        guard, column = (int(k) for k in np.argwhere(bad)[0])
        raise DomainGuardError(pair.guards[guard][1], points[:, column])
    return points


def domain_points(pair, count, rng):
    """Interior sample points (each population on its unit simplex) where every guard holds."""
    per_population = 3
    populations = len(pair.variables) // per_population

    def sampler(n, generator):
        if populations == 1:
            return simplex_points(per_population, n, generator)
        return population_simplex_points(per_population, populations, n, generator)

    def guards_hold(points):
        return ~guard_violations(pair, points)

    try:
        return sample_valid(sampler, count, rng, checks=(guards_hold,))
    except DomainError as exc:
        raise DomainGuardError(f"{pair.name}: {exc}") from exc


def verify_pair(pair, samples, tol=1e-10):
    """check_pair on samples that are first required to lie inside every guard."""
    points = ensure_in_domain(pair, samples)
    return check_pair(pair, points, tol)
