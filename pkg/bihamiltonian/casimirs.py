# bihamiltonian/casimirs.py
"""
Casimir functions of the first (canonical) structures, written in S and I
only and anchored so that C(S0, 1 - S0, 0) = 0, plus the catalog of every
known Casimir per structure.
"""
import logging
from typing import NamedTuple

from expressions import Expr, parse
from poisson import PoissonStructure, total_population

from .exceptions import UnknownStructureError
from .pairs import ALIASES, VARIABLES, make_pair

logger = logging.getLogger(__name__)

# {s0} and {i0} are filled with the anchoring initial condition
FIRST_STRUCTURE_CASIMIRS = {
    "sir": "S + I - 1 - alpha/beta*log(S/{s0})",
    "sirs_endemic": "S + I - 1 - alpha/beta*log((beta*S - mu)/(beta*{s0} - mu))",
    "sir_vacc_i": "S + I - 1 - (alpha + v)/beta*log((beta*S + v)/(beta*{s0} + v))",
    "sir_vacc_s": "1 - S - I + alpha/beta*log(S/{s0}) - v/beta*log(I/{i0})",
}

DOMAIN_NOTES = {
    "sir": "S > 0",
    "sirs_endemic": "beta*S - mu > 0",
    "sir_vacc_i": "beta*S + v > 0",
    "sir_vacc_s": "S > 0 and I > 0",
}


class CasimirEntry(NamedTuple):
    structure_id: str
    structure: PoissonStructure
    casimir: Expr
    parameters: dict
    note: str


def casimir_of(structure_id, parameters, s0):
    """
    Casimir of the first structure of `structure_id`, vanishing at
    (S0, 1 - S0, 0). Parameters only serve to reject an unknown kind early;
    the expression keeps them symbolic.
    """
    kind = ALIASES.get(structure_id)
    if kind is None:
        raise UnknownStructureError(structure_id, FIRST_STRUCTURE_CASIMIRS)
    s0 = float(s0)
    if not (0.0 < s0 < 1.0):
        raise ValueError(f"S0 must lie in (0, 1), got {s0}")
    missing = {"alpha", "beta"} - set(parameters)
    if missing:
        raise ValueError(f"parameters {sorted(missing)} are required for the {kind} Casimir")
    text = FIRST_STRUCTURE_CASIMIRS[kind].format(s0=repr(s0), i0=repr(1.0 - s0))
    return parse(text, variables=VARIABLES)


def casimir_catalog(structure_id, parameters, s0):
    """
    Every known Casimir of the two structures of a pair: the anchored
    Casimir of the first structure and H1 = S + I + R for the second.
    """
    kind = ALIASES.get(structure_id)
    if kind is None:
        raise UnknownStructureError(structure_id, FIRST_STRUCTURE_CASIMIRS)
    rate = parameters.get("mu", parameters.get("v"))
    pair = make_pair(kind, parameters["alpha"], parameters["beta"], rate)
    entries = (
        CasimirEntry(f"{kind}:first", pair.first.structure, casimir_of(kind, parameters, s0), pair.parameters,
                     DOMAIN_NOTES[kind]),
        CasimirEntry(f"{kind}:second", pair.second.structure, total_population(VARIABLES), pair.parameters,
                     "everywhere"),
    )
    logger.debug("catalog for %s: %d entries", kind, len(entries))
    return entries
