# compartments/builtins.py
"""Built-in models of the SIR family and the generalized SEIR, as flow arrows."""
import logging

from .exceptions import ModelError
from .models import CompartmentalModel, Flow

logger = logging.getLogger(__name__)

SIR_COMPARTMENTS = ("S", "I", "R")
SEIR_COMPARTMENTS = ("S", "E", "I", "R")


def _require_non_negative(**parameters):
    for name, value in parameters.items():
        if value is None:
            raise ModelError(f"parameter '{name}' is required")
        if float(value) < 0.0:
            raise ModelError(f"parameter '{name}' must be non-negative, got {value}")
    return {name: float(value) for name, value in parameters.items()}


def _model(name, compartments, arrows, parameters, distinguished=None):
    flows = tuple(Flow(source, target, rate) for source, target, rate in arrows)
    return CompartmentalModel(compartments, flows, parameters, distinguished, name)


def sir(alpha, beta, distinguished=None):
    parameters = _require_non_negative(alpha=alpha, beta=beta)
    return _model("sir", SIR_COMPARTMENTS, [
        ("S", "I", "beta*S*I"),
        ("I", "R", "alpha*I"),
    ], parameters, distinguished)


def generalized_sir(alpha, beta_expr="beta", phi1="0", phi2="0", distinguished=None, **parameters):
    """
    S->I at beta(S+I)*S*I and I->R at alpha*I, plus the return arrows R->S (phi1)
    and R->I (phi2). `beta_expr` may be any expression, e.g. phi(S+I)/(S+I);
    every parameter it or the phis use must be passed by keyword.
    """
    parameters = _require_non_negative(alpha=alpha, **parameters)
    return _model("generalized_sir", SIR_COMPARTMENTS, [
        ("S", "I", f"({beta_expr})*S*I"),
        ("I", "R", "alpha*I"),
        ("R", "S", phi1),
        ("R", "I", phi2),
    ], parameters, distinguished)


def sirs_endemic(alpha, beta, mu, distinguished=None):
    """Non-permanent immunity: recovered return to S at mu*I."""
    parameters = _require_non_negative(alpha=alpha, beta=beta, mu=mu)
    arrows = [("S", "I", "beta*S*I"), ("I", "R", "alpha*I")]
    if parameters["mu"] != 0.0:
        arrows += [("I", "R", "mu*I"), ("R", "S", "mu*I")]
    return _model("sirs_endemic", SIR_COMPARTMENTS, arrows, parameters, distinguished)


def sir_vacc_i(alpha, beta, v, distinguished=None):
    parameters = _require_non_negative(alpha=alpha, beta=beta, v=v)
    return _model("sir_vacc_i", SIR_COMPARTMENTS, [
        ("S", "I", "beta*S*I"),
        ("I", "R", "alpha*I"),
        ("S", "R", "v*I"),
    ], parameters, distinguished)


def sir_vacc_s(alpha, beta, v, distinguished=None):
    parameters = _require_non_negative(alpha=alpha, beta=beta, v=v)
    return _model("sir_vacc_s", SIR_COMPARTMENTS, [
        ("S", "I", "beta*S*I"),
        ("I", "R", "alpha*I"),
        ("S", "R", "v*S"),
    ], parameters, distinguished)


def sir_vital(alpha, beta, d_S, d_I, d_R, distinguished=None):
    """
    Deaths d_X*X in every compartment, births d_S*S + d_I*I + d_R*R into S.
    Births balancing deaths in S appear as the self-loop S->S.
    """
    parameters = _require_non_negative(alpha=alpha, beta=beta, d_S=d_S, d_I=d_I, d_R=d_R)
    return _model("sir_vital", SIR_COMPARTMENTS, [
        ("S", "I", "beta*S*I"),
        ("I", "R", "alpha*I"),
        ("I", "S", "d_I*I"),
        ("R", "S", "d_R*R"),
        ("S", "S", "d_S*S"),
    ], parameters, distinguished)


def seir(alpha, beta, epsilon, phi1="0", phi2="0", phi3="0", distinguished=None, **parameters):
    parameters = _require_non_negative(alpha=alpha, beta=beta, epsilon=epsilon, **parameters)
    return _model("seir", SEIR_COMPARTMENTS, [
        ("S", "E", "beta*S*I"),
        ("E", "I", "epsilon*E"),
        ("I", "R", "alpha*I"),
        ("R", "S", phi1),
        ("R", "E", phi2),
        ("R", "I", phi3),
    ], parameters, distinguished)


BUILTINS = {
    "sir": sir,
    "generalized_sir": generalized_sir,
    "sirs_endemic": sirs_endemic,
    "sir_vacc_i": sir_vacc_i,
    "sir_vacc_s": sir_vacc_s,
    "sir_vital": sir_vital,
    "seir": seir,
}


def builtin(name, params=None, distinguished=None):
    """Look up a built-in constructor by name and call it with `params` as keywords."""
    try:
        constructor = BUILTINS[name]
    except KeyError:
        raise ModelError(f"unknown model '{name}'; choose one of {sorted(BUILTINS)}") from None
    try:
        model = constructor(distinguished=distinguished, **(params or {}))
    except TypeError as exc:
        raise ModelError(f"{name}: {exc}") from None
    logger.debug("built %s with %s", name, dict(model.parameters))
    return model


def model_from_dict(data):
    """A model config is either {"builtin": name, "params": {...}} or the flow-arrow schema."""
    if "builtin" in data:
        return builtin(data["builtin"], data.get("params", {}), data.get("distinguished"))
    return CompartmentalModel.from_dict(data, data.get("name", ""))
