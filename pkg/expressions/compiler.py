# expressions/compiler.py
"""
Compile expression lists into one vectorised numpy function.

State columns are read as ``x[i]`` and parameters as ``p[j]``, so a call can
take either a single point of shape (n,) or a batch of shape (n, m). Domain
violations raise the same named errors as `evaluate`.
"""
import logging
import math
from functools import singledispatch

import numpy as np

from .exceptions import DomainError, LogDomainError, PowerDomainError, UnboundNameError, ZeroDenominatorError
from .nodes import Add, Const, Div, Exp, Log, Mul, Neg, Param, Pow, Sub, Var, free_parameters, free_variables, to_text

logger = logging.getLogger(__name__)


def _div(numerator, denominator):
    if np.any(denominator == 0.0):
        raise ZeroDenominatorError("division by zero")
    return numerator / denominator


def _log(value):
    if not np.all(np.greater(value, 0.0)):
        raise LogDomainError("log of non-positive value")
    return np.log(value)


def _exp(value):
    with np.errstate(over="raise"):
        try:
            return np.exp(value)
        except FloatingPointError:
            raise DomainError("overflow in exp") from None


def _pow(base, exponent):
    if exponent < 0.0 and np.any(base == 0.0):
        raise ZeroDenominatorError("zero raised to a negative power")
    if not float(exponent).is_integer() and np.any(base < 0.0):
        raise PowerDomainError("negative base with non-integer exponent")
    return np.power(base, exponent)


_NAMESPACE = {"_div": _div, "_log": _log, "_exp": _exp, "_pow": _pow}


@singledispatch
def _source(e, slots):
    raise TypeError(f"cannot compile {type(e).__name__}")


def _literal(value):
    # repr of inf and nan is not a Python literal
    return repr(value) if math.isfinite(value) else f"float('{value!r}')"


@_source.register(Const)
def _(e, slots):
    return _literal(e.value)


@_source.register(Var)
def _(e, slots):
    return f"x[{slots.variables[e.name]}]"


@_source.register(Param)
def _(e, slots):
    return f"p[{slots.parameters[e.name]}]"


@_source.register(Add)
def _(e, slots):
    return f"({_source(e.left, slots)} + {_source(e.right, slots)})"


@_source.register(Sub)
def _(e, slots):
    return f"({_source(e.left, slots)} - {_source(e.right, slots)})"


@_source.register(Mul)
def _(e, slots):
    return f"({_source(e.left, slots)} * {_source(e.right, slots)})"


@_source.register(Div)
def _(e, slots):
    return f"_div({_source(e.left, slots)}, {_source(e.right, slots)})"


@_source.register(Neg)
def _(e, slots):
    return f"(-{_source(e.operand, slots)})"


@_source.register(Pow)
def _(e, slots):
    return f"_pow({_source(e.base, slots)}, {_literal(e.exponent)})"


@_source.register(Log)
def _(e, slots):
    return f"_log({_source(e.operand, slots)})"


@_source.register(Exp)
def _(e, slots):
    return f"_exp({_source(e.operand, slots)})"


class _Slots:
    def __init__(self, variables, parameters):
        self.variables = {name: i for i, name in enumerate(variables)}
        self.parameters = {name: j for j, name in enumerate(parameters)}


class CompiledExprs:
    """A list of expressions evaluated together over one or many points."""

    def __init__(self, exprs, variables, parameter_names=None):
        self.exprs = tuple(exprs)
        self.variables = tuple(variables)
        used_vars = set().union(*(free_variables(e) for e in self.exprs)) if self.exprs else set()
        unknown = sorted(used_vars - set(self.variables))
        if unknown:
            raise UnboundNameError(unknown[0], "variable")
        used_params = set().union(*(free_parameters(e) for e in self.exprs)) if self.exprs else set()
        self.parameter_names = tuple(sorted(used_params | set(parameter_names or ())))
        slots = _Slots(self.variables, self.parameter_names)
        body = ", ".join(_source(e, slots) for e in self.exprs)
        source = f"lambda x, p: ({body},)"
        self._function = eval(compile(source, "<hamepi-expr>", "eval"), dict(_NAMESPACE))
        logger.debug("compiled %d expressions over %d variables", len(self.exprs), len(self.variables))

    def parameter_vector(self, parameters):
        values = []
        for name in self.parameter_names:
            try:
                values.append(float(parameters[name]))
            except KeyError:
                raise UnboundNameError(name, "parameter") from None
        return np.array(values, dtype=float)

    def __call__(self, points, parameters):
        """
        Evaluate at `points` (shape (n,) or (n, m)); returns shape (k,) or (k, m)
        for k expressions.
        """
        x = np.asarray(points, dtype=float)
        p = parameters if isinstance(parameters, np.ndarray) else self.parameter_vector(parameters)
        if not self.exprs:
            return np.zeros((0,) + x.shape[1:])
        values = self._function(x, p)
        if x.ndim == 1:
            return np.array(values, dtype=float)
        shape = x.shape[1:]
        return np.array([np.broadcast_to(value, shape) for value in values], dtype=float)

    def __repr__(self):
        return f"CompiledExprs([{', '.join(to_text(e) for e in self.exprs)}])"


def compile_exprs(exprs, variables, parameter_names=None):
    return CompiledExprs(exprs, variables, parameter_names)
