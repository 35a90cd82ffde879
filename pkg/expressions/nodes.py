# expressions/nodes.py
"""
Expression trees over named state variables and parameters.

Nodes are immutable dataclasses. The operator overloads and the lower-case
constructors (`add`, `mul`, ...) apply light simplification (0*x -> 0,
x + 0 -> x, 1*x -> x, constant folding); the parser builds nodes directly so a
parsed tree mirrors its text.
"""
import math
from dataclasses import dataclass, field
from functools import singledispatch
from types import MappingProxyType
from typing import Mapping

from .exceptions import (
    DomainError,
    ExpressionError,
    LogDomainError,
    PowerDomainError,
    UnboundNameError,
    ZeroDenominatorError,
)


class Expr:
    precedence = 5

    @property
    def children(self):
        return ()

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __str__(self):
        return to_text(self)


def _coerce(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return Const(float(value))
    raise TypeError(f"cannot use {type(value).__name__} in an expression")


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Param(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class _Binary(Expr):
    left: Expr
    right: Expr

    @property
    def children(self):
        return (self.left, self.right)


class Add(_Binary):
    precedence = 1
    symbol = " + "


class Sub(_Binary):
    precedence = 1
    symbol = " - "


class Mul(_Binary):
    precedence = 2
    symbol = "*"


class Div(_Binary):
    precedence = 2
    symbol = "/"


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    """Power with a constant real exponent; general f^g is not part of the grammar."""
    base: Expr
    exponent: float
    precedence = 4

    def __post_init__(self):
        if not isinstance(self.exponent, (int, float)):
            raise ExpressionError("exponent must be a constant real number")
        object.__setattr__(self, "exponent", float(self.exponent))

    @property
    def children(self):
        return (self.base,)


@dataclass(frozen=True, eq=True)
class _Unary(Expr):
    operand: Expr

    @property
    def children(self):
        return (self.operand,)


class Neg(_Unary):
    precedence = 3


class Log(_Unary):
    function = "log"


class Exp(_Unary):
    function = "exp"


ZERO = Const(0.0)
ONE = Const(1.0)


def const(value):
    return Const(float(value))


def is_zero(e):
    return isinstance(e, Const) and e.value == 0.0


def _is_one(e):
    return isinstance(e, Const) and e.value == 1.0


# --- simplifying constructors ---

def add(a, b):
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def sub(a, b):
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Sub(a, b)


def mul(a, b):
    if is_zero(a) or is_zero(b):
        return ZERO
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def div(a, b):
    if _is_one(b):
        return a
    if is_zero(a) and not is_zero(b):
        return ZERO
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    return Div(a, b)


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(base, exponent):
    if isinstance(exponent, Const):
        exponent = exponent.value
    if isinstance(exponent, Expr):
        raise ExpressionError("exponent must be a constant real number")
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    return Pow(base, exponent)


def log(a):
    return Log(a)


def exp(a):
    return Exp(a)


def total(terms):
    """Left-folded sum of an iterable of expressions."""
    result = ZERO
    for term in terms:
        result = add(result, term)
    return result


# --- environments ---

@dataclass(frozen=True)
class Environment:
    variables: Mapping[str, float] = field(default_factory=dict)
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "variables", MappingProxyType({k: float(v) for k, v in self.variables.items()}))
        object.__setattr__(self, "parameters", MappingProxyType({k: float(v) for k, v in self.parameters.items()}))

    def variable(self, name):
        try:
            return self.variables[name]
        except KeyError:
            raise UnboundNameError(name, "variable") from None

    def parameter(self, name):
        try:
            return self.parameters[name]
        except KeyError:
            raise UnboundNameError(name, "parameter") from None


# --- evaluation ---

@singledispatch
def evaluate(e, env):
    raise ExpressionError(f"cannot evaluate {type(e).__name__}")


@evaluate.register(Const)
def _(e, env):
    return e.value


@evaluate.register(Var)
def _(e, env):
    return env.variable(e.name)


@evaluate.register(Param)
def _(e, env):
    return env.parameter(e.name)


@evaluate.register(Add)
def _(e, env):
    return evaluate(e.left, env) + evaluate(e.right, env)


@evaluate.register(Sub)
def _(e, env):
    return evaluate(e.left, env) - evaluate(e.right, env)


@evaluate.register(Mul)
def _(e, env):
    return evaluate(e.left, env) * evaluate(e.right, env)


@evaluate.register(Div)
def _(e, env):
    numerator = evaluate(e.left, env)
    denominator = evaluate(e.right, env)
    if denominator == 0.0:
        raise ZeroDenominatorError(f"division by zero in '{to_text(e)}'")
    return numerator / denominator


@evaluate.register(Neg)
def _(e, env):
    return -evaluate(e.operand, env)


@evaluate.register(Log)
def _(e, env):
    value = evaluate(e.operand, env)
    if not value > 0.0:
        raise LogDomainError(f"log of non-positive value {value!r} in '{to_text(e)}'")
    return math.log(value)


@evaluate.register(Exp)
def _(e, env):
    try:
        return math.exp(evaluate(e.operand, env))
    except OverflowError:
        raise DomainError(f"overflow in '{to_text(e)}'") from None


@evaluate.register(Pow)
def _(e, env):
    base = evaluate(e.base, env)
    if base == 0.0 and e.exponent < 0.0:
        raise ZeroDenominatorError(f"zero raised to a negative power in '{to_text(e)}'")
    if base < 0.0 and not e.exponent.is_integer():
        raise PowerDomainError(f"negative base with non-integer exponent in '{to_text(e)}'")
    try:
        return base ** e.exponent
    except OverflowError:
        raise DomainError(f"overflow in '{to_text(e)}'") from None


# --- symbolic differentiation ---

@singledispatch
def diff(e, var):
    raise ExpressionError(f"cannot differentiate {type(e).__name__}")


@diff.register(Const)
@diff.register(Param)
def _(e, var):
    return ZERO


@diff.register(Var)
def _(e, var):
    return ONE if e.name == var else ZERO


@diff.register(Add)
def _(e, var):
    return add(diff(e.left, var), diff(e.right, var))


@diff.register(Sub)
def _(e, var):
    return sub(diff(e.left, var), diff(e.right, var))


@diff.register(Mul)
def _(e, var):
    return add(mul(diff(e.left, var), e.right), mul(e.left, diff(e.right, var)))


@diff.register(Div)
def _(e, var):
    d_num = diff(e.left, var)
    d_den = diff(e.right, var)
    if is_zero(d_den):
        return div(d_num, e.right)
    return div(sub(mul(d_num, e.right), mul(e.left, d_den)), power(e.right, 2.0))


@diff.register(Neg)
def _(e, var):
    return neg(diff(e.operand, var))


@diff.register(Pow)
def _(e, var):
    d_base = diff(e.base, var)
    return mul(mul(Const(e.exponent), power(e.base, e.exponent - 1.0)), d_base)


@diff.register(Log)
def _(e, var):
    return div(diff(e.operand, var), e.operand)


@diff.register(Exp)
def _(e, var):
    return mul(e, diff(e.operand, var))


# --- printing ---

def _format_number(value):
    text = repr(float(value))
    return f"({text})" if value < 0 or text.startswith("-") else text


@singledispatch
def to_text(e):
    raise ExpressionError(f"cannot print {type(e).__name__}")


@to_text.register(Const)
def _(e):
    return _format_number(e.value)


@to_text.register(Var)
@to_text.register(Param)
def _(e):
    return e.name


def _wrap(child, condition):
    text = to_text(child)
    return f"({text})" if condition else text


@to_text.register(_Binary)
def _(e):
    # equal precedence on the right keeps its parentheses so reparsing rebuilds the same tree
    left = _wrap(e.left, e.left.precedence < e.precedence)
    right = _wrap(e.right, e.right.precedence <= e.precedence)
    return f"{left}{e.symbol}{right}"


@to_text.register(Neg)
def _(e):
    return "-" + _wrap(e.operand, e.operand.precedence <= Neg.precedence)


@to_text.register(Pow)
def _(e):
    base = _wrap(e.base, e.base.precedence <= Pow.precedence)
    return f"{base}^{_format_number(e.exponent)}"


@to_text.register(Log)
@to_text.register(Exp)
def _(e):
    return f"{e.function}({to_text(e.operand)})"


# --- traversal ---

def walk(e):
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(node.children)


def free_variables(e):
    return frozenset(node.name for node in walk(e) if isinstance(node, Var))


def free_parameters(e):
    return frozenset(node.name for node in walk(e) if isinstance(node, Param))


@singledispatch
def substitute(e, mapping):
    """Replace variables named in `mapping` by expressions, simplifying on the way up."""
    return e


@substitute.register(Var)
def _(e, mapping):
    return mapping.get(e.name, e)


@substitute.register(Add)
def _(e, mapping):
    return add(substitute(e.left, mapping), substitute(e.right, mapping))


@substitute.register(Sub)
def _(e, mapping):
    return sub(substitute(e.left, mapping), substitute(e.right, mapping))


@substitute.register(Mul)
def _(e, mapping):
    return mul(substitute(e.left, mapping), substitute(e.right, mapping))


@substitute.register(Div)
def _(e, mapping):
    return div(substitute(e.left, mapping), substitute(e.right, mapping))


@substitute.register(Neg)
def _(e, mapping):
    return neg(substitute(e.operand, mapping))


@substitute.register(Pow)
def _(e, mapping):
    return power(substitute(e.base, mapping), e.exponent)


@substitute.register(Log)
@substitute.register(Exp)
def _(e, mapping):
    return type(e)(substitute(e.operand, mapping))


def rename(e, variables=None, parameters=None):
    """Rename leaves; `variables`/`parameters` map old names to new names."""
    variables = variables or {}
    parameters = parameters or {}
    return _rename(e, variables, parameters)


@singledispatch
def _rename(e, variables, parameters):
    return e


@_rename.register(Var)
def _(e, variables, parameters):
    return Var(variables.get(e.name, e.name))


@_rename.register(Param)
def _(e, variables, parameters):
    return Param(parameters.get(e.name, e.name))


@_rename.register(_Binary)
def _(e, variables, parameters):
    return type(e)(_rename(e.left, variables, parameters), _rename(e.right, variables, parameters))


@_rename.register(_Unary)
def _(e, variables, parameters):
    return type(e)(_rename(e.operand, variables, parameters))


@_rename.register(Pow)
def _(e, variables, parameters):
    return Pow(_rename(e.base, variables, parameters), e.exponent)
