# expressions/parser.py
"""
Recursive-descent parser for the rate grammar.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') exponent)?
    atom   := number | identifier | identifier '(' expr ')' | '(' expr ')'

`exponent` must fold to a constant real: S^2^3 is S^8 and S^(1/2) is a square root.
"""
import math
import operator
import re

from .exceptions import ExpressionSyntaxError, UnknownFunctionError
from .nodes import Add, Const, Div, Exp, Log, Mul, Neg, Param, Pow, Sub, Var

FUNCTIONS = {"log": Log, "exp": Exp}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            offset = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {text[offset]!r}", offset)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append((kind, match.group(kind), start))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, variables, parameters):
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0
        self.variables = variables
        self.parameters = parameters

    @property
    def current(self):
        return self.tokens[self.index]

    def _advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _accept(self, *ops):
        kind, value, _ = self.current
        if kind == "op" and value in ops:
            return self._advance()
        return None

    def _expect(self, op):
        kind, value, position = self.current
        if kind == "op" and value == op:
            return self._advance()
        found = "end of input" if kind == "end" else repr(value)
        raise ExpressionSyntaxError(f"expected '{op}', found {found}", position)

    def parse(self):
        node = self.expr()
        kind, value, position = self.current
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {value!r}", position)
        return node

    def expr(self):
        node = self.term()
        while True:
            token = self._accept("+", "-")
            if token is None:
                return node
            right = self.term()
            node = Add(node, right) if token[1] == "+" else Sub(node, right)

    def term(self):
        node = self.unary()
        while True:
            token = self._accept("*", "/")
            if token is None:
                return node
            right = self.unary()
            node = Mul(node, right) if token[1] == "*" else Div(node, right)

    def unary(self):
        if self._accept("-"):
            return Neg(self.unary())
        if self._accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        token = self._accept("^", "**")
        if token is None:
            return base
        position = self.current[2]
        exponent = _constant_value(self.unary())
        if exponent is None:
            raise ExpressionSyntaxError("exponent must be a constant real number", position)
        return Pow(base, exponent)

    def atom(self):
        kind, value, position = self.current
        if kind == "number":
            self._advance()
            return Const(float(value))
        if kind == "name":
            self._advance()
            if self._accept("("):
                if value not in FUNCTIONS:
                    raise UnknownFunctionError(value, position)
                argument = self.expr()
                self._expect(")")
                return FUNCTIONS[value](argument)
            return self._leaf(value)
        if kind == "op" and value == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        found = "end of input" if kind == "end" else repr(value)
        raise ExpressionSyntaxError(f"unexpected {found}", position)

    def _leaf(self, name):
        if self.variables is not None:
            return Var(name) if name in self.variables else Param(name)
        if self.parameters is not None:
            return Param(name) if name in self.parameters else Var(name)
        return Var(name) if name[0].isupper() else Param(name)


_FOLDS = {Add: operator.add, Sub: operator.sub, Mul: operator.mul, Div: operator.truediv, Pow: math.pow}


def _constant_value(node):
    """Value of a constant-only subtree, or None if it names anything or has no real value."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg):
        inner = _constant_value(node.operand)
        return None if inner is None else -inner
    if isinstance(node, Pow):
        operands = (_constant_value(node.base), node.exponent)
    elif type(node) in _FOLDS:
        operands = (_constant_value(node.left), _constant_value(node.right))
    else:
        return None
    if None in operands:
        return None
    try:
        return float(_FOLDS[type(node)](*operands))
    except (ArithmeticError, ValueError):
        return None


def parse(text, *, variables=None, parameters=None):
    """
    Parse `text` into an expression tree.

    Identifiers listed in `variables` become state variables and every other
    identifier a parameter; alternatively `parameters` names the parameters
    and everything else is a variable. With neither, names starting with an
    uppercase letter are variables (S, I, R_2) and the rest are parameters
    (beta, alpha, mu).
    """
    if not isinstance(text, str):
        raise ExpressionSyntaxError("expression must be a string", 0)
    variables = frozenset(variables) if variables is not None else None
    parameters = frozenset(parameters) if parameters is not None else None
    return _Parser(text, variables, parameters).parse()
