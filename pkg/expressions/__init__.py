from .nodes import (
    Add, Const, Div, Environment, Exp, Expr, Log, Mul, Neg, Param, Pow, Sub, Var,
    const, diff, evaluate, free_parameters, free_variables, is_zero, rename, substitute, to_text, total,
)
from .parser import parse
from .compiler import CompiledExprs, compile_exprs

__all__ = [
    "Add", "Const", "Div", "Environment", "Exp", "Expr", "Log", "Mul", "Neg", "Param", "Pow", "Sub", "Var",
    "CompiledExprs", "compile_exprs", "const", "diff", "evaluate", "free_parameters", "free_variables",
    "is_zero", "parse", "rename", "substitute", "to_text", "total",
]
