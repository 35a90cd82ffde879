import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from .compiler import compile_exprs
from .exceptions import (
    ExpressionSyntaxError,
    LogDomainError,
    PowerDomainError,
    UnboundNameError,
    UnknownFunctionError,
    ZeroDenominatorError,
)
from .nodes import (
    Add, Const, Div, Environment, Exp, Log, Mul, Neg, Param, Pow, Sub, Var,
    diff, evaluate, free_variables, is_zero, rename, substitute, to_text, walk,
)
from .parser import parse

SIR_VARS = ("S", "I", "R")


def env(variables=None, parameters=None):
    return Environment(variables or {}, parameters or {})


class ParseTests(SimpleTestCase):
    def test_product_maps_to_left_nested_tree(self):
        e = parse("beta*S*I", variables=SIR_VARS)
        self.assertEqual(e, Mul(Mul(Param("beta"), Var("S")), Var("I")))

    def test_function_call(self):
        self.assertEqual(parse("log(S)", variables=SIR_VARS), Log(Var("S")))

    def test_unclosed_parenthesis_reports_offset(self):
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse("beta*(")
        self.assertEqual(ctx.exception.position, 6)

    def test_unknown_function(self):
        with self.assertRaises(UnknownFunctionError) as ctx:
            parse("sin(S)")
        self.assertEqual(ctx.exception.name, "sin")
        self.assertEqual(ctx.exception.position, 0)

    def test_bad_character(self):
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse("S $ I")
        self.assertEqual(ctx.exception.position, 2)

    def test_non_constant_exponent_rejected(self):
        with self.assertRaises(ExpressionSyntaxError):
            parse("S^I")

    def test_signed_exponent(self):
        e = parse("S^-2", variables=SIR_VARS)
        self.assertEqual(e, Pow(Var("S"), -2.0))

    def test_precedence(self):
        e = parse("a - b - c*d^2", variables=("a", "b", "c", "d"))
        self.assertEqual(e, Sub(Sub(Var("a"), Var("b")), Mul(Var("c"), Pow(Var("d"), 2.0))))

    def test_unary_minus_binds_looser_than_power(self):
        self.assertEqual(evaluate(parse("-2^2"), env()), -4.0)

    def test_parameters_keyword(self):
        e = parse("k*x", parameters=("k",))
        self.assertEqual(e, Mul(Param("k"), Var("x")))

    def test_default_names_follow_case(self):
        self.assertEqual(parse("beta*S*I"), Mul(Mul(Param("beta"), Var("S")), Var("I")))
        self.assertEqual(parse("kappa*S_1"), Mul(Param("kappa"), Var("S_1")))

    def test_constant_exponents_fold(self):
        self.assertEqual(parse("S^2^3", variables=SIR_VARS), Pow(Var("S"), 8.0))
        self.assertEqual(parse("S^(1/2)", variables=SIR_VARS), Pow(Var("S"), 0.5))
        self.assertEqual(parse("S**-(2*3 - 4)", variables=SIR_VARS), Pow(Var("S"), -2.0))
        with self.assertRaises(ExpressionSyntaxError):
            parse("S^(-8)^(1/3)")
        with self.assertRaises(ExpressionSyntaxError):
            parse("S^(1/0)")


class EvaluateTests(SimpleTestCase):
    def test_product(self):
        e = parse("beta*S*I", variables=SIR_VARS)
        value = evaluate(e, env({"S": 0.8, "I": 0.1}, {"beta": 1.0}))
        self.assertAlmostEqual(value, 0.08, places=15)

    def test_log_identity(self):
        self.assertEqual(evaluate(parse("log(S)"), env({"S": 1.0})), 0.0)

    def test_division_by_zero(self):
        with self.assertRaises(ZeroDenominatorError):
            evaluate(parse("S/I"), env({"S": 0.5, "I": 0.0}))

    def test_log_domain(self):
        with self.assertRaises(LogDomainError):
            evaluate(parse("log(S - 1)"), env({"S": 0.5}))

    def test_power_domain(self):
        with self.assertRaises(PowerDomainError):
            evaluate(parse("S^0.5"), env({"S": -1.0}))

    def test_unbound_names_are_errors(self):
        with self.assertRaises(UnboundNameError):
            evaluate(parse("S*I"), env({"S": 1.0}))
        with self.assertRaises(UnboundNameError):
            evaluate(parse("beta*S", variables=("S",)), env({"S": 1.0}))

    def test_environment_is_read_only(self):
        e = env({"S": 1.0})
        with self.assertRaises(TypeError):
            e.variables["S"] = 2.0


class DiffTests(SimpleTestCase):
    def test_product_rule(self):
        d = diff(parse("beta*S*I", variables=SIR_VARS), "S")
        self.assertAlmostEqual(evaluate(d, env({"S": 0.8, "I": 0.1}, {"beta": 1.0})), 0.1, places=15)

    def test_log(self):
        d = diff(parse("log(S)"), "S")
        self.assertEqual(evaluate(d, env({"S": 2.0})), 0.5)

    def test_parameter_differentiates_to_zero(self):
        d = diff(parse("alpha", variables=SIR_VARS), "S")
        self.assertTrue(is_zero(d))

    def test_quotient_and_chain_rule(self):
        e = parse("exp(S*I)/(1 + S^2)", variables=SIR_VARS)
        d = diff(e, "S")
        s, i = 0.3, 0.7
        expected = (i * math.exp(s * i) * (1 + s * s) - math.exp(s * i) * 2 * s) / (1 + s * s) ** 2
        self.assertAlmostEqual(evaluate(d, env({"S": s, "I": i})), expected, places=14)

    def test_closure_under_grammar(self):
        e = parse("log(beta*S - mu)*exp(-I)^3", variables=SIR_VARS)
        d = diff(e, "S")
        for node in walk(d):
            self.assertIsInstance(node, (Add, Sub, Mul, Div, Neg, Const, Var, Param, Pow, Log, Exp))
        # printed derivative reparses to the same value
        point = env({"S": 0.6, "I": 0.2}, {"beta": 1.0, "mu": 0.1})
        self.assertEqual(evaluate(parse(to_text(d), variables=SIR_VARS), point), evaluate(d, point))


def _random_positive(rng, depth):
    """Random subtree bounded away from zero on the sampling box."""
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.5:
            return Var(str(rng.choice(["x", "y"])))
        return Const(float(rng.uniform(0.5, 2.0)))
    choice = rng.integers(3)
    if choice == 0:
        return Add(_random_positive(rng, depth - 1), _random_positive(rng, depth - 1))
    if choice == 1:
        return Mul(_random_positive(rng, depth - 1), _random_positive(rng, depth - 1))
    return Exp(Var(str(rng.choice(["x", "y"]))))


def _random_tree(rng, depth):
    if depth == 0 or rng.random() < 0.2:
        pick = rng.integers(3)
        if pick == 0:
            return Var(str(rng.choice(["x", "y"])))
        if pick == 1:
            return Param("k")
        return Const(float(rng.uniform(-2.0, 2.0)))
    choice = rng.integers(8)
    left, right = _random_tree(rng, depth - 1), _random_tree(rng, depth - 1)
    if choice == 0:
        return Add(left, right)
    if choice == 1:
        return Sub(left, right)
    if choice == 2:
        return Mul(left, right)
    if choice == 3:
        return Div(left, _random_positive(rng, depth - 1))
    if choice == 4:
        return Pow(_random_positive(rng, depth - 1), float(rng.choice([2.0, 3.0, 0.5, -1.0])))
    if choice == 5:
        return Neg(left)
    if choice == 6:
        return Log(_random_positive(rng, depth - 1))
    return Exp(Mul(Const(0.3), Var("x")))


class DiffAgainstFiniteDifferenceTests(SimpleTestCase):
    def test_random_trees(self):
        rng = np.random.default_rng(0)
        checked = 0
        for _ in range(50):
            e = _random_tree(rng, 3)
            var = str(rng.choice(["x", "y"]))
            d = diff(e, var)
            for _ in range(20):
                values = {"x": float(rng.uniform(0.5, 2.0)), "y": float(rng.uniform(0.5, 2.0))}
                point = env(values, {"k": float(rng.uniform(0.5, 2.0))})
                h = 1e-6 * max(1.0, abs(values[var]))
                up = env({**values, var: values[var] + h}, point.parameters)
                down = env({**values, var: values[var] - h}, point.parameters)
                numeric = (evaluate(e, up) - evaluate(e, down)) / (2 * h)
                exact = evaluate(d, point)
                self.assertLessEqual(abs(exact - numeric), 1e-5 * (1 + abs(exact)), to_text(e))
                checked += 1
        self.assertEqual(checked, 1000)


_names = st.sampled_from(["S", "I", "R"])
_leaves = st.one_of(
    _names.map(Var),
    st.sampled_from(["beta", "alpha"]).map(Param),
    st.floats(min_value=-3.0, max_value=3.0, allow_nan=False).map(Const),
)
_trees = st.recursive(
    _leaves,
    lambda children: st.one_of(
        st.tuples(children, children).map(lambda p: Add(*p)),
        st.tuples(children, children).map(lambda p: Sub(*p)),
        st.tuples(children, children).map(lambda p: Mul(*p)),
        st.tuples(children, children).map(lambda p: Div(*p)),
        children.map(Neg),
        children.map(Log),
        children.map(lambda c: Pow(c, 2.0)),
    ),
    max_leaves=12,
)


class RoundTripTests(SimpleTestCase):
    @settings(max_examples=200, deadline=None)
    @given(tree=_trees, s=st.floats(0.1, 1.0), i=st.floats(0.1, 1.0), r=st.floats(0.1, 1.0))
    def test_print_then_parse_evaluates_identically(self, tree, s, i, r):
        point = env({"S": s, "I": i, "R": r}, {"beta": 1.0, "alpha": 0.1})
        reparsed = parse(to_text(tree), variables=SIR_VARS)
        try:
            expected = evaluate(tree, point)
        except (ZeroDenominatorError, LogDomainError, PowerDomainError):
            with self.assertRaises((ZeroDenominatorError, LogDomainError, PowerDomainError)):
                evaluate(reparsed, point)
            return
        actual = evaluate(reparsed, point)
        if math.isnan(expected):
            self.assertTrue(math.isnan(actual))
        else:
            self.assertEqual(actual, expected)


class TraversalTests(SimpleTestCase):
    def test_substitute_eliminates_variable(self):
        e = parse("alpha*I - d_R*R", variables=SIR_VARS)
        one_minus = parse("1 - S - I", variables=SIR_VARS)
        out = substitute(e, {"R": one_minus})
        self.assertEqual(free_variables(out), {"S", "I"})
        point = env({"S": 0.5, "I": 0.2}, {"alpha": 0.1, "d_R": 0.01})
        self.assertAlmostEqual(evaluate(out, point), 0.1 * 0.2 - 0.01 * 0.3, places=15)

    def test_rename_suffixes_leaves(self):
        e = parse("beta*S*I", variables=SIR_VARS)
        out = rename(e, {"S": "S_1", "I": "I_1"}, {"beta": "beta_1"})
        self.assertEqual(to_text(out), "beta_1*S_1*I_1")


class CompiledTests(SimpleTestCase):
    def test_matches_tree_evaluation_on_batches(self):
        exprs = [parse(t, variables=SIR_VARS) for t in ("beta*S*I", "log(S)/I", "-(alpha*I)", "2")]
        compiled = compile_exprs(exprs, SIR_VARS)
        rng = np.random.default_rng(1)
        points = rng.uniform(0.1, 0.9, size=(3, 50))
        values = compiled(points, {"beta": 1.0, "alpha": 0.1})
        self.assertEqual(values.shape, (4, 50))
        for j in range(50):
            point = env(dict(zip(SIR_VARS, points[:, j])), {"beta": 1.0, "alpha": 0.1})
            for k, e in enumerate(exprs):
                self.assertAlmostEqual(values[k, j], evaluate(e, point), places=14)

    def test_single_point(self):
        compiled = compile_exprs([parse("S + I")], ("S", "I"))
        np.testing.assert_allclose(compiled(np.array([0.25, 0.5]), {}), [0.75])

    def test_domain_errors_are_named(self):
        compiled = compile_exprs([parse("log(S)")], ("S",))
        with self.assertRaises(LogDomainError):
            compiled(np.array([[0.5, 0.0]]), {})
        compiled = compile_exprs([parse("1/S")], ("S",))
        with self.assertRaises(ZeroDenominatorError):
            compiled(np.array([0.0]), {})

    def test_non_finite_constants(self):
        compiled = compile_exprs([parse("1e400*S"), Const(float("-inf")), Pow(Var("S"), float("inf"))], ("S",))
        np.testing.assert_array_equal(compiled(np.array([0.5]), {}), [np.inf, -np.inf, 0.0])
        nan = compile_exprs([Const(float("nan"))], ("S",))
        self.assertTrue(np.isnan(nan(np.array([0.5]), {})[0]))

    def test_missing_parameter(self):
        compiled = compile_exprs([parse("beta*S", variables=("S",))], ("S",))
        with self.assertRaises(UnboundNameError):
            compiled(np.array([0.5]), {})
