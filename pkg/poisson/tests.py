import numpy as np
from django.test import SimpleTestCase

from expressions import Var, compile_exprs, parse
from expressions.exceptions import LogDomainError

from .checks import (
    bracket, check_compatibility, hamiltonian_vector_field, hypersurface_gap, is_casimir, jacobi_report,
    jacobi_residual, pencil,
)
from .exceptions import DimensionMismatchError, PoissonError
from .sampling import box_points, sample_valid, simplex_points
from .structures import HamiltonianSystem, PoissonStructure, constant_structure, total_population

SIR = ("S", "I", "R")
PARAMS = {"beta": 1.0, "alpha": 0.1}
POINT = np.array([0.8, 0.1, 0.1])


def sir_first():
    return PoissonStructure.from_brackets(SIR, {
        ("S", "I"): "0",
        ("S", "R"): "-beta*S*I",
        ("I", "R"): "-alpha*I + beta*S*I",
    }, name="sir")


def sir_second():
    return PoissonStructure.from_brackets(SIR, {
        ("S", "I"): "-beta*S*I",
        ("S", "R"): "beta*S*I",
        ("I", "R"): "-beta*S*I",
    }, name="sir-second")


def corrupted():
    return PoissonStructure.from_brackets(SIR, {
        ("S", "I"): "S",
        ("S", "R"): "-beta*S*I",
        ("I", "R"): "-alpha*I + beta*S*I",
    }, name="corrupted")


def at(expr, point, parameters=PARAMS):
    return float(compile_exprs([expr], SIR)(np.asarray(point, dtype=float), parameters)[0])


class StructureTests(SimpleTestCase):
    def test_skew_symmetry_is_structural(self):
        ps = sir_first()
        self.assertEqual(ps.entry(2, 0), -ps.entry(0, 2))
        self.assertEqual(at(ps.entry(1, 1), POINT), 0.0)

    def test_reversed_orientation_is_negated(self):
        ps = PoissonStructure.from_brackets(SIR, {("R", "S"): "beta*S*I"})
        self.assertAlmostEqual(at(ps.fundamental("S", "R"), POINT), -0.08, places=15)

    def test_diagonal_cannot_be_set(self):
        with self.assertRaises(PoissonError):
            PoissonStructure.from_brackets(SIR, {("S", "S"): "1"})

    def test_serialises_under_poisson_key(self):
        data = sir_first().to_dict()
        self.assertEqual(data["dim"], 3)
        self.assertEqual(data["vars"], ["S", "I", "R"])
        self.assertEqual(set(data["brackets"]), {"S,R", "I,R"})
        again = PoissonStructure.from_dict(data)
        for key, text in data["brackets"].items():
            a, b = key.split(",")
            self.assertEqual(again.fundamental(a, b), parse(text, variables=SIR))


class BracketTests(SimpleTestCase):
    def test_sir_bracket_s_r(self):
        value = at(bracket(sir_first(), Var("S"), Var("R")), POINT)
        self.assertAlmostEqual(value, -0.08, places=15)

    def test_sir_bracket_s_i_vanishes(self):
        rng = np.random.default_rng(3)
        points = simplex_points(3, 50, rng)
        values = compile_exprs([bracket(sir_first(), Var("S"), Var("I"))], SIR)(points, PARAMS)
        self.assertTrue(np.all(values == 0.0))

    def test_bilinearity(self):
        ps = sir_first()
        S, I, R = (Var(v) for v in SIR)
        lhs = bracket(ps, S + I, R)
        rhs = bracket(ps, S, R) + bracket(ps, I, R)
        points = box_points(3, 100, np.random.default_rng(4))
        values = compile_exprs([lhs, rhs], SIR)(points, PARAMS)
        np.testing.assert_allclose(values[0], values[1], atol=1e-15)

    def test_skew_and_leibniz_as_function_identities(self):
        ps = corrupted()
        f = parse("S*I + log(R)", variables=SIR)
        g = parse("exp(S) - I^2", variables=SIR)
        h = parse("R/(1 + S)", variables=SIR)
        exprs = [
            bracket(ps, f, g) + bracket(ps, g, f),
            bracket(ps, f * g, h) - f * bracket(ps, g, h) - g * bracket(ps, f, h),
        ]
        points = box_points(3, 100, np.random.default_rng(5))
        skew, leibniz = compile_exprs(exprs, SIR)(points, PARAMS)
        self.assertLessEqual(np.max(np.abs(skew)), 1e-12)
        self.assertLessEqual(np.max(np.abs(leibniz)), 1e-10)


class VectorFieldTests(SimpleTestCase):
    def test_sir_velocity(self):
        hs = HamiltonianSystem(sir_first(), total_population(SIR), PARAMS)
        np.testing.assert_allclose(hamiltonian_vector_field(hs, POINT), [-0.08, 0.07, 0.01], atol=1e-15)

    def test_sirs_first_structure_velocity(self):
        ps = PoissonStructure.from_brackets(SIR, {
            ("S", "R"): "-beta*S*I + mu*I",
            ("I", "R"): "beta*S*I - alpha*I - mu*I",
        })
        hs = HamiltonianSystem(ps, total_population(SIR), {**PARAMS, "mu": 0.1})
        np.testing.assert_allclose(hs.velocity(POINT), [-0.07, 0.06, 0.01], atol=1e-15)

    def test_constant_hamiltonian_gives_zero_field(self):
        hs = HamiltonianSystem(corrupted(), parse("2.5"), PARAMS)
        np.testing.assert_array_equal(hs.velocity(POINT), [0.0, 0.0, 0.0])

    def test_evaluation_errors_propagate(self):
        ps = PoissonStructure.from_brackets(SIR, {("S", "R"): "log(S - 0.9)"})
        hs = HamiltonianSystem(ps, total_population(SIR), {})
        with self.assertRaises(LogDomainError):
            hs.velocity(POINT)


class JacobiTests(SimpleTestCase):
    def test_sir_structure_on_simplex(self):
        points = simplex_points(3, 1000, np.random.default_rng(0))
        result = jacobi_report(sir_first(), points, PARAMS, tol=1e-12)
        self.assertTrue(result.ok, result)
        self.assertEqual(result.points, 1000)

    def test_constant_structure_is_exact(self):
        ps = constant_structure(("a", "b", "c", "d"), {("a", "b"): 1.5, ("a", "d"): -2.0, ("c", "d"): 0.25})
        self.assertEqual(jacobi_residual(ps, [0.3, 0.2, 0.1, 0.4]), 0.0)

    def test_corrupted_structure_fails(self):
        self.assertGreater(jacobi_residual(corrupted(), POINT, PARAMS), 0.01)

    def test_matches_brute_force_cyclic_sum(self):
        ps = corrupted()
        entries = compile_exprs([ps.entry(m, n) for m in range(3) for n in range(3)], SIR)

        def pi(x):
            return entries(x, PARAMS).reshape(3, 3)

        def d_pi(x, k):
            h = 1e-6
            up, down = x.copy(), x.copy()
            up[k] += h
            down[k] -= h
            return (pi(up) - pi(down)) / (2 * h)

        matrix = pi(POINT)
        grads = [d_pi(POINT, k) for k in range(3)]

        def inner(a, b, c):
            return sum(grads[k][a, b] * matrix[k, c] for k in range(3))

        cyclic = inner(0, 1, 2) + inner(1, 2, 0) + inner(2, 0, 1)
        self.assertAlmostEqual(jacobi_residual(ps, POINT, PARAMS), abs(cyclic), places=8)
        self.assertAlmostEqual(abs(cyclic), 0.56, places=8)

    def test_worst_point_is_reported(self):
        points = box_points(3, 20, np.random.default_rng(2))
        result = jacobi_report(corrupted(), points, PARAMS)
        self.assertFalse(result.ok)
        self.assertEqual(len(result.worst), 3)
        self.assertAlmostEqual(jacobi_residual(corrupted(), result.worst, PARAMS), result.value, places=14)


class CasimirTests(SimpleTestCase):
    def setUp(self):
        self.points = simplex_points(3, 500, np.random.default_rng(7))

    def test_total_population_is_casimir_of_second_structure(self):
        result = is_casimir(sir_second(), total_population(SIR), self.points, PARAMS)
        self.assertTrue(result.ok)
        self.assertLessEqual(result.value, 1e-10)

    def test_log_casimir_of_first_structure(self):
        c = parse("S + I - 1 - (alpha/beta)*log(S)", variables=SIR)
        self.assertTrue(is_casimir(sir_first(), c, self.points, PARAMS).ok)

    def test_coordinate_is_not_casimir(self):
        result = is_casimir(sir_first(), Var("S"), POINT, PARAMS)
        self.assertFalse(result.ok)
        self.assertGreaterEqual(result.value, 0.08 - 1e-15)


class PencilTests(SimpleTestCase):
    def test_endpoints(self):
        first, second = sir_first(), sir_second()
        self.assertEqual(pencil(first, second, 0.0).to_dict(), first.to_dict())
        self.assertEqual(pencil(first, second, 1.0).to_dict(), second.to_dict())

    def test_classic_pencil_midpoint(self):
        points = box_points(3, 100, np.random.default_rng(8))
        result = jacobi_report(pencil(sir_first(), sir_second(), 0.5), points, PARAMS, tol=1e-12)
        self.assertTrue(result.ok, result)

    def test_dimension_mismatch(self):
        other = PoissonStructure.from_brackets(("S", "I"), {("S", "I"): "S"})
        with self.assertRaises(DimensionMismatchError):
            pencil(sir_first(), other, 0.5)


class CompatibilityTests(SimpleTestCase):
    def setUp(self):
        self.points = box_points(3, 200, np.random.default_rng(9))

    def test_structure_with_itself(self):
        self.assertTrue(check_compatibility(sir_first(), sir_first(), self.points, PARAMS).ok)

    def test_classic_pair(self):
        self.assertTrue(check_compatibility(sir_first(), sir_second(), self.points, PARAMS).ok)

    def test_corrupted_partner(self):
        self.assertFalse(check_compatibility(sir_first(), corrupted(), self.points, PARAMS).ok)


class HypersurfaceTests(SimpleTestCase):
    def test_second_hamiltonian_matches_casimir_on_unit_sum(self):
        h2 = parse("-R - (alpha/beta)*log(S)", variables=SIR)
        c1 = parse("S + I - 1 - (alpha/beta)*log(S)", variables=SIR)
        points = simplex_points(3, 300, np.random.default_rng(10))
        self.assertTrue(hypersurface_gap(h2, c1, SIR, points, PARAMS, tol=1e-12).ok)

    def test_off_hypersurface_gap_is_visible(self):
        h2 = parse("-R", variables=SIR)
        c1 = parse("S + I - 1", variables=SIR)
        self.assertFalse(hypersurface_gap(h2, c1, SIR, [0.5, 0.5, 0.5]).ok)


class SamplingTests(SimpleTestCase):
    def test_simplex_points_sum_to_one(self):
        points = simplex_points(4, 100, np.random.default_rng(11))
        np.testing.assert_allclose(points.sum(axis=0), 1.0, atol=1e-14)
        self.assertTrue(np.all(points > 0.01))

    def test_resampling_respects_guards(self):
        guard = compile_exprs([parse("S - 0.5")], ("S", "I"))
        points = sample_valid(
            lambda count, rng: box_points(2, count, rng), 64, np.random.default_rng(12),
            checks=[lambda pts: guard(pts, {}) > 0.0],
        )
        self.assertEqual(points.shape, (2, 64))
        self.assertTrue(np.all(points[0] > 0.5))

    def test_domain_errors_trigger_resampling(self):
        log_i = compile_exprs([parse("log(I - 0.3)")], ("S", "I"))
        points = sample_valid(
            lambda count, rng: box_points(2, count, rng), 32, np.random.default_rng(13),
            checks=[lambda pts: log_i(pts, {})],
        )
        self.assertTrue(np.all(points[1] > 0.3))
