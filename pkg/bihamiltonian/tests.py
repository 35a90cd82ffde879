import numpy as np
from django.test import SimpleTestCase

from compartments.exceptions import ModelError
from expressions import compile_exprs, parse
from poisson import hypersurface_gap, is_casimir, jacobi_report, pencil, total_population, vector_field_mismatch
from poisson.sampling import simplex_points

from .casimirs import casimir_catalog, casimir_of
from .exceptions import DomainGuardError, UnknownStructureError
from .pairs import (
    coupled_pair, domain_points, ensure_in_domain, make_pair, pair_kind, sir_pair, sirs_pair, vacc_i_pair,
    vacc_s_pair, verify_pair,
)

SIR = ("S", "I", "R")
POINT = np.array([0.8, 0.1, 0.1])


def every_pair():
    return [
        sir_pair(0.1, 1.0),
        sirs_pair(0.1, 1.0, 0.1),
        vacc_i_pair(0.1, 1.0, 0.1),
        vacc_s_pair(0.1, 1.0, 0.1),
    ]


def brackets_at(structure, parameters, point=POINT):
    pairs = [("S", "I"), ("S", "R"), ("I", "R")]
    exprs = [structure.fundamental(a, b) for a, b in pairs]
    return compile_exprs(exprs, SIR)(point, parameters)


class PairTests(SimpleTestCase):
    def test_sirs_vector_fields_agree_at_reference_point(self):
        pair = sirs_pair(0.1, 1.0, 0.1)
        first = pair.first.velocity(POINT)
        second = pair.second.velocity(POINT)
        np.testing.assert_allclose(first, [-0.07, 0.06, 0.01], atol=1e-15)
        self.assertLessEqual(np.max(np.abs(first - second)), 1e-12)

    def test_vaccination_vector_fields_agree_at_reference_point(self):
        for pair in (vacc_i_pair(0.1, 1.0, 0.1), vacc_s_pair(0.1, 1.0, 0.1)):
            gap = np.abs(pair.first.velocity(POINT) - pair.second.velocity(POINT))
            self.assertLessEqual(np.max(gap), 1e-12, pair.name)

    def test_every_pair_passes_all_checks(self):
        rng = np.random.default_rng(20)
        for pair in every_pair():
            points = domain_points(pair, 1000, rng)
            report = verify_pair(pair, points, tol=1e-10)
            for check, result in report.items():
                self.assertTrue(result.ok, f"{pair.name} {check}: {result.value}")

    def test_sirs_summed_structure(self):
        pair = sirs_pair(0.1, 1.0, 0.1)
        np.testing.assert_allclose(brackets_at(pair.summed_structure, pair.parameters), [-0.07, 0.0, -0.01], atol=1e-15)

    def test_sirs_without_return_is_classic_pair(self):
        endemic = sirs_pair(0.1, 1.0, 0.0)
        classic = sir_pair(0.1, 1.0)
        points = simplex_points(3, 50, np.random.default_rng(21))
        for structure in ("first", "second"):
            a = getattr(endemic, structure)
            b = getattr(classic, structure)
            np.testing.assert_allclose(
                brackets_at(a.structure, a.parameters, points), brackets_at(b.structure, b.parameters, points),
                atol=1e-15,
            )

    def test_vacc_i_without_vaccination_matches_classic_pair_up_to_constant(self):
        pair = vacc_i_pair(0.1, 2.0, 0.0)
        classic = sir_pair(0.1, 2.0)
        points = simplex_points(3, 100, np.random.default_rng(22))
        result = hypersurface_gap(pair.second.hamiltonian, classic.second.hamiltonian, SIR, points,
                                  pair.parameters, tol=1e-12, up_to_constant=True)
        self.assertTrue(result.ok, result)
        offset = compile_exprs([pair.second.hamiltonian - classic.second.hamiltonian], SIR)(POINT, pair.parameters)[0]
        self.assertAlmostEqual(offset, -(0.1 / 2.0) * np.log(2.0), places=14)

    def test_vacc_s_without_vaccination_is_classic_pair(self):
        pair = vacc_s_pair(0.1, 1.0, 0.0)
        classic = sir_pair(0.1, 1.0)
        points = simplex_points(3, 100, np.random.default_rng(23))
        result = hypersurface_gap(pair.second.hamiltonian, classic.second.hamiltonian, SIR, points,
                                  pair.parameters, tol=1e-14)
        self.assertTrue(result.ok, result)

    def test_pencils_satisfy_jacobi(self):
        rng = np.random.default_rng(24)
        for pair in every_pair():
            points = domain_points(pair, 300, rng)
            for lam in (0.25, 0.5, 0.75):
                ps = pencil(pair.first.structure, pair.second.structure, lam)
                self.assertTrue(jacobi_report(ps, points, pair.parameters).ok, f"{pair.name} at {lam}")

    def test_guard_violation_names_the_logarithm(self):
        pair = sirs_pair(0.1, 1.0, 0.1)
        with self.assertRaises(DomainGuardError) as ctx:
            ensure_in_domain(pair, [0.05, 0.9, 0.05])
        self.assertIn("log(beta*S - mu)", str(ctx.exception))
        self.assertEqual(ctx.exception.point, (0.05, 0.9, 0.05))

    def test_domain_points_respect_guards(self):
        pair = sirs_pair(0.1, 1.0, 0.5)
        points = domain_points(pair, 200, np.random.default_rng(25))
        self.assertTrue(np.all(points[0] > 0.5))

    def test_parameter_signs(self):
        with self.assertRaises(ModelError):
            sirs_pair(0.0, 1.0, 0.1)
        with self.assertRaises(ModelError):
            vacc_i_pair(0.1, 1.0, -0.1)

    def test_unknown_kind(self):
        with self.assertRaises(UnknownStructureError):
            make_pair("seir", 0.1, 1.0)
        self.assertEqual(pair_kind("vacc_s"), "sir_vacc_s")


class CoupledPairTests(SimpleTestCase):
    params = [{"alpha": 0.1, "beta": 1.0, "mu": 0.1}, {"alpha": 0.1, "beta": 1.0, "mu": 0.1}]

    def test_constant_transfer(self):
        pair = coupled_pair("sirs", self.params, {(1, 2): 0.05})
        points = domain_points(pair, 200, np.random.default_rng(26))
        self.assertEqual(points.shape, (6, 200))
        self.assertTrue(vector_field_mismatch(pair, points, tol=1e-10).ok)
        self.assertTrue(jacobi_report(pair.second.structure, points, pair.parameters, tol=1e-12).ok)
        self.assertTrue(jacobi_report(pair.summed_structure, points, pair.parameters).ok)

    def test_transfer_brackets(self):
        pair = coupled_pair("sirs", self.params, {(1, 2): 0.05})
        second = pair.second.structure.fundamental("R_1", "R_2")
        first = pair.first.structure.fundamental("R_1", "R_2")
        variables = pair.variables
        values = compile_exprs([first, second], variables)(np.full(6, 0.3), pair.parameters)
        np.testing.assert_allclose(values, [-0.05, 0.05], atol=1e-15)

    def test_decoupled_pair_is_block_diagonal(self):
        pair = coupled_pair("sirs", self.params, {})
        single = sirs_pair(0.1, 1.0, 0.1)
        state = np.concatenate([POINT, [0.6, 0.3, 0.1]])
        for structure in ("first", "second"):
            velocity = getattr(pair, structure).velocity(state)
            np.testing.assert_allclose(velocity[:3], getattr(single, structure).velocity(POINT), atol=1e-15)
            np.testing.assert_allclose(velocity[3:], getattr(single, structure).velocity(state[3:]), atol=1e-15)
        points = domain_points(pair, 100, np.random.default_rng(27))
        for check, result in verify_pair(pair, points).items():
            self.assertTrue(result.ok, check)

    def test_vaccination_kinds(self):
        rng = np.random.default_rng(28)
        for kind in ("vacc_i", "vacc_s"):
            params = [{"alpha": 0.1, "beta": 1.0, "v": 0.1}, {"alpha": 0.2, "beta": 0.8, "v": 0.05}]
            pair = coupled_pair(kind, params, {(2, 1): -0.05})
            points = domain_points(pair, 200, rng)
            self.assertTrue(vector_field_mismatch(pair, points).ok, kind)

    def test_function_valued_transfer_rejected(self):
        with self.assertRaises(ModelError):
            coupled_pair("sirs", self.params, {(1, 2): "0.1*S_1"})


class CasimirTests(SimpleTestCase):
    parameters = {
        "sir": {"alpha": 0.1, "beta": 1.0},
        "sirs_endemic": {"alpha": 0.1, "beta": 1.0, "mu": 0.1},
        "sir_vacc_i": {"alpha": 0.1, "beta": 1.0, "v": 0.1},
        "sir_vacc_s": {"alpha": 0.1, "beta": 1.0, "v": 0.1},
    }

    def test_catalog_entries_are_casimirs(self):
        rng = np.random.default_rng(29)
        for kind, params in self.parameters.items():
            pair = make_pair(kind, params["alpha"], params["beta"], params.get("mu", params.get("v")))
            points = domain_points(pair, 500, rng)
            for entry in casimir_catalog(kind, params, 0.99):
                result = is_casimir(entry.structure, entry.casimir, points, entry.parameters, tol=1e-10)
                self.assertTrue(result.ok, f"{entry.structure_id}: {result.value}")

    def test_anchored_at_initial_condition(self):
        for kind, params in self.parameters.items():
            c = casimir_of(kind, params, 0.9)
            value = compile_exprs([c], SIR)(np.array([0.9, 0.1, 0.0]), params)[0]
            self.assertAlmostEqual(value, 0.0, places=15, msg=kind)

    def test_sir_casimir_form(self):
        c = casimir_of("sir", {"alpha": 0.1, "beta": 1.0}, 0.99)
        expected = 0.8 + 0.1 - 1.0 - 0.1 * np.log(0.8 / 0.99)
        self.assertAlmostEqual(compile_exprs([c], SIR)(POINT, {"alpha": 0.1, "beta": 1.0})[0], expected, places=15)

    def test_second_hamiltonian_matches_casimir_on_unit_sum(self):
        pair = sirs_pair(0.1, 1.0, 0.1)
        c1 = casimir_of("sirs", pair.parameters, 0.99)
        points = domain_points(pair, 300, np.random.default_rng(30))
        result = hypersurface_gap(pair.second.hamiltonian, c1, SIR, points, pair.parameters,
                                  tol=1e-12, up_to_constant=True)
        self.assertTrue(result.ok, result)

    def test_total_population_is_not_a_first_structure_casimir(self):
        pair = sirs_pair(0.1, 1.0, 0.1)
        self.assertFalse(is_casimir(pair.first.structure, parse("S"), POINT, pair.parameters).ok)
        self.assertTrue(is_casimir(pair.second.structure, total_population(SIR), POINT, pair.parameters).ok)

    def test_unknown_structure(self):
        with self.assertRaises(UnknownStructureError):
            casimir_of("seir", {}, 0.9)
