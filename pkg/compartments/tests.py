import numpy as np
from django.test import SimpleTestCase

from expressions import compile_exprs, free_variables
from poisson import jacobi_report
from poisson.sampling import box_points, simplex_points

from .builtins import BUILTINS, builtin, generalized_sir, seir, sir, sir_vacc_i, sir_vacc_s, sir_vital, sirs_endemic
from .exceptions import LinearityError, ModelError
from .models import CompartmentalModel, Flow, OdeSystem, canonical_poisson, to_ode
from .rescaling import nonconstant_sir, rescale_nonconstant

POINT = np.array([0.8, 0.1, 0.1])


def every_builtin():
    return [
        sir(0.1, 1.0),
        generalized_sir(0.1, phi1="mu*I", phi2="-mu*I", beta=1.0, mu=0.1),
        sirs_endemic(0.1, 1.0, 0.1),
        sir_vacc_i(0.1, 1.0, 0.1),
        sir_vacc_s(0.1, 1.0, 0.1),
        sir_vital(0.1, 1.0, 0.01, 0.2, 0.01),
        seir(0.1, 1.0, 0.2, phi1="mu*I", phi3="mu*E", mu=0.05),
    ]


class ToOdeTests(SimpleTestCase):
    def test_sir_right_hand_sides(self):
        ode = to_ode(sir(0.1, 1.0))
        np.testing.assert_allclose(ode.velocity(POINT), [-0.08, 0.07, 0.01], atol=1e-15)

    def test_empty_flow_list(self):
        ode = to_ode(CompartmentalModel(("A", "B")))
        np.testing.assert_array_equal(ode.velocity([0.3, 0.7]), [0.0, 0.0])

    def test_opposite_flows_cancel(self):
        model = CompartmentalModel(("A", "B"), (Flow("A", "B", "k*A*B"), Flow("B", "A", "k*A*B")), {"k": 2.0})
        np.testing.assert_array_equal(to_ode(model).velocity([0.3, 0.7]), [0.0, 0.0])

    def test_unknown_compartment(self):
        with self.assertRaises(ModelError) as ctx:
            CompartmentalModel(("S", "I"), (Flow("S", "X", "S"),))
        self.assertIn("'X'", str(ctx.exception))

    def test_unbound_parameter(self):
        with self.assertRaises(ModelError):
            CompartmentalModel(("S", "I"), (Flow("S", "I", "beta*S*I"),))

    def test_every_builtin_is_closed(self):
        rng = np.random.default_rng(0)
        for model in every_builtin():
            result = to_ode(model).check_closed(box_points(model.dim, 1000, rng), tol=1e-14)
            self.assertTrue(result.ok, f"{model.name}: {result.value}")

    def test_raw_system_that_leaks(self):
        ode = OdeSystem.from_dict({"variables": ["S", "I"], "rhs": {"S": "-k*S", "I": "0"}, "params": {"k": 1.0}})
        self.assertFalse(ode.check_closed([[0.5], [0.5]]).ok)


class BuiltinTests(SimpleTestCase):
    def test_sirs_infected_equation(self):
        ode = to_ode(sirs_endemic(0.1, 1.0, 0.1))
        s, i = 0.8, 0.1
        self.assertAlmostEqual(ode.velocity(POINT)[1], 1.0 * s * i - (0.1 + 0.1) * i, places=15)

    def test_sirs_without_return_is_sir(self):
        points = box_points(3, 100, np.random.default_rng(1))
        endemic = to_ode(sirs_endemic(0.1, 1.0, 0.0))
        plain = to_ode(sir(0.1, 1.0))
        np.testing.assert_array_equal(endemic.velocity(points), plain.velocity(points))

    def test_vital_dynamics_balance(self):
        ode = to_ode(sir_vital(0.1, 1.0, 0.01, 0.2, 0.01))
        points = box_points(3, 100, np.random.default_rng(2))
        self.assertLessEqual(np.max(np.abs(ode.velocity(points).sum(axis=0))), 1e-15)

    def test_negative_parameter_rejected(self):
        with self.assertRaises(ModelError):
            sir(-0.1, 1.0)

    def test_registry(self):
        model = builtin("sir_vacc_s", {"alpha": 0.1, "beta": 1.0, "v": 0.1})
        self.assertEqual(model.name, "sir_vacc_s")
        self.assertEqual(set(BUILTINS), {
            "sir", "generalized_sir", "sirs_endemic", "sir_vacc_i", "sir_vacc_s", "sir_vital", "seir",
        })
        with self.assertRaises(ModelError):
            builtin("sird", {})
        with self.assertRaises(ModelError):
            builtin("sir", {"alpha": 0.1})

    def test_generalized_transmission_rate(self):
        model = generalized_sir(0.1, beta_expr="k/(S + I)", k=0.5)
        s, i = 0.8, 0.1
        self.assertAlmostEqual(to_ode(model).velocity(POINT)[0], -0.5 / (s + i) * s * i, places=15)

    def test_round_trip_through_config(self):
        model = sirs_endemic(0.1, 1.0, 0.1)
        again = CompartmentalModel.from_dict(model.to_dict())
        np.testing.assert_array_equal(to_ode(again).velocity(POINT), to_ode(model).velocity(POINT))
        self.assertEqual(again.distinguished, "R")


class CanonicalPoissonTests(SimpleTestCase):
    def test_default_distinguished_gives_sir_structure(self):
        hs = canonical_poisson(generalized_sir(0.1, beta=1.0))
        ps = hs.structure
        params = hs.parameters
        entries = compile_exprs([ps.fundamental("S", "I"), ps.fundamental("S", "R"), ps.fundamental("I", "R")], ps.variables)
        np.testing.assert_allclose(entries(POINT, params), [0.0, -0.08, -0.01 + 0.08], atol=1e-15)
        self.assertFalse(hs.hypersurface_only)

    def test_infected_distinguished(self):
        hs = canonical_poisson(generalized_sir(0.1, beta=1.0, distinguished="I"))
        ps = hs.structure
        self.assertTrue(hs.hypersurface_only)
        self.assertNotIn("I", free_variables(ps.fundamental("S", "I")))
        entries = compile_exprs([ps.fundamental("S", "R"), ps.fundamental("S", "I"), ps.fundamental("I", "R")], ps.variables)
        np.testing.assert_allclose(entries(POINT, hs.parameters), [0.0, -0.08, -0.01], atol=1e-15)

    def test_two_compartment_toy(self):
        model = CompartmentalModel(
            ("S", "I"), (Flow("S", "I", "beta*S*I"), Flow("I", "S", "alpha*I")), {"beta": 1.0, "alpha": 0.3}, "I",
        )
        hs = canonical_poisson(model)
        points = simplex_points(2, 100, np.random.default_rng(3))
        s, i = points
        bracket = compile_exprs([hs.structure.fundamental("S", "I")], ("S", "I"))(points, hs.parameters)[0]
        np.testing.assert_allclose(bracket, -1.0 * s * i + 0.3 * i, atol=1e-14)
        np.testing.assert_allclose(hs.velocity(points), to_ode(model).velocity(points), atol=1e-14)

    def test_residual_dependence_reported_without_elimination(self):
        model = sir_vital(0.1, 1.0, 0.01, 0.2, 0.01)
        with self.assertRaises(ModelError) as ctx:
            canonical_poisson(model, eliminate=False)
        self.assertIn("R->S", str(ctx.exception))

    def test_hamilton_equations_match_ode_for_every_builtin(self):
        rng = np.random.default_rng(4)
        for model in every_builtin():
            hs = canonical_poisson(model)
            points = simplex_points(model.dim, 1000, rng)
            gap = np.abs(hs.velocity(points) - to_ode(model).velocity(points))
            self.assertLessEqual(np.max(gap), 1e-12, model.name)

    def test_canonical_structures_satisfy_jacobi(self):
        rng = np.random.default_rng(5)
        for model in every_builtin():
            for marked in model.compartments:
                hs = canonical_poisson(model.with_distinguished(marked))
                result = jacobi_report(hs.structure, simplex_points(model.dim, 200, rng), hs.parameters)
                self.assertTrue(result.ok, f"{model.name}[{marked}]: {result.value}")

    def test_choice_of_distinguished_does_not_change_dynamics(self):
        model = generalized_sir(0.1, phi1="mu*I", phi2="-mu*I", beta=1.0, mu=0.1)
        points = simplex_points(3, 1000, np.random.default_rng(6))
        velocities = [canonical_poisson(model.with_distinguished(m)).velocity(points) for m in ("R", "I", "S")]
        self.assertLessEqual(np.max(np.abs(velocities[0] - velocities[1])), 1e-12)
        self.assertLessEqual(np.max(np.abs(velocities[0] - velocities[2])), 1e-12)

    def test_seir_brackets(self):
        model = seir(0.1, 1.0, 0.2)
        hs = canonical_poisson(model)
        ps = hs.structure
        self.assertEqual(ps.variables, ("S", "E", "I", "R"))
        state = np.array([0.6, 0.1, 0.2, 0.1])
        entries = compile_exprs(
            [ps.fundamental("S", "R"), ps.fundamental("I", "R"), ps.fundamental("E", "R"), ps.fundamental("S", "E")],
            ps.variables,
        )
        np.testing.assert_allclose(entries(state, hs.parameters), [-0.12, -0.02 + 0.02, 0.12 - 0.02, 0.0], atol=1e-15)


class RescalingTests(SimpleTestCase):
    def test_without_vital_dynamics_is_plain_sir(self):
        model = rescale_nonconstant(nonconstant_sir(0.1, 1.0, 0.0, 0.0))
        ode = to_ode(model)
        np.testing.assert_allclose(ode.velocity(POINT), [-0.08, 0.07, 0.01], atol=1e-15)

    def test_endemic_return_with_balanced_growth(self):
        system = nonconstant_sir(0.1, 1.0, 0.02, 0.02, phi1="mu*I", phi2="-mu*I", mu=0.1)
        model = rescale_nonconstant(system)
        phi1_tilde = next(f.rate for f in model.flows if (f.source, f.target) == ("r", "s"))
        value = compile_exprs([phi1_tilde], model.compartments)(POINT, model.parameters)[0]
        self.assertAlmostEqual(value, 0.02 - 0.02 * 0.8 + 0.1 * 0.1, places=15)

    def test_nonlinear_phi_rejected(self):
        with self.assertRaises(LinearityError) as ctx:
            rescale_nonconstant(nonconstant_sir(0.1, 1.0, 0.03, 0.01, phi1="k*S*I", k=1.0))
        self.assertIn("linear", str(ctx.exception))

    def test_affine_phi_rejected(self):
        with self.assertRaises(LinearityError):
            rescale_nonconstant(nonconstant_sir(0.1, 1.0, 0.03, 0.01, phi2="0.1 + I"))

    def test_raw_population_grows_exponentially(self):
        raw = nonconstant_sir(0.1, 1.0, 0.03, 0.01).raw_ode()
        state = np.array([0.5, 0.3, 0.4])
        self.assertAlmostEqual(raw.velocity(state).sum(), 0.02 * state.sum(), places=15)

    def test_rescaled_model_is_closed_on_its_hypersurface(self):
        model = rescale_nonconstant(nonconstant_sir(0.1, 1.0, 0.03, 0.01, phi1="mu*I", mu=0.05))
        points = simplex_points(3, 200, np.random.default_rng(7))
        self.assertTrue(to_ode(model).check_closed(points).ok)
        self.assertEqual(model.distinguished, "r")
