import numpy as np
from django.test import SimpleTestCase

from compartments import canonical_poisson, seir, sir, sirs_endemic
from expressions import compile_exprs
from poisson import jacobi_report
from poisson.exceptions import DimensionMismatchError
from poisson.sampling import population_simplex_points
from solver import integrate_rk4

from .balance import per_population_balance, time_derivative
from .exceptions import TransferError
from .systems import couple, couple_from_dict

EXCHANGE_STATES = np.array([0.8, 0.1, 0.1, 0.7, 0.3, 0.0, 0.5, 0.1, 0.4])


def exchange_transfers(n=3):
    return {
        (a, b): f"kappa*(S_{a} + S_{b} + I_{a} - I_{b})"
        for a in range(1, n + 1) for b in range(a + 1, n + 1)
    }


def exchange_system():
    return couple([sir(0.1, 1.0)] * 3, exchange_transfers(), {"kappa": 0.1})


class CoupleTests(SimpleTestCase):
    def test_single_population_is_canonical(self):
        model = sirs_endemic(0.1, 1.0, 0.1)
        system = couple([model])
        self.assertEqual(system.variables, ("S_1", "I_1", "R_1"))
        points = population_simplex_points(3, 1, 200, np.random.default_rng(40))
        np.testing.assert_allclose(system.velocity(points), canonical_poisson(model).velocity(points), atol=1e-15)

    def test_parameters_are_suffixed_per_population(self):
        system = couple([sir(0.1, 1.0), sir(0.2, 0.5)], {(1, 2): "kappa*S_1"}, {"kappa": 0.1})
        self.assertEqual(dict(system.parameters), {
            "kappa": 0.1, "alpha_1": 0.1, "beta_1": 1.0, "alpha_2": 0.2, "beta_2": 0.5,
        })
        state = np.array([0.8, 0.1, 0.1, 0.6, 0.3, 0.1])
        velocity = system.velocity(state)
        self.assertAlmostEqual(velocity[4], 0.5 * 0.6 * 0.3 - 0.2 * 0.3, places=15)
        self.assertAlmostEqual(velocity[2], 0.1 * 0.1 - 0.1 * 0.8, places=15)
        self.assertAlmostEqual(velocity[5], 0.2 * 0.3 + 0.1 * 0.8, places=15)

    def test_transfer_brackets_link_distinguished_compartments(self):
        system = exchange_system()
        bracket = system.structure.fundamental("R_1", "R_2")
        value = compile_exprs([bracket], system.variables)(EXCHANGE_STATES, system.parameters)[0]
        self.assertAlmostEqual(value, -0.1 * (0.8 + 0.7 + 0.1 - 0.3), places=15)

    def test_lower_triangle_read_back_negated(self):
        system = exchange_system()
        exprs = [system.tau(1, 2), system.tau(2, 1)]
        forward, backward = compile_exprs(exprs, system.variables)(EXCHANGE_STATES, system.parameters)
        self.assertAlmostEqual(forward, -backward, places=15)

    def test_distinguished_variable_in_transfer_rejected(self):
        with self.assertRaises(TransferError) as ctx:
            couple([sir(0.1, 1.0)] * 2, {(1, 2): "S_1*R_2"})
        self.assertIn("R_2", str(ctx.exception))

    def test_third_population_in_transfer_rejected(self):
        with self.assertRaises(TransferError):
            couple([sir(0.1, 1.0)] * 3, {(1, 2): "S_3"})

    def test_unbound_parameter_rejected(self):
        with self.assertRaises(TransferError):
            couple([sir(0.1, 1.0)] * 2, {(1, 2): "kappa*S_1"})

    def test_heterogeneous_compartment_counts_rejected(self):
        with self.assertRaises(TransferError):
            couple([sir(0.1, 1.0), seir(0.1, 1.0, 0.2)])

    def test_both_orientations(self):
        consistent = couple([sir(0.1, 1.0)] * 2, {(1, 2): "0.1*S_1", (2, 1): "-0.1*S_1"})
        self.assertEqual(len(consistent.transfers), 1)
        with self.assertRaises(TransferError):
            couple([sir(0.1, 1.0)] * 2, {(1, 2): "0.1*S_1", (2, 1): "0.1*S_1"})

    def test_combined_structure_satisfies_jacobi(self):
        rng = np.random.default_rng(41)
        cases = [
            exchange_system(),
            couple([sir(0.1, 1.0)] * 3, {(1, 2): 0.05, (1, 3): -0.02, (2, 3): 0.01}),
            couple([sir(0.1, 1.0)] * 3, {(1, 2): "kappa*(S_1 - S_2)", (2, 3): "kappa*(S_2 - S_3)"}, {"kappa": 0.1}),
        ]
        for system in cases:
            points = population_simplex_points(3, 3, 500, rng)
            result = jacobi_report(system.structure, points, system.parameters, tol=1e-10)
            self.assertTrue(result.ok, result)

    def test_from_dict(self):
        system = couple_from_dict({
            "populations": [{"builtin": "sir", "params": {"alpha": 0.1, "beta": 1.0}}] * 2,
            "transfers": [{"a": 1, "b": 2, "rate": "kappa*(S_1 + S_2 + I_1 - I_2)"}],
            "params": {"kappa": 0.1},
        })
        self.assertEqual(system.size, 2)
        self.assertEqual(system.distinguished(2), "R_2")
        with self.assertRaises(TransferError):
            couple_from_dict({
                "populations": [{"builtin": "sir", "params": {"alpha": 0.1, "beta": 1.0}}] * 2,
                "transfers": [{"a": 1, "b": 2, "rate": "0.1"}, {"a": 1, "b": 2, "rate": "0.2"}],
            })


class DynamicsTests(SimpleTestCase):
    def test_grand_total_conserved_while_populations_exchange(self):
        system = exchange_system()
        trajectory = integrate_rk4(system, EXCHANGE_STATES, 100.0, 0.01)
        self.assertFalse(trajectory.truncated)
        grand = trajectory.states.sum(axis=1)
        self.assertLessEqual(np.max(np.abs(grand - grand[0])), 1e-9)
        totals = system.population_totals(trajectory.states.T)
        self.assertGreater(np.max(np.abs(totals - totals[:, :1])), 1e-3)

    def test_negative_recovered_is_flagged_not_truncated(self):
        trajectory = integrate_rk4(exchange_system(), EXCHANGE_STATES, 2.0, 0.01)
        self.assertTrue(trajectory.flagged)
        self.assertEqual(trajectory.domain_exit.variable, "R_1")
        self.assertEqual(trajectory.t_final, 2.0)

    def test_decoupled_populations_evolve_independently(self):
        system = couple([sir(0.1, 1.0), sirs_endemic(0.2, 0.8, 0.05)])
        joint = integrate_rk4(system, [0.9, 0.1, 0.0, 0.7, 0.2, 0.1], 20.0, 0.01)
        first = integrate_rk4(canonical_poisson(sir(0.1, 1.0)), [0.9, 0.1, 0.0], 20.0, 0.01)
        second = integrate_rk4(canonical_poisson(sirs_endemic(0.2, 0.8, 0.05)), [0.7, 0.2, 0.1], 20.0, 0.01)
        self.assertLessEqual(np.max(np.abs(joint.states[:, :3] - first.states)), 1e-12)
        self.assertLessEqual(np.max(np.abs(joint.states[:, 3:] - second.states)), 1e-12)

    def test_constant_transfer_drains_linearly(self):
        system = couple([sir(0.1, 1.0)] * 2, {(1, 2): 0.01})
        trajectory = integrate_rk4(system, [0.9, 0.1, 0.0, 0.8, 0.2, 0.0], 10.0, 0.01)
        totals = system.population_totals(trajectory.states.T)
        np.testing.assert_allclose(totals[0], 1.0 - 0.01 * trajectory.times, atol=1e-12)
        np.testing.assert_allclose(totals[1], 1.0 + 0.01 * trajectory.times, atol=1e-12)


class BalanceTests(SimpleTestCase):
    def test_exchange_balance(self):
        system = exchange_system()
        trajectory = integrate_rk4(system, EXCHANGE_STATES, 10.0, 0.001)
        balance = per_population_balance(system, trajectory)
        self.assertEqual(balance.totals.shape, (3, len(trajectory)))
        self.assertLessEqual(balance.max_residual, 1e-8)
        self.assertGreater(balance.max_drift, 1e-3)

    def test_zero_transfer_keeps_every_total(self):
        system = couple([sir(0.1, 1.0)] * 2)
        trajectory = integrate_rk4(system, [0.9, 0.1, 0.0, 0.6, 0.3, 0.1], 20.0, 0.01)
        balance = per_population_balance(system, trajectory)
        self.assertLessEqual(balance.max_drift, 1e-12)
        self.assertLessEqual(balance.max_residual, 1e-10)

    def test_trajectory_of_another_system(self):
        trajectory = integrate_rk4(couple([sir(0.1, 1.0)] * 2), [0.9, 0.1, 0.0, 0.6, 0.3, 0.1], 1.0, 0.1)
        with self.assertRaises(DimensionMismatchError):
            per_population_balance(exchange_system(), trajectory)

    def test_fourth_order_stencil_is_exact_on_quartics(self):
        times = np.linspace(0.0, 1.0, 11)
        values = 3.0 * times ** 4 - times ** 2 + 2.0
        np.testing.assert_allclose(time_derivative(values, times)[0], 12.0 * times ** 3 - 2.0 * times, atol=1e-10)

    def test_non_uniform_grid_falls_back(self):
        times = np.array([0.0, 0.1, 0.3, 0.35, 0.6, 1.0])
        derivative = time_derivative(2.0 * times, times)
        np.testing.assert_allclose(derivative[0], 2.0, atol=1e-12)
