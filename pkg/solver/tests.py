import io
import os
import tempfile
import warnings

import numpy as np
from django.test import SimpleTestCase
from scipy.integrate import IntegrationWarning

from bihamiltonian import casimir_of
from compartments import (
    OdeSystem, canonical_poisson, generalized_sir, nonconstant_sir, rescale_nonconstant, seir, sir, sir_vacc_i, sir_vacc_s,
    sir_vital, sirs_endemic, to_ode,
)
from expressions import parse
from poisson import total_population

from .exact import VaccSLeaf, exact_solution, sir_solution, sirs_solution, vacc_i_solution, vacc_s_solution
from .exceptions import BracketError, HorizonError, IntegrationError, UnsupportedModelError
from .integrators import integrate_adaptive, integrate_rk4, rk4_grid, rk4_order
from .trajectories import Trajectory, diagnostics, read_csv, write_csv

SIR = ("S", "I", "R")
OUTBREAK_START = [0.99, 0.01, 0.0]
TIMES = np.linspace(0.0, 60.0, 61)

def single_peak(values):
    peak = int(np.argmax(values))
    steps = np.diff(values)
    return 0 < peak < values.size - 1 and np.all(steps[:peak] > 0.0) and np.all(steps[peak:] < 0.0)

class Rk4Tests(SimpleTestCase):
    def test_grid_clips_last_step(self):
        np.testing.assert_allclose(rk4_grid(1.0, 0.3), [0.0, 0.3, 0.6, 0.9, 1.0])
        self.assertEqual(rk4_grid(100.0, 0.01).size, 10001)

    def test_zero_right_hand_side_is_constant(self):
        ode = OdeSystem.from_dict({"variables": ["A", "B"], "rhs": {"A": "0", "B": "0"}})
        trajectory = integrate_rk4(ode, [0.3, 0.7], 5.0, 0.5)
        np.testing.assert_array_equal(trajectory.states, np.tile([0.3, 0.7], (11, 1)))
        report = diagnostics(trajectory, parse("A + B", variables=("A", "B")))
        self.assertEqual(report.h_drift, 0.0)

    def test_sir_single_peak_and_conservation(self):
        system = canonical_poisson(sir(0.1, 1.0))
        trajectory = integrate_rk4(system, OUTBREAK_START, 100.0, 0.01)
        infected = trajectory.column("I")
        self.assertTrue(single_peak(infected))
        self.assertLess(infected[-1], 1e-3)
        self.assertLessEqual(np.max(np.abs(trajectory.states.sum(axis=1) - 1.0)), 1e-9)
        self.assertLessEqual(diagnostics(trajectory, system.hamiltonian).h_drift, 1e-9)

    def test_closed_builtins_conserve_population(self):
        runs = [
            (sir(0.1, 1.0), OUTBREAK_START),
            (sirs_endemic(0.1, 1.0, 0.1), OUTBREAK_START),
            (sir_vacc_i(0.1, 1.0, 0.1), OUTBREAK_START),
            (sir_vacc_s(0.1, 1.0, 0.1), OUTBREAK_START),
            (sir_vital(0.1, 1.0, 0.01, 0.2, 0.01), OUTBREAK_START),
            (generalized_sir(0.1, phi1="mu*I", phi2="-mu*I", beta=1.0, mu=0.1), OUTBREAK_START),
            (seir(0.1, 1.0, 0.2, phi1="mu*I", phi3="mu*E", mu=0.05), [0.99, 0.0, 0.01, 0.0]),
        ]
        for model, start in runs:
            # vaccination in proportion to I drives S negative near t = 8.3
            trajectory = integrate_rk4(to_ode(model), start, 100.0, 0.01, domain_exit="flag")
            self.assertEqual(len(trajectory), 10001, model.name)
            self.assertLessEqual(np.max(np.abs(trajectory.hamiltonian - 1.0)), 1e-12, model.name)

    def test_vital_dynamics_become_endemic(self):
        trajectory = integrate_rk4(to_ode(sir_vital(0.1, 1.0, 0.01, 0.2, 0.01)), OUTBREAK_START, 200.0, 0.01)
        self.assertGreater(trajectory.column("I")[-1], 0.01)

    def test_fourth_order(self):
        ratio = rk4_order(canonical_poisson(sir(0.1, 1.0)), OUTBREAK_START, 10.0, 0.1)
        self.assertGreaterEqual(ratio, 12.0)

    def test_bad_step(self):
        with self.assertRaises(IntegrationError):
            integrate_rk4(to_ode(sir(0.1, 1.0)), OUTBREAK_START, 10.0, -1.0)
        with self.assertRaises(IntegrationError):
            integrate_rk4(to_ode(sir(0.1, 1.0)), [0.5, 0.5], 10.0, 0.1)

class DomainExitTests(SimpleTestCase):
    def setUp(self):
        self.drain = OdeSystem.from_dict({"variables": ["x"], "rhs": {"x": "-1"}})

    def test_truncate(self):
        trajectory = integrate_rk4(self.drain, [0.55], 1.0, 0.1)
        self.assertTrue(trajectory.truncated)
        self.assertAlmostEqual(trajectory.t_final, 0.5, places=12)
        self.assertAlmostEqual(trajectory.domain_exit.time, 0.6, places=12)
        self.assertEqual(trajectory.domain_exit.variable, "x")

    def test_flag_keeps_going(self):
        trajectory = integrate_rk4(self.drain, [0.55], 1.0, 0.1, domain_exit="flag")
        self.assertFalse(trajectory.truncated)
        self.assertTrue(trajectory.flagged)
        self.assertEqual(trajectory.t_final, 1.0)

    def test_ignore(self):
        trajectory = integrate_adaptive(self.drain, [0.55], 1.0, times=[0.0, 0.5, 1.0], domain_exit="ignore")
        self.assertIsNone(trajectory.domain_exit)
        self.assertAlmostEqual(trajectory.final_state[0], -0.45, places=9)

    def test_adaptive_truncates(self):
        trajectory = integrate_adaptive(self.drain, [0.55], 1.0, times=np.linspace(0.0, 1.0, 11))
        self.assertTrue(trajectory.truncated)
        self.assertAlmostEqual(trajectory.t_final, 0.5, places=12)

    def test_log_domain_error_truncates(self):
        ode = OdeSystem.from_dict({"variables": ["x"], "rhs": {"x": "log(x)"}})
        trajectory = integrate_rk4(ode, [0.5], 2.0, 0.01)
        self.assertTrue(trajectory.truncated)
        self.assertTrue(trajectory.flagged)
        self.assertTrue(np.all(trajectory.states > 0.0))

    def test_unknown_policy(self):
        with self.assertRaises(IntegrationError):
            integrate_rk4(self.drain, [0.55], 1.0, 0.1, domain_exit="clip")

class AdaptiveTests(SimpleTestCase):
    def test_linear_decay(self):
        ode = OdeSystem.from_dict({"variables": ["I"], "rhs": {"I": "-alpha*I"}, "params": {"alpha": 0.1}})
        trajectory = integrate_adaptive(ode, [1.0], 50.0, rtol=1e-8, atol=1e-12, samples=51)
        np.testing.assert_allclose(trajectory.column("I"), np.exp(-0.1 * trajectory.times), rtol=1e-7)

    def test_agrees_with_fine_rk4(self):
        system = canonical_poisson(sirs_endemic(0.1, 1.0, 0.1))
        adaptive = integrate_adaptive(system, OUTBREAK_START, 40.0, rtol=1e-10, atol=1e-12, times=[0.0, 10.0, 20.0, 40.0])
        fine = integrate_rk4(system, OUTBREAK_START, 40.0, 1e-3)
        for t, state in zip(adaptive.times[1:], adaptive.states[1:]):
            np.testing.assert_allclose(state, fine.at(t), atol=1e-7)

    def test_both_embedded_pairs(self):
        system = to_ode(sir(0.1, 1.0))
        dop = integrate_adaptive(system, OUTBREAK_START, 30.0, rtol=1e-10, atol=1e-12, samples=31)
        rk45 = integrate_adaptive(system, OUTBREAK_START, 30.0, rtol=1e-10, atol=1e-12, samples=31, method="RK45")
        np.testing.assert_allclose(dop.states, rk45.states, atol=1e-7)

    def test_tolerances_must_be_positive(self):
        with self.assertRaises(IntegrationError):
            integrate_adaptive(to_ode(sir(0.1, 1.0)), OUTBREAK_START, 10.0, rtol=0.0)
        with self.assertRaises(IntegrationError):
            integrate_adaptive(to_ode(sir(0.1, 1.0)), OUTBREAK_START, 10.0, method="Euler")

    def test_casimir_drift(self):
        cases = [
            (sir(0.1, 1.0), "sir", {"alpha": 0.1, "beta": 1.0}),
            (sirs_endemic(0.1, 1.0, 0.1), "sirs_endemic", {"alpha": 0.1, "beta": 1.0, "mu": 0.1}),
            (sir_vacc_i(0.1, 1.0, 0.1), "sir_vacc_i", {"alpha": 0.1, "beta": 1.0, "v": 0.1}),
            (sir_vacc_s(0.1, 1.0, 0.1), "sir_vacc_s", {"alpha": 0.1, "beta": 1.0, "v": 0.1}),
        ]
        for model, kind, params in cases:
            casimir = casimir_of(kind, params, 0.99)
            trajectory = integrate_adaptive(canonical_poisson(model), OUTBREAK_START, 60.0, rtol=1e-8,
                                            casimir=casimir, domain_exit="ignore")
            report = diagnostics(trajectory, total_population(SIR), casimir, params)
            self.assertLessEqual(report.casimir_drift, 1e-6, kind)
            self.assertEqual(report.failed_samples, ())

    def test_rescaled_population_matches_raw_fractions(self):
        system = nonconstant_sir(0.1, 1.0, 0.03, 0.01)
        raw = integrate_adaptive(system.raw_ode(), OUTBREAK_START, 50.0, rtol=1e-12, atol=1e-14, samples=51)
        fractions = raw.states / raw.states.sum(axis=1, keepdims=True)
        rescaled = integrate_adaptive(to_ode(rescale_nonconstant(system)), OUTBREAK_START, 50.0, rtol=1e-12, atol=1e-14,
                                      samples=51)
        self.assertLessEqual(np.max(np.abs(fractions - rescaled.states)), 1e-8)
        self.assertGreater(raw.states[-1].sum(), 2.0)

class ExactSolutionTests(SimpleTestCase):
    def oracle(self, model, times=TIMES):
        return integrate_adaptive(canonical_poisson(model), OUTBREAK_START, float(times[-1]), rtol=1e-10, atol=1e-12,
                                  times=times, domain_exit="ignore")

    def assert_on_leaf(self, trajectory):
        self.assertLessEqual(np.max(np.abs(trajectory.casimir)), 1e-9)
        self.assertLessEqual(np.max(np.abs(trajectory.states.sum(axis=1) - 1.0)), 1e-12)

    def test_initial_condition(self):
        solution = sirs_solution(0.1, 1.0, 0.1, 0.99)
        np.testing.assert_array_equal(solution.state(0.0), [0.99, 1.0 - 0.99, 0.0])

    def test_sirs_matches_integration(self):
        solution = sirs_solution(0.1, 1.0, 0.1, 0.99)
        exact = solution.sample(TIMES)
        self.assertLessEqual(np.max(np.abs(exact.states - self.oracle(sirs_endemic(0.1, 1.0, 0.1)).states)), 1e-6)
        self.assert_on_leaf(exact)
        self.assertTrue(np.all(np.diff(exact.column("S")) < 0.0))
        self.assertIsNone(solution.exit_time)
        self.assertIsNone(exact.domain_exit)

    def test_vacc_i_matches_integration(self):
        exact = vacc_i_solution(0.1, 1.0, 0.1, 0.99).sample(TIMES)
        self.assertLessEqual(np.max(np.abs(exact.states - self.oracle(sir_vacc_i(0.1, 1.0, 0.1)).states)), 1e-6)
        self.assert_on_leaf(exact)

    def test_vacc_i_leaves_domain_when_susceptibles_run_out(self):
        solution = vacc_i_solution(0.1, 1.0, 0.1, 0.99)
        self.assertLess(solution.s_inf, 0.0)
        self.assertTrue(8.0 < solution.exit_time < 9.0)
        self.assertAlmostEqual(solution.susceptible(solution.exit_time), 0.0, places=10)

        flagged = solution.sample(TIMES)
        self.assertEqual(len(flagged), TIMES.size)
        self.assertEqual((flagged.domain_exit.time, flagged.domain_exit.variable), (9.0, "S"))
        self.assertLess(flagged.domain_exit.value, 0.0)
        self.assertEqual(flagged.info["exit_time"], solution.exit_time)

        truncated = solution.sample(TIMES, domain_exit="truncate")
        self.assertTrue(truncated.truncated)
        self.assertEqual(truncated.t_final, 8.0)
        self.assertTrue(np.all(truncated.states >= 0.0))
        self.assertIsNone(solution.sample(TIMES, domain_exit="ignore").domain_exit)
        with self.assertRaises(IntegrationError):
            solution.sample(TIMES, domain_exit="clip")

        stepped = integrate_rk4(canonical_poisson(sir_vacc_i(0.1, 1.0, 0.1)), OUTBREAK_START, 20.0, 0.01)
        self.assertEqual(stepped.domain_exit.variable, "S")
        self.assertTrue(0.0 <= stepped.domain_exit.time - solution.exit_time <= 0.01 + 1e-9)

    def test_quadrature_roundoff_warnings_are_logged(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            solutions = [
                sir_solution(0.1, 1.0, 0.99),
                sirs_solution(0.1, 1.0, 0.1, 0.99),
                vacc_i_solution(0.1, 1.0, 0.1, 0.99),
                vacc_s_solution(0.1, 1.0, 0.1, 0.99),
            ]
        for solution in solutions:
            self.assertGreater(solution.horizon, 60.0, solution.kind)

    def test_vacc_s_matches_integration(self):
        times = np.linspace(0.0, 60.0, 31)
        exact = vacc_s_solution(0.1, 1.0, 0.1, 0.99).sample(times)
        self.assertLessEqual(np.max(np.abs(exact.states - self.oracle(sir_vacc_s(0.1, 1.0, 0.1), times).states)), 1e-5)
        self.assert_on_leaf(exact)

    def test_sir_matches_integration(self):
        exact = sir_solution(0.1, 1.0, 0.99).sample(TIMES)
        self.assertLessEqual(np.max(np.abs(exact.states - self.oracle(sir(0.1, 1.0)).states)), 1e-6)

    def test_vanishing_return_rate_reaches_sir(self):
        times = np.linspace(0.0, 60.0, 13)
        limit = sirs_solution(0.1, 1.0, 1e-12, 0.99).states(times)
        plain = sirs_solution(0.1, 1.0, 0.0, 0.99)
        self.assertEqual(plain.kind, "sir")
        self.assertLessEqual(np.max(np.abs(limit - plain.states(times))), 1e-6)

    def test_vaccination_free_limits(self):
        times = np.linspace(0.0, 60.0, 13)
        reference = sir_solution(0.1, 1.0, 0.99).states(times)
        self.assertLessEqual(np.max(np.abs(vacc_i_solution(0.1, 1.0, 0.0, 0.99).states(times) - reference)), 1e-10)
        self.assertLessEqual(np.max(np.abs(vacc_s_solution(0.1, 1.0, 0.0, 0.99).states(times) - reference)), 1e-10)

    def test_inversion(self):
        solution = sirs_solution(0.1, 1.0, 0.1, 0.99)
        self.assertTrue(np.all(np.diff(solution.node_times) > 0.0))
        times = np.array([0.5, 3.0, 17.0, 42.0])
        residuals = solution.inversion_residuals(times)
        self.assertTrue(np.all(residuals <= 1e-10 * np.maximum(1.0, times)))

    def test_horizon(self):
        solution = sirs_solution(0.1, 1.0, 0.1, 0.99)
        self.assertGreater(solution.horizon, 60.0)
        with self.assertRaises(HorizonError) as ctx:
            solution.state(solution.horizon + 1.0)
        self.assertEqual(ctx.exception.t_max, solution.horizon)

    def test_vacc_s_inner_solve(self):
        leaf = VaccSLeaf(0.1, 1.0, 0.1, 0.99)
        self.assertAlmostEqual(leaf.recovered(0.99), 0.0, places=14)
        s = 0.4
        r = leaf.recovered(s)
        residual = r + 0.1 * np.log(s / 0.99) - 0.1 * np.log((1.0 - s - r) / (1.0 - 0.99))
        self.assertLessEqual(abs(residual), 1e-12)
        self.assertEqual(vacc_s_solution(0.1, 1.0, 0.1, 0.99).s_inf, 0.0)

    def test_vacc_s_closed_form_without_vaccination(self):
        leaf = VaccSLeaf(0.1, 1.0, 0.0, 0.99)
        self.assertAlmostEqual(leaf.recovered(0.5), -0.1 * np.log(0.5 / 0.99), places=12)
        with self.assertRaises(BracketError) as ctx:
            leaf.infected(1e-8)
        self.assertEqual(ctx.exception.s, 1e-8)

    def test_preconditions(self):
        with self.assertRaises(IntegrationError):
            sirs_solution(0.1, 1.0, 0.995, 0.99)
        with self.assertRaises(IntegrationError):
            sir_solution(0.1, 1.0, 1.0)

    def test_lookup_by_kind(self):
        self.assertEqual(exact_solution("sirs_endemic", {"alpha": 0.1, "beta": 1.0, "mu": 0.0}, 0.99).kind, "sir")
        with self.assertRaises(UnsupportedModelError) as ctx:
            exact_solution("seir", {"alpha": 0.1, "beta": 1.0}, 0.99)
        self.assertIn("exact solution not available", str(ctx.exception))
        with self.assertRaises(IntegrationError):
            exact_solution("sir_vacc_i", {"alpha": 0.1, "beta": 1.0}, 0.99)

class TrajectoryTests(SimpleTestCase):
    def test_times_must_increase(self):
        with self.assertRaises(ValueError):
            Trajectory(SIR, [0.0, 1.0, 1.0], np.zeros((3, 3)))

    def test_csv_layout(self):
        trajectory = integrate_rk4(canonical_poisson(sir(0.1, 1.0)), OUTBREAK_START, 1.0, 0.1)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "sir.csv")
            write_csv(trajectory, path)
            header, rows = read_csv(path)
        self.assertEqual(header, ["t", "S", "I", "R", "H"])
        np.testing.assert_array_equal(rows[:, 1:4], trajectory.states)

    def test_csv_extra_columns(self):
        trajectory = Trajectory(("x",), [0.0, 0.1], [[1.0], [1.0 / 3.0]])
        buffer = io.StringIO()
        write_csv(trajectory, buffer, {"C": [0.0, 0.5]})
        lines = buffer.getvalue().splitlines()
        self.assertEqual(lines[0], "t,x,C")
        self.assertEqual(lines[2], "0.10000000000000001,0.33333333333333331,0.5")
