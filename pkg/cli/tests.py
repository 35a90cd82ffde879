import io
import json
import tempfile
from pathlib import Path

import numpy as np
from django.apps import apps
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from hamepi.__main__ import main
from solver import read_csv

from .config import flatten_errors, load_config
from .exceptions import ConfigError
from .runners import grid_points

SIR = {"builtin": "sir", "params": {"alpha": 0.1, "beta": 1.0}}
SIRS = {"builtin": "sirs_endemic", "params": {"alpha": 0.1, "beta": 1.0, "mu": 0.1}}
VITAL = {"builtin": "sir_vital", "params": {"alpha": 0.1, "beta": 1.0, "d_S": 0.01, "d_I": 0.2, "d_R": 0.01}}
OUTBREAK = [0.99, 0.01, 0.0]
EXCHANGE = {
    "populations": [SIR, SIR, SIR],
    "transfers": [
        {"a": a, "b": b, "rate": f"kappa*(S_{a} + S_{b} + I_{a} - I_{b})"} for a, b in ((1, 2), (1, 3), (2, 3))
    ],
    "params": {"kappa": 0.1},
}
EXCHANGE_START = [[0.8, 0.1, 0.1], [0.7, 0.3, 0.0], [0.5, 0.1, 0.4]]
REPORTS = {"simulate": "diagnostics"}


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.out = Path(tmp.name)

    def call(self, command, config, **options):
        self.stdout = io.StringIO()
        self.stderr = io.StringIO()
        call_command(command, config=json.dumps(config), out=str(self.out), stdout=self.stdout, stderr=self.stderr,
                     no_color=True, **options)
        return json.loads((self.out / f"{REPORTS.get(command, command)}.json").read_text(encoding="utf-8"))

    def fails(self, command, config, returncode, **options):
        with self.assertRaises(CommandError) as ctx:
            self.call(command, config, **options)
        self.assertEqual(ctx.exception.returncode, returncode)
        return str(ctx.exception)

    def csv(self, name):
        return read_csv(self.out / name)


class SimulateCommandTests(CommandTestCase):
    def test_sir_outbreak(self):
        report = self.call("simulate", {"model": SIR, "initial": OUTBREAK, "t_end": 100, "dt": 0.01})
        self.assertLessEqual(report["h_drift"], 1e-9)
        self.assertLessEqual(report["casimir_drift"], 1e-6)
        self.assertIsNone(report["domain_exit"])
        header, rows = self.csv("trajectory.csv")
        self.assertEqual(header, ["t", "S", "I", "R", "H", "C"])
        infected = rows[:, 2]
        peak = int(np.argmax(infected))
        self.assertTrue(0 < peak < infected.size - 1)
        self.assertTrue(np.all(np.diff(infected[:peak + 1]) > 0.0))
        self.assertTrue(np.all(np.diff(infected[peak:]) < 0.0))
        self.assertLess(infected[-1], 1e-3)
        self.assertEqual(json.loads(self.stdout.getvalue()), report)

    def test_vital_dynamics_stay_endemic(self):
        report = self.call("simulate", {"model": VITAL, "initial": OUTBREAK, "t_end": 200, "dt": 0.01})
        self.assertTrue(report["hypersurface_only"])
        _, rows = self.csv("trajectory.csv")
        self.assertAlmostEqual(rows[-1, 0], 200.0)
        self.assertGreater(rows[-1, 2], 0.01)

    def test_adaptive_and_ode_form(self):
        report = self.call("simulate", {
            "model": SIRS, "initial": OUTBREAK, "t_end": 40, "method": "DOP853", "samples": 41, "system": "ode",
        })
        self.assertEqual(report["samples"], 41)
        self.assertLessEqual(report["casimir_drift"], 1e-6)

    def test_negative_step_names_dt(self):
        message = self.fails("simulate", {"model": SIR, "initial": OUTBREAK, "dt": -1}, 2)
        self.assertIn("dt", message)

    def test_error_paths(self):
        flows = {
            "compartments": ["S", "I", "R"],
            "params": {"alpha": 0.1, "beta": 1.0},
            "flows": [{"from": "S", "to": "I", "rate": "beta*S*I"}, {"from": "I", "to": "R"}],
        }
        message = self.fails("simulate", {"model": flows, "initial": OUTBREAK}, 2)
        self.assertIn("model.flows.1.rate", message)
        message = self.fails("simulate", {"model": SIR, "initial": [1.0, 0.0]}, 2)
        self.assertIn("initial", message)
        message = self.fails("simulate", {"model": {"builtin": "sir", "params": {"alpha": -0.1, "beta": 1.0}},
                                          "initial": OUTBREAK}, 2)
        self.assertIn("model.builtin", message)

    def test_flow_schema_and_yaml(self):
        path = self.out / "sir.yaml"
        path.write_text(
            "model:\n"
            "  compartments: [S, I, R]\n"
            "  params: {alpha: 0.1, beta: 1.0}\n"
            "  flows:\n"
            "    - {from: S, to: I, rate: beta*S*I}\n"
            "    - {from: I, to: R, rate: alpha*I}\n"
            "initial: [0.99, 0.01, 0.0]\n"
            "t_end: 10\n",
            encoding="utf-8",
        )
        call_command("simulate", config=str(path), out=str(self.out), stdout=io.StringIO())
        _, from_yaml = self.csv("trajectory.csv")
        self.call("simulate", {"model": SIR, "initial": OUTBREAK, "t_end": 10})
        _, from_builtin = self.csv("trajectory.csv")
        np.testing.assert_array_equal(from_yaml[:, :4], from_builtin[:, :4])

    def test_identical_runs_write_identical_files(self):
        config = {"model": SIRS, "initial": OUTBREAK, "t_end": 20}
        self.call("simulate", config)
        first = (self.out / "trajectory.csv").read_bytes()
        self.call("simulate", config)
        self.assertEqual((self.out / "trajectory.csv").read_bytes(), first)


class ExactCommandTests(CommandTestCase):
    def test_sirs_against_integration(self):
        report = self.call("exact", {"model": SIRS, "s0": 0.99, "t_end": 60, "samples": 61})
        self.assertEqual(report["kind"], "sirs_endemic")
        self.assertLessEqual(report["max_abs_diff"], 1e-6)
        self.assertLessEqual(report["max_casimir"], 1e-9)
        self.assertGreater(report["horizon"], 60.0)
        header, rows = self.csv("exact.csv")
        self.assertEqual(header, ["t", "S_exact", "I_exact", "R_exact", "S_num", "I_num", "R_num", "max_abs_diff"])
        self.assertEqual(rows.shape, (61, 8))

    def test_sirs_without_return_is_sir(self):
        report = self.call("exact", {"model": {**SIRS, "params": {"alpha": 0.1, "beta": 1.0, "mu": 0.0}}, "t_end": 30})
        self.assertEqual(report["kind"], "sir")
        _, endemic = self.csv("exact.csv")
        self.call("exact", {"model": SIR, "t_end": 30})
        _, plain = self.csv("exact.csv")
        np.testing.assert_array_equal(endemic[:, :4], plain[:, :4])

    def test_unsupported_model(self):
        seir = {"builtin": "seir", "params": {"alpha": 0.1, "beta": 1.0, "epsilon": 0.2}}
        message = self.fails("exact", {"model": seir}, 2)
        self.assertIn("exact solution not available", message)

    def test_beyond_horizon(self):
        self.fails("exact", {"model": SIR, "t_end": 1e6, "samples": 3}, 3)

    def test_vacc_i_flags_negative_susceptible(self):
        vacc_i = {"builtin": "sir_vacc_i", "params": {"alpha": 0.1, "beta": 1.0, "v": 0.1}}
        report = self.call("exact", {"model": vacc_i, "s0": 0.99, "t_end": 60, "samples": 61})
        self.assertLess(report["s_inf"], 0.0)
        self.assertTrue(8.0 < report["exit_time"] < 9.0)
        self.assertEqual(report["domain_exit"]["variable"], "S")
        self.assertEqual(report["domain_exit"]["time"], 9.0)
        self.assertLess(report["domain_exit"]["value"], 0.0)
        self.assertLessEqual(report["max_abs_diff"], 1e-6)

    def test_endemic_run_stays_in_domain(self):
        report = self.call("exact", {"model": SIRS, "t_end": 60})
        self.assertIsNone(report["exit_time"])
        self.assertIsNone(report["domain_exit"])


class VerifyCommandTests(CommandTestCase):
    def test_sir_passes(self):
        report = self.call("verify", {"model": SIR}, points=200)
        self.assertEqual(report["status"], "PASS")
        self.assertEqual(report["points"], 200)
        self.assertIn("pair_compatibility", report["checks"])
        self.assertIn("casimir_sir:first", report["checks"])
        for name, check in report["checks"].items():
            self.assertLessEqual(check["max"], 1e-10, name)

    def test_corrupted_bracket_fails(self):
        corrupted = {**SIR, "poisson": {
            "dim": 3,
            "vars": ["S", "I", "R"],
            "brackets": {"S,I": "S", "S,R": "-beta*S*I", "I,R": "beta*S*I - alpha*I"},
        }}
        report = self.call("verify", {"model": corrupted}, points=100)
        self.assertEqual(report["status"], "FAIL")
        jacobi = report["checks"]["jacobi"]
        self.assertFalse(jacobi["ok"])
        self.assertGreater(jacobi["max"], 0.01)
        self.assertEqual(len(jacobi["worst_point"]), 3)

    def test_interacting_system(self):
        report = self.call("verify", {"interacting": EXCHANGE}, points=300)
        self.assertEqual(report["status"], "PASS")
        self.assertLessEqual(report["checks"]["jacobi"]["max"], 1e-10)
        header, *rows = self.stdout.getvalue().splitlines()
        self.assertTrue(header.startswith("structure"))
        self.assertEqual([row.split()[:2] for row in rows], [["interacting", "300"]])

    def test_table_has_one_row_per_structure(self):
        report = self.call("verify", {"model": SIRS}, points=200)
        header, *rows = self.stdout.getvalue().splitlines()
        self.assertEqual(header.split("  ")[0], "structure")
        for column in ("points", "max jacobi", "max vector field", "max casimir"):
            self.assertIn(column, header)
        names = ["canonical", "sirs_endemic:first", "sirs_endemic:second", "sirs_endemic:pencil"]
        self.assertEqual([row.split()[0] for row in rows], names)
        self.assertTrue(all(row.split()[1] == "200" for row in rows))
        self.assertEqual([row["structure"] for row in report["structures"]], names)
        first = report["structures"][1]
        self.assertEqual(first["casimir"], report["checks"]["casimir_sirs_endemic:first"]["max"])
        self.assertEqual(first["vector_field"], report["checks"]["pair_vector_field"]["max"])
        self.assertIsNone(report["structures"][3]["casimir"])
        self.assertEqual(rows[3].split()[-1], "-")
        self.assertIn("PASS", self.stderr.getvalue())

    def test_seed_makes_reports_repeatable(self):
        first = self.call("verify", {"model": SIRS}, points=50, seed=7)
        second = self.call("verify", {"model": SIRS}, points=50, seed=7)
        self.assertEqual(first, second)
        self.assertEqual(first["seed"], 7)

    def test_needs_exactly_one_subject(self):
        self.fails("verify", {}, 2)
        self.fails("verify", {"model": SIR, "interacting": EXCHANGE}, 2)


class CoupleCommandTests(CommandTestCase):
    def test_exchange_keeps_grand_total(self):
        report = self.call("couple", {**EXCHANGE, "initial": EXCHANGE_START, "t_end": 100, "dt": 0.01})
        self.assertEqual(report["audit"], "PASS")
        self.assertLessEqual(report["grand_total_drift"], 1e-9)
        self.assertGreater(max(report["population_drift"]), 1e-3)
        header, totals = self.csv("totals.csv")
        self.assertEqual(header, ["t", "N_1", "N_2", "N_3", "N_total"])
        np.testing.assert_allclose(totals[:, 1:4].sum(axis=1), totals[:, 4], atol=1e-12)
        header, first = self.csv("population_1.csv")
        self.assertEqual(header, ["t", "S_1", "I_1", "R_1", "N_1"])
        self.assertEqual(first.shape[0], totals.shape[0])

    def test_without_transfers_every_total_is_constant(self):
        report = self.call("couple", {"populations": [SIR, SIRS], "initial": [OUTBREAK, [0.6, 0.3, 0.1]], "t_end": 20})
        for drift in report["population_drift"]:
            self.assertLessEqual(drift, 1e-12)

    def test_inconsistent_orientations(self):
        transfers = [{"a": 1, "b": 2, "rate": "0.1*S_1"}, {"a": 2, "b": 1, "rate": "0.1*S_1"}]
        message = self.fails("couple", {"populations": [SIR, SIR], "transfers": transfers,
                                        "initial": [OUTBREAK, OUTBREAK]}, 2)
        self.assertIn("transfers", message)

    def test_initial_blocks_must_match(self):
        self.fails("couple", {**EXCHANGE, "initial": EXCHANGE_START[:2]}, 2)
        self.fails("couple", {**EXCHANGE, "initial": [[0.8, 0.2], *EXCHANGE_START[1:]]}, 2)


class SweepCommandTests(CommandTestCase):
    base = {"model": SIR, "initial": OUTBREAK, "t_end": 100, "dt": 0.05}

    def test_single_point_matches_simulate(self):
        sweep = self.call("sweep", {**self.base, "grid": {"beta": [1.0]}})
        simulate = self.call("simulate", self.base)
        entry = dict(sweep["points"][0])
        self.assertEqual(entry.pop("params"), {"beta": 1.0})
        self.assertEqual(entry, simulate)

    def test_peak_grows_with_infection_rate(self):
        report = self.call("sweep", {**self.base, "grid": {"beta": [0.5, 1.0, 2.0]}})
        self.assertEqual(report["axes"], ["beta"])
        peaks = [point["peak_infection"] for point in report["points"]]
        self.assertTrue(peaks[0] < peaks[1] < peaks[2])

    def test_duplicates_dropped_with_warning(self):
        report = self.call("sweep", {**self.base, "grid": {"beta": [1.0, 1.0, 2.0]}})
        self.assertEqual([p["params"]["beta"] for p in report["points"]], [1.0, 2.0])
        self.assertIn("dropped 1 duplicate", self.stderr.getvalue())

    def test_workers_keep_grid_order(self):
        config = {**self.base, "t_end": 20, "grid": {"beta": [0.5, 2.0], "alpha": [0.1, 0.2]}}
        serial = self.call("sweep", config, workers=1)
        parallel = self.call("sweep", config, workers=2)
        self.assertEqual(serial, parallel)
        self.assertEqual(serial["points"][1]["params"], {"alpha": 0.1, "beta": 2.0})

    def test_empty_grid(self):
        self.assertIn("grid", self.fails("sweep", {**self.base, "grid": {}}, 2))
        self.fails("sweep", {**self.base, "grid": {"beta": []}}, 2)
        self.fails("sweep", {**self.base, "grid": {"kappa": [1.0]}}, 2)


class ConfigTests(SimpleTestCase):
    def test_error_paths_are_dotted(self):
        detail = {
            "populations": [{}, {"flows": [{}, {"rate": ["This field is required."]}]}],
            "non_field_errors": ["give exactly one"],
        }
        self.assertEqual(flatten_errors(detail), [
            "populations.1.flows.1.rate: This field is required.",
            "config: give exactly one",
        ])

    def test_unreadable_sources(self):
        with self.assertRaises(ConfigError):
            load_config("/nonexistent/hamepi.json")
        with self.assertRaises(ConfigError):
            load_config("{not json")

    def test_grid_order_and_duplicates(self):
        points, duplicates = grid_points({"beta": [1.0, 2.0], "alpha": [0.1, 0.1]})
        self.assertEqual(duplicates, 2)
        self.assertEqual(points, [{"alpha": 0.1, "beta": 1.0}, {"alpha": 0.1, "beta": 2.0}])

    def test_front_end_only_runs_its_commands(self):
        with self.assertRaises(SystemExit) as ctx:
            main(["hamepi", "runserver"])
        self.assertEqual(ctx.exception.code, 2)

    def test_no_auth_or_model_settings(self):
        self.assertFalse(apps.is_installed("django.contrib.auth"))
        self.assertFalse(apps.is_installed("django.contrib.contenttypes"))
        self.assertFalse(settings.is_overridden("DEFAULT_AUTO_FIELD"))
