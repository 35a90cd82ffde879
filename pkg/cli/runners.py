# cli/runners.py
"""
What each command computes, kept apart from argument handling so that the
sweep workers and the tests can call it directly. Every runner takes
validated config data and returns a JSON-ready report.
"""
import itertools
import logging
import multiprocessing

import numpy as np

from bihamiltonian import casimir_catalog, casimir_of, domain_points, make_pair
from bihamiltonian.casimirs import FIRST_STRUCTURE_CASIMIRS
from bihamiltonian.pairs import SECOND_HALVES, VARIABLES
from compartments import canonical_poisson, model_from_dict, to_ode
from coupling import per_population_balance
from expressions.exceptions import DomainError
from poisson import HamiltonianSystem, check_pair, is_casimir, jacobi_report, summarise, total_population
from poisson.sampling import population_simplex_points, simplex_points
from solver import diagnostics, exact_solution, integrate_adaptive, integrate_rk4, write_columns, write_csv

logger = logging.getLogger(__name__)

MODEL_ONLY_KEYS = ("model", "structure")


def raw_model(model_data):
    """Validated model config without the objects the serializer attached."""
    return {key: value for key, value in model_data.items() if key not in MODEL_ONLY_KEYS}


def build_system(model, form):
    return to_ode(model) if form == "ode" else canonical_poisson(model)


def casimir_for(kind, model, state0):
    """Anchored first-structure Casimir for the SIR family, None elsewhere."""
    if kind not in FIRST_STRUCTURE_CASIMIRS or model.compartments != VARIABLES or model.distinguished != "R":
        return None
    s0 = float(state0[0])
    if not (0.0 < s0 < 1.0):
        return None
    return casimir_of(kind, model.parameters, s0)


def integrate(system, state0, options, casimir=None):
    if options["method"] == "rk4":
        return integrate_rk4(system, state0, options["t_end"], options["dt"], casimir=casimir,
                             domain_exit=options.get("domain_exit"))
    return integrate_adaptive(
        system, state0, options["t_end"], rtol=options["rtol"], atol=options["atol"], samples=options["samples"],
        method=options["method"], casimir=casimir, domain_exit=options.get("domain_exit"),
    )


def epidemic_summary(trajectory):
    """Peak infection, its time and the final susceptible fraction."""
    if "I" not in trajectory.variables or "S" not in trajectory.variables:
        return {}
    infected = trajectory.column("I")
    peak = int(np.argmax(infected))
    return {
        "peak_infection": float(infected[peak]),
        "peak_time": float(trajectory.times[peak]),
        "final_S": float(trajectory.column("S")[-1]),
    }


def run_model(model_config, initial, options, form="hamiltonian"):
    """(trajectory, report) for one model config; picklable input for sweep workers."""
    model = model_from_dict(model_config)
    system = build_system(model, form)
    casimir = casimir_for(model_config.get("builtin"), model, initial)
    trajectory = integrate(system, initial, options, casimir)
    hamiltonian = getattr(system, "hamiltonian", None)
    if hamiltonian is None:
        hamiltonian = total_population(system.variables)
    drift = diagnostics(trajectory, hamiltonian, casimir, system.parameters)
    report = {
        "model": model.name or "model",
        "system": form,
        "hypersurface_only": bool(getattr(system, "hypersurface_only", False)),
        "samples": len(trajectory),
        "t_final": trajectory.t_final,
        "truncated": trajectory.truncated,
        "domain_exit": trajectory.domain_exit.as_dict() if trajectory.domain_exit else None,
        **drift.as_dict(),
        **epidemic_summary(trajectory),
    }
    return trajectory, report


def simulate(data, out):
    options = dict(data)
    trajectory, report = run_model(raw_model(data["model"]), data["initial"], options, data["system"])
    write_csv(trajectory, out / "trajectory.csv")
    return report


def exact(data, out):
    model_data = data["model"]
    model = model_data["model"]
    s0 = data["s0"]
    solution = exact_solution(model_data["builtin"], model.parameters, s0, data["nodes"])
    times = np.linspace(0.0, data["t_end"], data["samples"])
    closed_form = solution.sample(times)
    numeric = integrate_adaptive(
        canonical_poisson(model), [s0, 1.0 - s0, 0.0], data["t_end"], rtol=data["rtol"], atol=data["atol"],
        times=times, domain_exit="flag",
    )
    if len(numeric) != len(closed_form):
        raise DomainError(f"numeric integration stopped at t = {numeric.t_final:.6g}")
    gap = np.max(np.abs(closed_form.states - numeric.states), axis=1)
    header = ["t", "S_exact", "I_exact", "R_exact", "S_num", "I_num", "R_num", "max_abs_diff"]
    write_columns(out / "exact.csv", header, [times, *closed_form.states.T, *numeric.states.T, gap])
    return {
        "kind": solution.kind,
        "parameters": dict(solution.parameters),
        "s0": s0,
        "s_inf": solution.s_inf,
        "horizon": solution.horizon,
        "samples": len(times),
        "max_abs_diff": float(np.max(gap)),
        "max_casimir": float(np.max(np.abs(closed_form.casimir))),
        "exit_time": solution.exit_time,
        "domain_exit": closed_form.domain_exit.as_dict() if closed_form.domain_exit else None,
    }


def _structure_row(name, jacobi, vector_field=None, casimir=None):
    return {
        "structure": name,
        "points": jacobi.points,
        "jacobi": jacobi.value,
        "vector_field": vector_field.value if vector_field is not None else None,
        "casimir": casimir.value if casimir is not None else None,
    }


def _model_checks(model_data, rng, points, tol):
    model = model_data["model"]
    structure = model_data.get("structure")
    samples = simplex_points(model.dim, points, rng)
    if structure is None:
        system = canonical_poisson(model)
    else:
        system = HamiltonianSystem(structure, total_population(model.compartments), model.parameters, "config")
    ode = to_ode(model)
    checks = {
        "jacobi": jacobi_report(system.structure, samples, model.parameters, tol),
        "hamilton_vs_ode": summarise(
            system.compiled_rhs(samples, model.parameters) - ode.compiled(samples, model.parameters), samples, tol,
        ),
    }
    rows = [_structure_row("canonical" if structure is None else "config", checks["jacobi"], checks["hamilton_vs_ode"])]
    kind = model_data.get("builtin")
    if structure is None and kind in SECOND_HALVES and model.compartments == VARIABLES and model.distinguished == "R":
        parameters = dict(model.parameters)
        pair = make_pair(kind, parameters["alpha"], parameters["beta"], parameters.get("mu", parameters.get("v")))
        pair_samples = domain_points(pair, points, rng)
        for name, result in check_pair(pair, pair_samples, tol).items():
            checks[f"pair_{name}"] = result
        for entry in casimir_catalog(kind, parameters, 0.5):
            checks[f"casimir_{entry.structure_id}"] = is_casimir(
                entry.structure, entry.casimir, pair_samples, entry.parameters, tol,
            )
        for half in ("first", "second"):
            rows.append(_structure_row(f"{kind}:{half}", checks[f"pair_jacobi_{half}"], checks["pair_vector_field"],
                                       checks[f"casimir_{kind}:{half}"]))
        rows.append(_structure_row(f"{kind}:pencil", checks["pair_compatibility"]))
    return model.name or "model", checks, rows


def _interacting_checks(system, rng, points, tol):
    samples = population_simplex_points(system.compartments_per_population, system.size, points, rng)
    rates = np.sum(system.velocity(samples), axis=0, keepdims=True)
    checks = {
        "jacobi": jacobi_report(system.structure, samples, system.parameters, tol),
        "total_rate": summarise(rates, samples, tol),
    }
    return system.name, checks, [_structure_row(system.name, checks["jacobi"])]


def verify(data, seed, points, tol):
    """Checks keyed by name plus one table row per structure involved."""
    rng = np.random.default_rng(seed)
    if "model" in data:
        subject, checks, rows = _model_checks(data["model"], rng, points, tol)
    else:
        subject, checks, rows = _interacting_checks(data["interacting"]["system"], rng, points, tol)
    status = "PASS" if all(result.ok for result in checks.values()) else "FAIL"
    logger.info("verify %s: %s over %d points", subject, status, points)
    return {
        "subject": subject,
        "points": points,
        "seed": seed,
        "tol": tol,
        "status": status,
        "checks": {name: result.as_dict() for name, result in checks.items()},
        "structures": rows,
    }


def couple(data, out):
    system = data["system"]
    state0 = np.concatenate([np.asarray(block, dtype=float) for block in data["initial"]])
    trajectory = integrate(system, state0, data)
    totals = system.population_totals(trajectory.states.T)
    grand = totals.sum(axis=0)
    for a in range(1, system.size + 1):
        block = trajectory.states[:, system.population_slice(a)]
        header = ["t", *system.population_variables(a), f"N_{a}"]
        write_columns(out / f"population_{a}.csv", header, [trajectory.times, *block.T, totals[a - 1]])
    header = ["t", *(f"N_{a}" for a in range(1, system.size + 1)), "N_total"]
    write_columns(out / "totals.csv", header, [trajectory.times, *totals, grand])
    drift = float(np.max(np.abs(grand - grand[0])))
    balance = per_population_balance(system, trajectory) if len(trajectory) > 1 else None
    return {
        "system": system.name,
        "populations": system.size,
        "samples": len(trajectory),
        "t_final": trajectory.t_final,
        "truncated": trajectory.truncated,
        "domain_exit": trajectory.domain_exit.as_dict() if trajectory.domain_exit else None,
        "grand_total_drift": drift,
        "audit_tol": data["audit_tol"],
        "audit": "PASS" if drift <= data["audit_tol"] else "FAIL",
        "population_drift": [float(np.max(np.abs(row - row[0]))) for row in totals],
        "balance_residual": balance.max_residual if balance is not None else None,
    }


def grid_points(grid):
    """Cartesian product over the axes in sorted order, duplicates dropped; returns (points, duplicates)."""
    axes = sorted(grid)
    combos = list(itertools.product(*(grid[axis] for axis in axes)))
    unique = list(dict.fromkeys(combos))
    duplicates = len(combos) - len(unique)
    if duplicates:
        logger.warning("dropped %d duplicate grid points", duplicates)
    return [dict(zip(axes, combo)) for combo in unique], duplicates


def sweep_point(payload):
    model_config, point, initial, options, form = payload
    config = {**model_config, "params": {**model_config.get("params", {}), **point}}
    _, report = run_model(config, initial, options, form)
    return {"params": point, **report}


def sweep(data, workers=1):
    """Returns (report, duplicates). Points keep grid order whatever the worker count."""
    points, duplicates = grid_points(data["grid"])
    options = {key: data.get(key) for key in ("method", "t_end", "dt", "rtol", "atol", "samples", "domain_exit")}
    model_config = raw_model(data["model"])
    payloads = [(model_config, point, list(data["initial"]), options, data["system"]) for point in points]
    if workers > 1 and len(payloads) > 1:
        with multiprocessing.Pool(min(workers, len(payloads))) as pool:
            results = pool.map(sweep_point, payloads)
    else:
        results = [sweep_point(payload) for payload in payloads]
    logger.info("swept %d grid points with %d workers", len(results), workers)
    return {"axes": sorted(data["grid"]), "points": results}, duplicates
