# solver/integrators.py
"""
Fixed-step RK4 and adaptive embedded-pair integration of any system exposing
`variables` and `velocity(state)`.

Domain exit policies:
    "truncate"  stop at the last sample with every compartment >= 0 (default)
    "flag"      record the first negative compartment and keep integrating
    "ignore"    no sign check
Non-finite states and domain errors raised by the right-hand side always
truncate.
"""
import logging
import math

import numpy as np
from scipy.integrate import DOP853, RK45

from expressions.exceptions import DomainError
from poisson import total_population

from .exceptions import IntegrationError, StepSizeUnderflowError
from .trajectories import DomainExit, Trajectory, evaluate_along

logger = logging.getLogger(__name__)

POLICIES = ("truncate", "flag", "ignore")
METHODS = {"DOP853": DOP853, "RK45": RK45}


def _policy(system, domain_exit):
    policy = domain_exit or getattr(system, "domain_exit", "truncate")
    if policy not in POLICIES:
        raise IntegrationError(f"domain_exit must be one of {POLICIES}, got {policy!r}")
    return policy


def _initial_state(system, state0):
    state = np.asarray(state0, dtype=float).ravel()
    if state.size != len(system.variables):
        raise IntegrationError(f"initial state has {state.size} entries for {len(system.variables)} variables")
    if not np.all(np.isfinite(state)):
        raise IntegrationError("initial state must be finite")
    return state


def _negative(state, variables):
    """(variable, value) of the most negative compartment, or None."""
    index = int(np.argmin(state))
    if state[index] < 0.0:
        return variables[index], float(state[index])
    return None


def _finish(system, times, states, domain_exit, truncated, casimir, info):
    variables = tuple(system.variables)
    parameters = getattr(system, "parameters", {})
    hamiltonian = getattr(system, "hamiltonian", None)
    if hamiltonian is None:
        hamiltonian = total_population(variables)
    states = np.asarray(states, dtype=float).reshape(len(times), len(variables))
    h_values, _ = evaluate_along(hamiltonian, variables, states, parameters)
    c_values = evaluate_along(casimir, variables, states, parameters)[0] if casimir is not None else None
    trajectory = Trajectory(variables, times, states, h_values, c_values, domain_exit, truncated, info)
    if domain_exit is not None:
        logger.info("%s left the domain at t = %.6g (%s)", getattr(system, "name", "") or "system",
                    domain_exit.time, domain_exit.reason)
    logger.info("integrated to t = %.6g with %d samples", trajectory.t_final, len(trajectory))
    return trajectory


def rk4_grid(t_end, dt):
    """t_k = k*dt with the last step clipped to land on t_end."""
    if not (dt > 0.0) or not math.isfinite(dt):
        raise IntegrationError(f"dt must be positive, got {dt}")
    if not (t_end >= 0.0) or not math.isfinite(t_end):
        raise IntegrationError(f"t_end must be non-negative, got {t_end}")
    steps = math.ceil(t_end / dt - 1e-9)
    times = np.arange(steps + 1, dtype=float) * dt
    if steps:
        times[-1] = t_end
    return times


def rk4_step(velocity, state, h):
    k1 = velocity(state)
    k2 = velocity(state + 0.5 * h * k1)
    k3 = velocity(state + 0.5 * h * k2)
    k4 = velocity(state + h * k3)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rk4(system, state0, t_end, dt, casimir=None, domain_exit=None):
    """Classical fixed-step fourth-order Runge-Kutta, sampled at every step."""
    policy = _policy(system, domain_exit)
    state = _initial_state(system, state0)
    grid = rk4_grid(t_end, dt)
    variables = tuple(system.variables)
    states = np.empty((grid.size, state.size))
    states[0] = state
    stored = 1
    exit_event = None
    truncated = False
    for k in range(1, grid.size):
        h = grid[k] - grid[k - 1]
        try:
            state = rk4_step(system.velocity, state, h)
        except DomainError as exc:
            exit_event = DomainExit(float(grid[k - 1]), None, float("nan"), str(exc))
            truncated = True
            break
        if not np.all(np.isfinite(state)):
            exit_event = DomainExit(float(grid[k]), None, float("nan"), "non-finite state")
            truncated = True
            break
        negative = _negative(state, variables) if policy != "ignore" else None
        if negative is not None and exit_event is None:
            exit_event = DomainExit(float(grid[k]), negative[0], negative[1], f"{negative[0]} < 0")
            if policy == "truncate":
                truncated = True
                break
        states[stored] = state
        stored += 1
    info = {"method": "rk4", "dt": float(dt)}
    return _finish(system, grid[:stored], states[:stored], exit_event, truncated, casimir, info)


def integrate_adaptive(system, state0, t_end, rtol=1e-8, atol=1e-10, times=None, samples=1001,
                       method="DOP853", casimir=None, domain_exit=None):
    """
    Embedded-pair adaptive integration with dense output at `times`
    (default: `samples` equally spaced points of [0, t_end]).
    """
    if not (rtol > 0.0) or not (atol > 0.0):
        raise IntegrationError(f"rtol and atol must be positive, got rtol={rtol}, atol={atol}")
    try:
        stepper_class = METHODS[method]
    except KeyError:
        raise IntegrationError(f"unknown method '{method}'; choose one of {sorted(METHODS)}") from None
    policy = _policy(system, domain_exit)
    state = _initial_state(system, state0)
    if not (t_end > 0.0) or not math.isfinite(t_end):
        raise IntegrationError(f"t_end must be positive, got {t_end}")
    requested = np.linspace(0.0, t_end, int(samples)) if times is None else np.asarray(times, dtype=float)
    if requested.size == 0 or requested[0] != 0.0 or np.any(np.diff(requested) <= 0.0) or requested[-1] > t_end:
        raise IntegrationError("times must start at 0, increase strictly and stay within [0, t_end]")
    variables = tuple(system.variables)

    stepper = stepper_class(lambda t, y: system.velocity(y), 0.0, state, t_end, rtol=rtol, atol=atol)
    kept_times = [0.0]
    kept_states = [state]
    next_index = 1
    exit_event = None
    truncated = False
    while stepper.status == "running" and next_index < requested.size:
        t_before = stepper.t
        try:
            message = stepper.step()
        except DomainError as exc:
            exit_event = DomainExit(float(t_before), None, float("nan"), str(exc))
            truncated = True
            break
        if stepper.status == "failed":
            raise StepSizeUnderflowError(float(stepper.t), message or "")
        stop = int(np.searchsorted(requested, stepper.t, side="right"))
        if stop <= next_index:
            continue
        chunk_times = requested[next_index:stop]
        chunk = np.atleast_2d(stepper.dense_output()(chunk_times)).T
        for t, row in zip(chunk_times, chunk):
            if not np.all(np.isfinite(row)):
                exit_event = DomainExit(float(t), None, float("nan"), "non-finite state")
                truncated = True
                break
            negative = _negative(row, variables) if policy != "ignore" else None
            if negative is not None and exit_event is None:
                exit_event = DomainExit(float(t), negative[0], negative[1], f"{negative[0]} < 0")
                if policy == "truncate":
                    truncated = True
                    break
            kept_times.append(float(t))
            kept_states.append(row)
        if truncated:
            break
        next_index = stop
    info = {"method": method, "rtol": float(rtol), "atol": float(atol)}
    return _finish(system, np.array(kept_times), np.array(kept_states), exit_event, truncated, casimir, info)


def rk4_order(system, state0, t_end, dt, reference=None):
    """
    Error ratio e(dt) / e(dt/2) at t_end against a tight adaptive reference;
    about 16 for a fourth-order method.
    """
    if reference is None:
        reference = integrate_adaptive(
            system, state0, t_end, rtol=1e-13, atol=1e-15, times=[0.0, t_end], domain_exit="ignore",
        ).final_state
    coarse = integrate_rk4(system, state0, t_end, dt, domain_exit="ignore").final_state
    fine = integrate_rk4(system, state0, t_end, dt / 2.0, domain_exit="ignore").final_state
    coarse_error = float(np.max(np.abs(coarse - reference)))
    fine_error = float(np.max(np.abs(fine - reference)))
    ratio = coarse_error / fine_error if fine_error > 0.0 else math.inf
    logger.debug("rk4 errors %.3e -> %.3e (ratio %.2f)", coarse_error, fine_error, ratio)
    return ratio
