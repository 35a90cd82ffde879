# solver/exact.py
"""
Exact solutions from Casimir reduction.

On the leaf through (S0, 1 - S0, 0) the recovered fraction is a function
R = rho(S), so S' = g(S) is a scalar equation. Its time map

    t(S) = integral from S0 to S of dz / g(z)

is tabulated once by adaptive quadrature on a grid refined geometrically
toward the equilibrium S_inf and inverted by bracketed root finding.
"""
import logging
import math
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from bihamiltonian import casimir_of

from .exceptions import BracketError, HorizonError, IntegrationError, UnsupportedModelError
from .integrators import POLICIES
from .trajectories import DomainExit, Trajectory, evaluate_along

logger = logging.getLogger(__name__)

VARIABLES = ("S", "I", "R")
NODES = 400
GUARD = 1e-9
SCAN_STEPS = 60
XTOL = 1e-14
MAXITER = 200
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12


def _check(alpha, beta, s0, **rates):
    if not (alpha > 0.0) or not (beta > 0.0):
        raise IntegrationError(f"alpha and beta must be positive, got alpha={alpha}, beta={beta}")
    if not (0.0 < s0 < 1.0):
        raise IntegrationError(f"S0 must lie in (0, 1), got {s0}")
    for name, value in rates.items():
        if value < 0.0:
            raise IntegrationError(f"{name} must be non-negative, got {value}")


class Leaf:
    """R = rho(S) and S' = g(S) on the leaf through (S0, 1 - S0, 0)."""
    kind = ""
    pole = 0.0

    def __init__(self, alpha, beta, s0):
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.s0 = float(s0)
        self.i0 = 1.0 - self.s0

    @property
    def parameters(self):
        return {"alpha": self.alpha, "beta": self.beta}

    def recovered(self, s):
        raise NotImplementedError

    def infected(self, s):
        return 1.0 - s - self.recovered(s)

    def rate(self, s):
        raise NotImplementedError


class SirLeaf(Leaf):
    kind = "sir"

    def recovered(self, s):
        return -(self.alpha / self.beta) * math.log(s / self.s0)

    def rate(self, s):
        return -self.beta * s * self.infected(s)


class SirsLeaf(Leaf):
    kind = "sirs_endemic"

    def __init__(self, alpha, beta, mu, s0):
        super().__init__(alpha, beta, s0)
        self.mu = float(mu)
        self.pole = self.mu / self.beta
        if self.beta * self.s0 - self.mu <= 0.0:
            raise IntegrationError(f"beta*S0 - mu must be positive, got {self.beta * self.s0 - self.mu}")

    @property
    def parameters(self):
        return {**super().parameters, "mu": self.mu}

    def recovered(self, s):
        return -(self.alpha / self.beta) * math.log((self.beta * s - self.mu) / (self.beta * self.s0 - self.mu))

    def rate(self, s):
        return -(self.beta * s - self.mu) * self.infected(s)


class VaccILeaf(Leaf):
    kind = "sir_vacc_i"

    def __init__(self, alpha, beta, v, s0):
        super().__init__(alpha, beta, s0)
        self.v = float(v)
        self.pole = -self.v / self.beta

    @property
    def parameters(self):
        return {**super().parameters, "v": self.v}

    def recovered(self, s):
        return -((self.alpha + self.v) / self.beta) * math.log((self.beta * s + self.v) / (self.beta * self.s0 + self.v))

    def rate(self, s):
        return -(self.beta * s + self.v) * self.infected(s)


class VaccSLeaf(Leaf):
    """
    rho(S) solves R + (alpha/beta) log(S/S0) - (v/beta) log((1 - S - R)/I0) = 0.

    The solve runs in u = log I, where the residual is strictly decreasing and
    [log I0 + (beta/v) A - 1, log(1 - S)] always brackets the root
    (A = (alpha/beta) log(S/S0) <= 0 for S <= S0).
    """
    kind = "sir_vacc_s"

    def __init__(self, alpha, beta, v, s0):
        super().__init__(alpha, beta, s0)
        self.v = float(v)

    @property
    def parameters(self):
        return {**super().parameters, "v": self.v}

    def log_infected(self, s):
        a = (self.alpha / self.beta) * math.log(s / self.s0)
        if self.v == 0.0:
            i = 1.0 - s + a
            if i <= 0.0:
                raise BracketError(s, "leaf has no infected fraction left")
            return math.log(i)
        ratio = self.v / self.beta
        log_i0 = math.log(self.i0)

        def residual(u):
            return 1.0 - s + a - math.exp(u) - ratio * (u - log_i0)

        high = math.log(1.0 - s)
        low = log_i0 + a / ratio - 1.0
        f_low, f_high = residual(low), residual(high)
        if f_high == 0.0:
            return high
        if f_low * f_high > 0.0:
            raise BracketError(s, f"residual {f_low:.3g} and {f_high:.3g} at the ends")
        logger.debug("inner bracket at S=%.6g: [%.6g, %.6g]", s, low, high)
        return brentq(residual, low, high, xtol=XTOL, maxiter=MAXITER)

    def infected(self, s):
        return math.exp(self.log_infected(s))

    def recovered(self, s):
        return 1.0 - s - self.infected(s)

    def rate(self, s):
        return -s * (self.beta * self.infected(s) + self.v)


def equilibrium(leaf):
    """
    Root of I(S) between the pole of the leaf and S0, found by halving the
    distance to the pole until I changes sign. Without a sign change the
    pole itself is the limit.
    """
    span = leaf.s0 - leaf.pole
    previous = leaf.s0
    for step in range(1, SCAN_STEPS + 1):
        candidate = leaf.pole + span * 0.5 ** step
        try:
            value = leaf.infected(candidate)
        except BracketError:
            value = -1.0
        if value < 0.0:
            logger.debug("equilibrium bracket [%.17g, %.17g]", candidate, previous)
            return brentq(_safe_infected(leaf), candidate, previous, xtol=XTOL, maxiter=MAXITER)
        if value == 0.0:
            return candidate
        previous = candidate
    return leaf.pole


def _safe_infected(leaf):
    def infected(s):
        try:
            return leaf.infected(s)
        except BracketError:
            return -1.0
    return infected


class ExactSolution:
    """
    Tabulated time map of one leaf: S decreases from S0 at t = 0 toward
    S_inf, reached only as t -> infinity. The valid horizon stops at
    S_inf + delta with delta = GUARD * (S0 - S_inf).

    When S_inf < 0 the leaf crosses S = 0 at `exit_time`; samples past it
    leave the domain and `sample` flags or truncates them.
    """

    def __init__(self, leaf, nodes=NODES):
        self.leaf = leaf
        self.s_inf = equilibrium(leaf)
        self.delta = GUARD * (leaf.s0 - self.s_inf)
        offsets = (leaf.s0 - self.s_inf) * np.geomspace(1.0, GUARD, int(nodes))
        self.nodes = self.s_inf + offsets
        self.nodes[0] = leaf.s0
        increments = [self._integral(a, b) for a, b in zip(self.nodes[:-1], self.nodes[1:])]
        self.node_times = np.concatenate([[0.0], np.cumsum(increments)])
        self.exit_time = self.time_of(0.0) if self.nodes[-1] < 0.0 else None
        logger.debug("%s: tabulated %d nodes, S_inf = %.17g", leaf.kind, self.nodes.size, self.s_inf)
        logger.info("%s exact solution valid up to t = %.6g", leaf.kind, self.horizon)
        if self.exit_time is not None:
            logger.info("%s exact solution reaches S = 0 at t = %.6g", leaf.kind, self.exit_time)

    @property
    def kind(self):
        return self.leaf.kind

    @property
    def parameters(self):
        return self.leaf.parameters

    @property
    def s0(self):
        return self.leaf.s0

    @property
    def horizon(self):
        return float(self.node_times[-1])

    def _integral(self, upper, lower):
        """t(lower) - t(upper) for lower < upper on the branch."""
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", IntegrationWarning)
            value, _ = quad(lambda z: 1.0 / self.leaf.rate(z), upper, lower, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                            limit=200)
        for warning in caught:
            logger.debug("quad on [%.17g, %.17g]: %s", lower, upper, str(warning.message).strip().partition("\n")[0])
        return value

    def time_of(self, s):
        """t(S) for S on the tabulated branch."""
        if not (self.nodes[-1] <= s <= self.s0):
            raise HorizonError(float("nan"), self.horizon)
        k = int(np.searchsorted(-self.nodes, -s, side="left"))
        if k < self.nodes.size and self.nodes[k] == s:
            return float(self.node_times[k])
        return float(self.node_times[k - 1] + self._integral(self.nodes[k - 1], s))

    def susceptible(self, t):
        t = float(t)
        if t < 0.0:
            raise HorizonError(t, self.horizon)
        if t == 0.0:
            return self.s0
        if t > self.horizon:
            raise HorizonError(t, self.horizon)
        k = int(np.searchsorted(self.node_times, t, side="left"))
        if self.node_times[k] == t:
            return float(self.nodes[k])
        start, base = self.nodes[k - 1], self.node_times[k - 1]

        def residual(s):
            return base + self._integral(start, s) - t

        try:
            return brentq(residual, self.nodes[k], start, xtol=XTOL, maxiter=MAXITER)
        except ValueError:
            # t sits on a node up to quadrature roundoff
            ends = (self.nodes[k], start)
            return float(min(ends, key=lambda s: abs(residual(s))))

    def state(self, t):
        s = self.susceptible(t)
        if s == self.s0:
            return np.array([self.s0, self.leaf.i0, 0.0])
        r = self.leaf.recovered(s)
        return np.array([s, 1.0 - s - r, r])

    def states(self, times):
        return np.array([self.state(t) for t in np.asarray(times, dtype=float)]).reshape(-1, 3)

    def inversion_residuals(self, times):
        """|t(S(t)) - t| for each requested time."""
        return np.array([abs(self.time_of(self.susceptible(t)) - t) for t in np.asarray(times, dtype=float)])

    def casimir(self):
        return casimir_of(self.kind, self.parameters, self.s0)

    def sample(self, times, domain_exit="flag"):
        """
        Trajectory at `times`. A negative compartment is handled like the
        integrators do: "flag" records the first one, "truncate" also stops
        there, "ignore" skips the check.
        """
        if domain_exit not in POLICIES:
            raise IntegrationError(f"domain_exit must be one of {POLICIES}, got {domain_exit!r}")
        times = np.asarray(times, dtype=float)
        states = self.states(times)
        exit_event = None
        truncated = False
        negative = np.flatnonzero(np.any(states < 0.0, axis=1)) if domain_exit != "ignore" else ()
        if len(negative):
            k = int(negative[0])
            column = int(np.argmin(states[k]))
            exit_event = DomainExit(float(times[k]), VARIABLES[column], float(states[k, column]),
                                    f"{VARIABLES[column]} < 0")
            logger.info("%s exact solution left the domain at t = %.6g", self.kind, times[k])
            if domain_exit == "truncate":
                times, states, truncated = times[:k], states[:k], True
        c_values, _ = evaluate_along(self.casimir(), VARIABLES, states, self.parameters)
        info = {"kind": self.kind, "s_inf": self.s_inf, "horizon": self.horizon, "exit_time": self.exit_time}
        return Trajectory(VARIABLES, times, states, states.sum(axis=1), c_values, exit_event, truncated, info)


def sir_solution(alpha, beta, s0, nodes=NODES):
    _check(alpha, beta, s0)
    return ExactSolution(SirLeaf(alpha, beta, s0), nodes)


def sirs_solution(alpha, beta, mu, s0, nodes=NODES):
    _check(alpha, beta, s0, mu=mu)
    if mu == 0.0:
        return sir_solution(alpha, beta, s0, nodes)
    return ExactSolution(SirsLeaf(alpha, beta, mu, s0), nodes)


def vacc_i_solution(alpha, beta, v, s0, nodes=NODES):
    _check(alpha, beta, s0, v=v)
    return ExactSolution(VaccILeaf(alpha, beta, v, s0), nodes)


def vacc_s_solution(alpha, beta, v, s0, nodes=NODES):
    _check(alpha, beta, s0, v=v)
    return ExactSolution(VaccSLeaf(alpha, beta, v, s0), nodes)


def exact_sir(alpha, beta, s0, times):
    return sir_solution(alpha, beta, s0).sample(times)


def exact_sirs(alpha, beta, mu, s0, times):
    return sirs_solution(alpha, beta, mu, s0).sample(times)


def exact_vacc_i(alpha, beta, v, s0, times):
    return vacc_i_solution(alpha, beta, v, s0).sample(times)


def exact_vacc_s(alpha, beta, v, s0, times):
    return vacc_s_solution(alpha, beta, v, s0).sample(times)


BUILDERS = {
    "sir": lambda p, s0, nodes: sir_solution(p["alpha"], p["beta"], s0, nodes),
    "sirs_endemic": lambda p, s0, nodes: sirs_solution(p["alpha"], p["beta"], p["mu"], s0, nodes),
    "sir_vacc_i": lambda p, s0, nodes: vacc_i_solution(p["alpha"], p["beta"], p["v"], s0, nodes),
    "sir_vacc_s": lambda p, s0, nodes: vacc_s_solution(p["alpha"], p["beta"], p["v"], s0, nodes),
}


def exact_solution(kind, parameters, s0, nodes=NODES):
    """Exact solution of a built-in model by name; only the SIR family reduces."""
    try:
        build = BUILDERS[kind]
    except KeyError:
        raise UnsupportedModelError(kind) from None
    try:
        return build(parameters, float(s0), nodes)
    except KeyError as exc:
        raise IntegrationError(f"parameter {exc.args[0]} is required for the {kind} exact solution") from None
