# poisson/checks.py
"""
Numeric verification of Poisson-geometric identities over sample points.

Sample sets are (n, m) matrices (one column per point) in the structure's
variable order; a single point may be passed as a length-n vector.
"""
import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np

from expressions import compile_exprs

from .exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


class CheckResult(NamedTuple):
    ok: bool
    value: float
    points: int
    worst: Optional[Tuple[float, ...]] = None

    def as_dict(self):
        return {
            "ok": self.ok,
            "max": self.value,
            "points": self.points,
            "worst_point": list(self.worst) if self.worst is not None else None,
        }


def as_columns(samples, dim):
    points = np.asarray(samples, dtype=float)
    if points.ndim == 1:
        points = points[:, np.newaxis]
    if points.shape[0] != dim and points.ndim == 2 and points.shape[1] == dim:
        points = points.T
    if points.shape[0] != dim:
        raise DimensionMismatchError(range(points.shape[0]), range(dim))
    return points


def summarise(values, points, tol):
    """Max |value| over expressions and columns, with the column that attains it."""
    if values.size == 0 or points.shape[1] == 0:
        return CheckResult(True, 0.0, points.shape[1], None)
    magnitude = np.max(np.abs(values), axis=0)
    worst = int(np.argmax(magnitude))
    peak = float(magnitude[worst])
    return CheckResult(bool(peak <= tol), peak, points.shape[1], tuple(float(x) for x in points[:, worst]))


def bracket(ps, f, g):
    return ps.bracket(f, g)


def hamiltonian_vector_field(hs, state):
    """Velocity x'^mu = {x^mu, H} at one state (or a batch of states)."""
    return hs.velocity(state)


def jacobi_values(ps, points, parameters):
    if ps.dim < 3:
        return np.zeros((0, points.shape[1]))
    return ps.compiled_jacobi(points, parameters)


def jacobi_residual(ps, state, parameters=None):
    """Max over all triples of the cyclic Jacobi sum at one state."""
    state = np.asarray(state, dtype=float)
    values = jacobi_values(ps, state, parameters or {}) if ps.dim >= 3 else np.zeros(0)
    return float(np.max(np.abs(values))) if values.size else 0.0


def jacobi_report(ps, samples, parameters=None, tol=DEFAULT_TOL):
    points = as_columns(samples, ps.dim)
    result = summarise(jacobi_values(ps, points, parameters or {}), points, tol)
    logger.debug("Jacobi check of %s over %d points: %.3e", ps.name or "structure", result.points, result.value)
    return result


def is_casimir(ps, c, samples, parameters=None, tol=DEFAULT_TOL):
    """
    Check pi^#(dC) = 0 at every sample.

    Returns a CheckResult whose `ok` is the verdict and `value` the max defect
    over samples and components.
    """
    points = as_columns(samples, ps.dim)
    compiled = compile_exprs(ps.sharp(c), ps.variables)
    return summarise(compiled(points, parameters or {}), points, tol)


def pencil(ps1, ps2, lam):
    """(1 - lam) pi1 + lam pi2, entrywise."""
    ps1._require_same(ps2)
    lam = float(lam)
    return ps1.scaled(1.0 - lam).plus(ps2.scaled(lam), name=f"pencil({ps1.name},{ps2.name},{lam:g})")


def check_compatibility(ps1, ps2, samples, parameters=None, tol=DEFAULT_TOL):
    """pi1 and pi2 are compatible when pi1 + pi2 satisfies Jacobi."""
    return jacobi_report(ps1.plus(ps2), samples, parameters, tol)


def hypersurface_gap(f, g, variables, samples, parameters=None, tol=DEFAULT_TOL, up_to_constant=False):
    """
    Max |f - g| over samples, typically drawn on the unit-sum hypersurface.

    With `up_to_constant` the difference is measured against its value at the
    first sample, so functions differing by an additive constant pass.
    """
    points = as_columns(samples, len(variables))
    difference = compile_exprs([f - g], variables)(points, parameters or {})
    if up_to_constant and points.shape[1]:
        difference = difference - difference[:, :1]
    return summarise(difference, points, tol)


def vector_field_mismatch(pair, samples, tol=DEFAULT_TOL):
    """Max componentwise |pi1^# dH1 - pi2^# dH2|."""
    points = as_columns(samples, len(pair.variables))
    first = pair.first.compiled_rhs(points, pair.first.parameters)
    second = pair.second.compiled_rhs(points, pair.second.parameters)
    return summarise(first - second, points, tol)


def check_pair(pair, samples, tol=DEFAULT_TOL):
    """Every identity a bi-Hamiltonian pair must satisfy, keyed by check name."""
    parameters = pair.parameters
    report = {
        "jacobi_first": jacobi_report(pair.first.structure, samples, parameters, tol),
        "jacobi_second": jacobi_report(pair.second.structure, samples, parameters, tol),
        "compatibility": jacobi_report(pair.summed_structure, samples, parameters, tol),
        "vector_field": vector_field_mismatch(pair, samples, tol),
    }
    if not all(result.ok for result in report.values()):
        logger.info("pair %s failed: %s", pair.name, {k: v.value for k, v in report.items() if not v.ok})
    return report
