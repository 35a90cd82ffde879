# poisson/sampling.py
"""Seeded sample sets for the numeric identity checks."""
import logging

import numpy as np

from expressions.exceptions import DomainError

logger = logging.getLogger(__name__)

DEFAULT_LOW = 0.01
DEFAULT_HIGH = 0.99


def box_points(dim, count, rng, low=DEFAULT_LOW, high=DEFAULT_HIGH):
    """Uniform points of (low, high)^dim as a (dim, count) matrix."""
    return rng.uniform(low, high, size=(dim, count))


def simplex_points(dim, count, rng, floor=DEFAULT_LOW):
    """Uniform points of the open simplex {x > floor, sum(x) = 1} as a (dim, count) matrix."""
    if dim * floor >= 1.0:
        raise ValueError(f"floor {floor} leaves no room in a {dim}-simplex")
    weights = rng.dirichlet(np.ones(dim), size=count).T
    return floor + (1.0 - dim * floor) * weights


def population_simplex_points(dim_per_population, populations, count, rng, floor=DEFAULT_LOW):
    """Each population block sampled on its own unit simplex."""
    blocks = [simplex_points(dim_per_population, count, rng, floor) for _ in range(populations)]
    return np.vstack(blocks)


def _batch_ok(result):
    result = np.asarray(result)
    if result.ndim == 1:
        result = result[np.newaxis, :]
    if result.dtype == bool:
        return np.all(result, axis=0)
    return np.all(np.isfinite(result), axis=0)


def _point_ok(check, point):
    try:
        result = np.asarray(check(point))
    except DomainError:
        return False
    return bool(np.all(result)) if result.dtype == bool else bool(np.all(np.isfinite(result)))


def valid_columns(points, checks):
    """
    Boolean mask of the columns of a (n, m) point matrix on which every check holds.

    A check maps points to values (finite means valid, a DomainError means the
    batch has a bad column) or to booleans (guards such as beta*S - mu > 0).
    Batches are tried first; a failing batch is retried column by column.
    """
    mask = np.ones(points.shape[1], dtype=bool)
    for check in checks:
        try:
            mask &= _batch_ok(check(points))
        except DomainError:
            mask &= np.array([_point_ok(check, points[:, j]) for j in range(points.shape[1])])
    return mask


def sample_valid(sampler, count, rng, checks=(), max_rounds=50):
    """Draw `count` points from `sampler(count, rng)`, resampling any that fail a check."""
    kept = []
    have = 0
    for _ in range(max_rounds):
        points = sampler(max(count - have, 1) * 2, rng)
        mask = valid_columns(points, checks) if checks else np.ones(points.shape[1], dtype=bool)
        good = points[:, mask]
        kept.append(good)
        have += good.shape[1]
        if have >= count:
            return np.hstack(kept)[:, :count]
    raise DomainError(f"could only draw {have} of {count} valid sample points")
