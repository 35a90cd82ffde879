# solver/trajectories.py
"""Sampled solution curves, their conservation diagnostics and CSV output."""
import csv
import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, NamedTuple, Optional, Tuple

import numpy as np

from expressions import compile_exprs
from expressions.exceptions import DomainError

logger = logging.getLogger(__name__)

CSV_FORMAT = "{:.17g}"


class DomainExit(NamedTuple):
    """First sample that left the domain: a negative compartment or a failed evaluation."""
    time: float
    variable: Optional[str]
    value: float
    reason: str

    def as_dict(self):
        return {"time": self.time, "variable": self.variable, "value": self.value, "reason": self.reason}


@dataclass(frozen=True, eq=False)
class Trajectory:
    variables: Tuple[str, ...]
    times: np.ndarray
    states: np.ndarray
    hamiltonian: Optional[np.ndarray] = None
    casimir: Optional[np.ndarray] = None
    domain_exit: Optional[DomainExit] = None
    truncated: bool = False
    info: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float).reshape(times.size, len(self.variables))
        if times.size > 1 and not np.all(np.diff(times) > 0.0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "info", MappingProxyType(dict(self.info)))

    def __len__(self):
        return self.times.size

    @property
    def flagged(self):
        return self.domain_exit is not None

    @property
    def t_final(self):
        return float(self.times[-1])

    @property
    def final_state(self):
        return self.states[-1].copy()

    def column(self, name):
        try:
            return self.states[:, self.variables.index(name)]
        except ValueError:
            raise KeyError(f"'{name}' is not a variable of this trajectory") from None

    def at(self, t, atol=1e-9):
        """State stored at grid time t."""
        index = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[index] - t) > atol:
            raise KeyError(f"t = {t} is not on the stored grid")
        return self.states[index].copy()

    def with_diagnostics(self, hamiltonian=None, casimir=None):
        return Trajectory(
            self.variables, self.times, self.states,
            self.hamiltonian if hamiltonian is None else hamiltonian,
            self.casimir if casimir is None else casimir,
            self.domain_exit, self.truncated, self.info,
        )


class DriftReport(NamedTuple):
    h_drift: float
    casimir_drift: Optional[float]
    failed_samples: Tuple[int, ...] = ()

    def as_dict(self):
        return {
            "h_drift": self.h_drift,
            "casimir_drift": self.casimir_drift,
            "failed_samples": list(self.failed_samples),
        }


def evaluate_along(expr, variables, states, parameters=None):
    """
    Values of `expr` at every row of `states`.

    A batch domain error is retried row by row; rows that still fail are NaN
    and their indices are returned alongside the values.
    """
    compiled = compile_exprs([expr], variables)
    parameters = parameters or {}
    states = np.atleast_2d(np.asarray(states, dtype=float))
    try:
        return compiled(states.T, parameters)[0], ()
    except DomainError:
        pass
    values = np.full(states.shape[0], np.nan)
    failed = []
    for row, state in enumerate(states):
        try:
            values[row] = compiled(state, parameters)[0]
        except DomainError:
            failed.append(row)
    logger.info("%d of %d samples outside the domain of %s", len(failed), states.shape[0], expr)
    return values, tuple(failed)


def _drift(values):
    if values.size == 0:
        return 0.0
    finite = values[np.isfinite(values)]
    if finite.size == 0 or not np.isfinite(values[0]):
        return float("nan")
    return float(np.max(np.abs(finite - values[0])))


def diagnostics(trajectory, hamiltonian, casimir=None, parameters=None):
    """max |H(t) - H(0)| and, when a Casimir is given, max |C(t) - C(0)| over the stored grid."""
    h_values, h_failed = evaluate_along(hamiltonian, trajectory.variables, trajectory.states, parameters)
    failed = set(h_failed)
    casimir_drift = None
    if casimir is not None:
        c_values, c_failed = evaluate_along(casimir, trajectory.variables, trajectory.states, parameters)
        failed.update(c_failed)
        casimir_drift = _drift(c_values)
    return DriftReport(_drift(h_values), casimir_drift, tuple(sorted(failed)))


def write_csv(trajectory, target, extra_columns=None):
    """
    Header `t,<vars>,H[,C]` and one row per sample with 17 significant digits.

    `target` is a path or an open text file; `extra_columns` maps further
    header names to arrays aligned with the time grid.
    """
    header = ["t", *trajectory.variables]
    columns = [trajectory.times, *trajectory.states.T]
    if trajectory.hamiltonian is not None:
        header.append("H")
        columns.append(trajectory.hamiltonian)
    if trajectory.casimir is not None:
        header.append("C")
        columns.append(trajectory.casimir)
    for name, values in (extra_columns or {}).items():
        header.append(name)
        columns.append(np.asarray(values, dtype=float))
    write_columns(target, header, columns)


def write_columns(target, header, columns):
    if hasattr(target, "write"):
        _write(target, header, columns)
        return
    with open(target, "w", newline="", encoding="utf-8") as handle:
        _write(handle, header, columns)


def _write(handle, header, columns):
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([CSV_FORMAT.format(float(value)) for value in row])


def read_csv(source):
    """Header and float matrix of a CSV written by `write_csv`."""
    with open(source, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    return rows[0], np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
