from .exact import (
    ExactSolution, exact_sir, exact_sirs, exact_solution, exact_vacc_i, exact_vacc_s, sir_solution, sirs_solution,
    vacc_i_solution, vacc_s_solution,
)
from .integrators import integrate_adaptive, integrate_rk4, rk4_order
from .trajectories import DomainExit, DriftReport, Trajectory, diagnostics, read_csv, write_columns, write_csv
