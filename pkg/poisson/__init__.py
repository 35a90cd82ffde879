from .checks import (
    CheckResult, as_columns, bracket, check_compatibility, check_pair, hamiltonian_vector_field, hypersurface_gap,
    is_casimir, jacobi_report, jacobi_residual, pencil, summarise, vector_field_mismatch,
)
from .structures import BiHamiltonianPair, HamiltonianSystem, PoissonStructure, constant_structure, total_population
