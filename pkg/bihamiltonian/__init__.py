from .casimirs import CasimirEntry, casimir_catalog, casimir_of
from .pairs import (
    coupled_pair, domain_points, ensure_in_domain, guard_violations, make_pair, pair_kind, second_half, sir_pair,
    sirs_pair, vacc_i_pair, vacc_s_pair, verify_pair,
)
