# poisson/structures.py
"""
Poisson structures stored as the upper triangle of a matrix of expressions.

Skew-symmetry is structural: only entries (mu, nu) with mu < nu are kept and
the lower triangle is read back negated. Brackets, Hamiltonian vector fields
and Jacobi sums are derived symbolically once per structure and then
evaluated pointwise (or over batches of points) through compiled functions.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Tuple

import numpy as np

from expressions import Expr, Var, compile_exprs, const, diff, is_zero, parse, to_text, total
from expressions.nodes import ZERO, add, mul, neg, sub

from .exceptions import DimensionMismatchError, PoissonError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PoissonStructure:
    variables: Tuple[str, ...]
    entries: Mapping[Tuple[int, int], Expr] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        variables = tuple(self.variables)
        if len(set(variables)) != len(variables):
            raise PoissonError(f"duplicate variable names in {list(variables)}")
        clean = {}
        for (mu, nu), value in self.entries.items():
            if not (0 <= mu < nu < len(variables)):
                raise PoissonError(f"entry ({mu}, {nu}) is not in the strict upper triangle")
            if not is_zero(value):
                clean[(mu, nu)] = value
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "entries", MappingProxyType(clean))

    @classmethod
    def from_brackets(cls, variables, brackets, name=""):
        """
        Build from fundamental brackets {x^a, x^b} keyed by name pairs.

        Either orientation may be given; a pair listed in both orientations must
        agree up to sign (checked structurally).
        """
        variables = tuple(variables)
        index = {v: i for i, v in enumerate(variables)}
        entries = {}
        for (a, b), value in brackets.items():
            if a not in index or b not in index:
                raise PoissonError(f"bracket {{{a},{b}}} references an unknown variable")
            if a == b:
                raise PoissonError(f"bracket {{{a},{a}}} is zero by skew-symmetry and cannot be set")
            if isinstance(value, str):
                value = parse(value, variables=variables)
            elif not isinstance(value, Expr):
                value = const(value)
            mu, nu = index[a], index[b]
            if mu > nu:
                mu, nu, value = nu, mu, neg(value)
            if (mu, nu) in entries and entries[(mu, nu)] != value:
                raise PoissonError(f"bracket {{{a},{b}}} given twice with different values")
            entries[(mu, nu)] = value
        return cls(variables, entries, name)

    @property
    def dim(self):
        return len(self.variables)

    def index(self, name):
        try:
            return self.variables.index(name)
        except ValueError:
            raise PoissonError(f"'{name}' is not a variable of this structure") from None

    def entry(self, mu, nu):
        if mu == nu:
            return ZERO
        if mu < nu:
            return self.entries.get((mu, nu), ZERO)
        return neg(self.entries.get((nu, mu), ZERO))

    def fundamental(self, a, b):
        """{a, b} for variable names a, b."""
        return self.entry(self.index(a), self.index(b))

    # --- algebra ---

    def _require_same(self, other):
        if self.variables != other.variables:
            raise DimensionMismatchError(self.variables, other.variables)

    def plus(self, other, name=""):
        self._require_same(other)
        keys = set(self.entries) | set(other.entries)
        entries = {k: add(self.entries.get(k, ZERO), other.entries.get(k, ZERO)) for k in keys}
        return PoissonStructure(self.variables, entries, name or f"{self.name}+{other.name}")

    def scaled(self, factor, name=""):
        factor = factor if isinstance(factor, Expr) else const(factor)
        entries = {k: mul(factor, v) for k, v in self.entries.items()}
        return PoissonStructure(self.variables, entries, name or self.name)

    # --- symbolic derivations ---

    def bracket(self, f, g):
        """{f, g} = sum_{mu<nu} pi^{mu nu} (d_mu f d_nu g - d_nu f d_mu g)."""
        df = [diff(f, v) for v in self.variables]
        dg = [diff(g, v) for v in self.variables]
        terms = []
        for (mu, nu), value in self.entries.items():
            cross = sub(mul(df[mu], dg[nu]), mul(df[nu], dg[mu]))
            terms.append(mul(value, cross))
        return total(terms)

    def sharp(self, h):
        """Components of the Hamiltonian vector field pi^#(dh): X^mu = sum_nu pi^{mu nu} d_nu h."""
        dh = [diff(h, v) for v in self.variables]
        return tuple(
            total(mul(self.entry(mu, nu), dh[nu]) for nu in range(self.dim) if nu != mu)
            for mu in range(self.dim)
        )

    @cached_property
    def jacobi_exprs(self):
        """
        Cyclic Jacobi sums for every triple mu < nu < lam:
        {{x^mu,x^nu},x^lam} + {{x^nu,x^lam},x^mu} + {{x^lam,x^mu},x^nu},
        with {pi^{ab}, x^c} = sum_k d_k pi^{ab} pi^{kc}.
        """
        partials = {
            key: [diff(value, v) for v in self.variables] for key, value in self.entries.items()
        }

        def bracket_with_coordinate(a, b, c):
            if a == b:
                return ZERO
            key, sign = ((a, b), 1) if a < b else ((b, a), -1)
            if key not in partials:
                return ZERO
            term = total(mul(partials[key][k], self.entry(k, c)) for k in range(self.dim))
            return term if sign > 0 else neg(term)

        triples = []
        for mu, nu, lam in itertools.combinations(range(self.dim), 3):
            cyclic = total([
                bracket_with_coordinate(mu, nu, lam),
                bracket_with_coordinate(nu, lam, mu),
                bracket_with_coordinate(lam, mu, nu),
            ])
            triples.append(((mu, nu, lam), cyclic))
        logger.debug("derived %d Jacobi sums for %s", len(triples), self.name or "structure")
        return tuple(triples)

    @cached_property
    def compiled_jacobi(self):
        return compile_exprs([e for _, e in self.jacobi_exprs], self.variables)

    # --- serialisation (the "poisson" key of a model config) ---

    def to_dict(self):
        return {
            "dim": self.dim,
            "vars": list(self.variables),
            "brackets": {
                f"{self.variables[mu]},{self.variables[nu]}": to_text(value)
                for (mu, nu), value in sorted(self.entries.items())
            },
        }

    @classmethod
    def from_dict(cls, data, name=""):
        variables = tuple(data["vars"])
        if int(data.get("dim", len(variables))) != len(variables):
            raise PoissonError(f"dim {data['dim']} does not match {len(variables)} variables")
        brackets = {}
        for key, text in data.get("brackets", {}).items():
            parts = [p.strip() for p in key.split(",")]
            if len(parts) != 2:
                raise PoissonError(f"bracket key '{key}' must look like 'S,I'")
            brackets[tuple(parts)] = text
        return cls.from_brackets(variables, brackets, name)

    def __repr__(self):
        inner = ", ".join(
            f"{{{self.variables[mu]},{self.variables[nu]}}}={to_text(v)}" for (mu, nu), v in sorted(self.entries.items())
        )
        return f"PoissonStructure({self.name or '?'}: {inner})"


def constant_structure(variables, values, name="constant"):
    """Structure whose fundamental brackets are real numbers."""
    return PoissonStructure.from_brackets(variables, {k: float(v) for k, v in values.items()}, name)


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    structure: PoissonStructure
    hamiltonian: Expr
    parameters: Mapping[str, float] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "parameters", MappingProxyType(dict(self.parameters)))

    @property
    def variables(self):
        return self.structure.variables

    @cached_property
    def rhs(self):
        """Hamilton's equations x'^mu = {x^mu, H} as expressions."""
        return self.structure.sharp(self.hamiltonian)

    @cached_property
    def compiled_rhs(self):
        return compile_exprs(self.rhs, self.variables)

    def velocity(self, state):
        return self.compiled_rhs(np.asarray(state, dtype=float), self.parameters)


def total_population(variables):
    return total(Var(v) for v in variables)


@dataclass(frozen=True, eq=False)
class BiHamiltonianPair:
    """
    One flow written twice: pi1^# dH1 = pi2^# dH2.

    `guards` are (expression, message) pairs that must be strictly positive
    wherever the pair is evaluated (log arguments of H2 and the like).
    """
    first: HamiltonianSystem
    second: HamiltonianSystem
    guards: Tuple[Tuple[Expr, str], ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.first.variables != self.second.variables:
            raise DimensionMismatchError(self.first.variables, self.second.variables)
        object.__setattr__(self, "guards", tuple(self.guards))

    @property
    def variables(self):
        return self.first.variables

    @property
    def parameters(self):
        merged = dict(self.first.parameters)
        merged.update(self.second.parameters)
        return merged

    @cached_property
    def summed_structure(self):
        return self.first.structure.plus(self.second.structure, name=f"{self.name}:sum")

    @cached_property
    def compiled_guards(self):
        return compile_exprs([g for g, _ in self.guards], self.variables)

    def guard_values(self, points):
        return self.compiled_guards(points, self.parameters)
