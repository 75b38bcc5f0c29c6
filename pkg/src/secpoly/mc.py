"""Maurer-Cartan analysis over the simplex basis.

A degree-1 element is a number per d-simplex.  Its obstruction lives over
circuits: each circuit contributes one binomial equation between its two
triangulations.  The same verdict must come out of a direct evaluation of
the bracket tables, and the module cross-checks the two routes on every
call; the cocycle lattice and the semigroup membership test make the toric
structure of the solution set concrete.

All evaluation here uses the marked-variant tables: the equation of a
circuit with a non-vertex point involves the dropped-point simplex, which
is not a geometric marking.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Mapping

from .geometry import (
    Circuit,
    PointConfig,
    enumerate_circuits,
    orient,
    require_general_position,
    simplex_volume,
)
from .linalg import integer_kernel_basis, rank
from .linf import LinftyTables
from .subdivision import enumerate_regular_triangulations

Q = Fraction

MULTIPLICATIVE = "multiplicative"
ADDITIVE = "additive"


def simplex_basis(config: PointConfig) -> tuple[tuple[str, ...], ...]:
    """All d-simplices on configuration points, canonically ordered."""
    d = config.dimension
    out = []
    for sub in itertools.combinations(config.labels, d + 1):
        if orient(config, sub) != 0:
            out.append(config.sort_labels(sub))
    return tuple(out)


@dataclass(frozen=True)
class McElement:
    """Values per d-simplex: multiplicative weights (all nonzero) or
    additive exponents."""

    model: str
    values: Mapping[tuple[str, ...], Fraction]

    def __getitem__(self, simplex: tuple[str, ...]) -> Fraction:
        return self.values[simplex]


def mc_element(config: PointConfig, values: Mapping, model: str = MULTIPLICATIVE) -> McElement:
    if model not in (MULTIPLICATIVE, ADDITIVE):
        raise ValueError(f"unknown model {model!r}")
    basis = simplex_basis(config)
    table = {config.sort_labels(k): Q(v) for k, v in values.items()}
    if set(table) != set(basis):
        missing = set(basis) - set(table)
        extra = set(table) - set(basis)
        raise ValueError(f"element support must be the simplex basis "
                         f"(missing {sorted(missing)}, extra {sorted(extra)})")
    if model == MULTIPLICATIVE and any(v == 0 for v in table.values()):
        raise ValueError("multiplicative weights must be nonzero")
    return McElement(model, {k: table[k] for k in basis})


def constant_element(config: PointConfig, value=1, model: str = MULTIPLICATIVE) -> McElement:
    return mc_element(config, {s: Q(value) for s in simplex_basis(config)}, model)


def volume_exponent(config: PointConfig) -> McElement:
    """beta_sigma = Vol(sigma): additive, always a cocycle since both
    triangulations of a circuit fill the same polytope."""
    return mc_element(config,
                      {s: simplex_volume(config, s) for s in simplex_basis(config)},
                      ADDITIVE)


def affine_density_exponent(config: PointConfig,
                            coeffs: tuple, constant=0) -> McElement:
    """beta_sigma = integral over sigma of an affine density, evaluated
    exactly by the centroid rule Vol(sigma) * mean of vertex values."""
    d = config.dimension
    if len(coeffs) != d:
        raise ValueError("one linear coefficient per coordinate")

    def ell(label):
        p = config.coord(label)
        return sum(Q(c) * x for c, x in zip(coeffs, p)) + Q(constant)

    vals = {}
    for s in simplex_basis(config):
        vals[s] = simplex_volume(config, s) * sum(ell(l) for l in s) / (d + 1)
    return mc_element(config, vals, ADDITIVE)


# ---------------------------------------------------------------------------
# the binomial system


@dataclass(frozen=True)
class McEquation:
    circuit: Circuit
    left: tuple[tuple[str, ...], ...]    # triangulation dropping negative points
    right: tuple[tuple[str, ...], ...]   # triangulation dropping positive points


@dataclass(frozen=True)
class BinomialSystem:
    simplices: tuple[tuple[str, ...], ...]
    equations: tuple[McEquation, ...]


def circuit_equations(config: PointConfig) -> BinomialSystem:
    """One equation per circuit: the products of weights over its two
    triangulations agree."""
    require_general_position(config)
    basis = simplex_basis(config)
    basis_set = set(basis)
    eqs = []
    for z in enumerate_circuits(config):
        sup = set(z.support)

        def side(dropped):
            cells = [config.sort_labels(sup - {l}) for l in sorted(dropped)]
            for c in cells:
                if c not in basis_set:
                    raise RuntimeError(f"circuit side lists a non-simplex {c}")
            return tuple(sorted(cells))

        eqs.append(McEquation(z, side(z.negative), side(z.positive)))
    return BinomialSystem(basis, tuple(eqs))


def binomial_residuals(gamma: McElement, system: BinomialSystem) -> dict:
    """Per-circuit defect: product (or exponent-sum) difference of sides."""
    out = {}
    for eq in system.equations:
        if gamma.model == MULTIPLICATIVE:
            lhs = Q(1)
            for s in eq.left:
                lhs *= gamma[s]
            rhs = Q(1)
            for s in eq.right:
                rhs *= gamma[s]
        else:
            lhs = sum((gamma[s] for s in eq.left), Q(0))
            rhs = sum((gamma[s] for s in eq.right), Q(0))
        if lhs != rhs:
            out[eq.circuit.support] = lhs - rhs
    return out


# ---------------------------------------------------------------------------
# direct evaluation against the tables


@dataclass(frozen=True)
class McVerdict:
    ok: bool
    residuals: dict       # circuit support -> binomial defect
    direct: dict          # output marking -> table-evaluation defect


def is_mc(gamma: McElement, tables: LinftyTables) -> McVerdict:
    """Decide the flatness equation both ways and insist the answers agree.

    Route one evaluates sum_n (1/n!) lambda_n(gamma, ..., gamma) from the
    structure tables; route two checks the binomial circuit system.  Any
    disagreement (verdict or defect magnitude per circuit) means the sign
    bookkeeping is broken and raises immediately.
    """
    if gamma.model != MULTIPLICATIVE:
        raise ValueError("direct evaluation applies to multiplicative "
                         "weights; additive exponents go through "
                         "cocycle_lattice membership")
    if tables.variant != "marked":
        raise ValueError("flatness needs the marked-variant tables: circuit "
                         "equations involve dropped-point simplices that the "
                         "geometric span omits")
    config = tables.config
    system = circuit_equations(config)
    if set(gamma.values) != set(system.simplices):
        raise ValueError("element support does not match this configuration")

    direct: dict = {}
    for e in tables.all_entries():
        if any(i not in gamma.values for i in e.inputs):
            continue  # some input is not a d-simplex; gamma has no component
        term = e.coefficient
        for i in e.inputs:
            term *= gamma[i]
        for m in Counter(e.inputs).values():
            term /= factorial(m)
        direct[e.output] = direct.get(e.output, Q(0)) + term
    direct = {k: v for k, v in direct.items() if v != 0}

    residuals = binomial_residuals(gamma, system)

    if set(direct) != set(residuals) or any(
            abs(direct[k]) != abs(residuals[k]) for k in residuals):
        raise RuntimeError(
            "direct table evaluation disagrees with the binomial system: "
            f"direct={direct} binomial={residuals}")
    return McVerdict(not residuals, residuals, direct)


# ---------------------------------------------------------------------------
# cocycle lattice


@dataclass(frozen=True)
class CocycleLattice:
    simplices: tuple[tuple[str, ...], ...]
    rows: tuple[tuple[int, ...], ...]     # one per circuit: +1 left, -1 right
    basis: tuple[tuple[int, ...], ...]
    rank: int

    def is_cocycle(self, values: Mapping) -> bool:
        vec = [Q(values[s]) for s in self.simplices]
        return all(sum(r * v for r, v in zip(row, vec)) == 0
                   for row in self.rows)

    def in_semigroup(self, values: Mapping) -> bool:
        vec = [Q(values[s]) for s in self.simplices]
        return (all(v.denominator == 1 and v >= 0 for v in vec)
                and self.is_cocycle(values))


def cocycle_lattice(config: PointConfig) -> CocycleLattice:
    """Integer kernel of the circuit matrix, with a pointwise membership
    test for the nonnegative-integer semigroup inside it."""
    system = circuit_equations(config)
    index = {s: i for i, s in enumerate(system.simplices)}
    rows = []
    for eq in system.equations:
        row = [0] * len(system.simplices)
        for s in eq.left:
            row[index[s]] += 1
        for s in eq.right:
            row[index[s]] -= 1
        rows.append(tuple(row))
    basis = tuple(tuple(v) for v in integer_kernel_basis(rows)) if rows else \
        tuple(tuple(1 if i == j else 0 for j in range(len(system.simplices)))
              for i in range(len(system.simplices)))
    mrank = rank([[Q(v) for v in row] for row in rows]) if rows else 0
    if len(basis) + mrank != len(system.simplices):
        raise RuntimeError("kernel and rank do not partition the simplex basis")
    return CocycleLattice(system.simplices, tuple(rows), basis, len(basis))


# ---------------------------------------------------------------------------
# weights of subpolytopes


def polytope_weight(config: PointConfig, gamma: McElement, marking) -> Fraction:
    """Weight of a marked subpolytope: the product (or sum, additively) of
    gamma over any regular triangulation.  Every enumerated triangulation is
    recomputed and must give the same answer; non-flat gamma is rejected."""
    system = circuit_equations(config)
    if gamma.model == MULTIPLICATIVE:
        if binomial_residuals(gamma, system):
            raise ValueError("weights are only defined for flat elements")
    else:
        if not cocycle_lattice(config).is_cocycle(gamma.values):
            raise ValueError("additive exponent is not a cocycle")
    mk = config.sort_labels(marking)
    weights = []
    for t in enumerate_regular_triangulations(config, mk):
        if gamma.model == MULTIPLICATIVE:
            w = Q(1)
            for cell in t.cells:
                w *= gamma[cell]
        else:
            w = sum((gamma[cell] for cell in t.cells), Q(0))
        weights.append(w)
    if len(set(weights)) != 1:
        raise RuntimeError(f"triangulation-independence failed on {mk}: {weights}")
    return weights[0]


# ---------------------------------------------------------------------------
# serialization


def binomial_system_json(system: BinomialSystem) -> str:
    """Toric-ideal layout: each equation as two exponent vectors over the
    simplex basis."""
    index = {s: i for i, s in enumerate(system.simplices)}

    def exponents(side):
        vec = [0] * len(system.simplices)
        for s in side:
            vec[index[s]] += 1
        return vec

    doc = {
        "simplices": [list(s) for s in system.simplices],
        "equations": [
            {
                "circuit": list(eq.circuit.support),
                "positive": sorted(eq.circuit.positive),
                "negative": sorted(eq.circuit.negative),
                "left": exponents(eq.left),
                "right": exponents(eq.right),
            }
            for eq in system.equations
        ],
    }
    return json.dumps(doc, indent=2)
