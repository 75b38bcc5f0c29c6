"""Structures relative to a direction at infinity.

Adjoining a point at infinity to a planar configuration splits the marked
subpolytopes into finite ones and unbounded ones.  The finite ones keep
their homotopy Lie structure; the unbounded ones, ordered left to right by
the slopes of their rays, assemble into a strictly upper-triangular
associative algebra R whose product glues two polygons along a common ray.
The full structure tables become a mixed differential pairing symmetric
words in finite generators with ordered words in unbounded ones, and its
one-finite-cell component is a chain map from the finite generators to the
directed Hochschild complex of R.  verify_universality checks that this
map is a quasi-isomorphism, exactly, at desk scale.

Everything here runs on a concretized configuration: the far point is
placed at big_m times the direction and every output is certified stable
by recomputing at four times the scale and demanding exact agreement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .coeff import CoefficientSystem, cell_walls, generator_block
from .geometry import (
    INFINITY_LABEL,
    PointConfig,
    check_general_position,
    convex_hull,
    enumerate_subpolytopes,
    is_geometric,
    marked_polytope,
    point_in_hull,
    slope_key,
)
from .linalg import ChainComplexQ, MatrixQ, QuasiIsoReport, is_quasi_iso
from .linf import (
    LinftyTables,
    StructureEntry,
    build_structure_tables,
    verify_d_squared,
)
from .subdivision import restrict_config

Q = Fraction

Marking = tuple[str, ...]


# ---------------------------------------------------------------------------
# configurations with a certified direction at infinity


@dataclass(frozen=True)
class InfinityConfig:
    """A finite point configuration together with a direction at infinity.

    slope_order lists the finite labels left to right as seen from the far
    point; big_m is the initial concretization scale (outputs computed from
    it are certified by doubling, see tilde_tables).
    """

    base: PointConfig                    # carries the symbolic direction
    finite: PointConfig                  # the same points, no far point
    slope_order: tuple[str, ...]
    projected_config: PointConfig | None  # one lower dimension, None for d=1
    big_m: Fraction

    def position(self, label: str) -> int:
        return self.slope_order.index(label)


def attach_infinity(config: PointConfig, direction: Sequence) -> InfinityConfig:
    """Adjoin a point at infinity in the given direction.

    Requires general position including the far point: no affine degeneracy
    among the finite points, and no two points aligned with the direction
    (for d = 2 this is exactly distinctness of the slope coordinates).
    Raises ValueError with the offending label sets otherwise.
    """
    if config.has_infinity:
        raise ValueError("expected a finite configuration")
    d = config.dimension
    if d not in (1, 2):
        raise ValueError("directions at infinity are supported for d <= 2")
    base = PointConfig(d, config.labels, config.coords,
                       tuple(Q(x) for x in direction))
    rep = check_general_position(base)
    if not rep.passed:
        raise ValueError(
            f"configuration is degenerate with this direction: {rep.violations}")
    if d == 2:
        keys = {l: slope_key(base, l) for l in config.labels}
        order = tuple(sorted(config.labels, key=lambda l: keys[l]))
        projected = PointConfig.build(1, [(l, (keys[l],)) for l in order])
        if not check_general_position(projected).passed:
            raise RuntimeError("slope projection degenerate despite "
                               "general position")  # pragma: no cover
    else:
        u = base.infinity_direction[0]
        order = tuple(sorted(config.labels,
                             key=lambda l: config.coord(l)[0] * (1 if u > 0 else -1)))
        projected = None
    big_m = Q(64 * (1 + int(config.coordinate_bound())))
    return InfinityConfig(base, config, order, projected, big_m)


# ---------------------------------------------------------------------------
# structure tables on the concretized configuration, certified by doubling

@dataclass(frozen=True)
class TildeTables:
    """Structure tables of the configuration with the far point placed at a
    concrete scale, together with the scale at which they stabilised."""

    ic: InfinityConfig
    variant: str
    coeffs: CoefficientSystem | None
    config: PointConfig                  # concretized at big_m
    tables: LinftyTables
    big_m: Fraction


_TILDE_CACHE: dict = {}
_TILDE_ROUNDS = 4


def _table_fingerprint(tables: LinftyTables):
    return (tables.generators,
            tuple((n, tuple((e.inputs, e.output, e.coefficient)
                            for e in tables.entries(n)))
                  for n in tables.arities()))


def tilde_tables(ic: InfinityConfig, variant: str = "geometric",
                 coeffs: CoefficientSystem | None = None) -> TildeTables:
    """Structure tables over base with the far point concretized.

    Tables are computed at scale M and again at 4M and must agree entry for
    entry; on disagreement (or a degenerate scale) M is escalated.  The
    generators are also cross-checked against the symbolic enumeration of
    marked subpolytopes, which never sees a concrete scale.
    """
    key = (ic, variant, coeffs)
    hit = _TILDE_CACHE.get(key)
    if hit is not None:
        return hit

    symbolic = {ic.base.sort_labels(mp.marking) for mp in
                enumerate_subpolytopes(ic.base, include_infinity=True,
                                       geometric_only=(variant == "geometric"))}

    def level(m: Fraction):
        cc = ic.base.concretize(m)
        if not check_general_position(cc).passed:
            return None
        return cc, build_structure_tables(cc, variant, coeffs)

    m = ic.big_m
    cur = level(m)
    for _ in range(_TILDE_ROUNDS):
        nxt = level(4 * m)
        if cur is not None and nxt is not None:
            cc, tables = cur
            if (_table_fingerprint(tables) == _table_fingerprint(nxt[1])
                    and set(tables.generators) == symbolic):
                result = TildeTables(ic, variant, coeffs, cc, tables, m)
                _TILDE_CACHE[key] = result
                return result
        m, cur = 4 * m, nxt
    raise RuntimeError(
        "structure tables failed to stabilise under scale doubling; "
        f"last scale {m}")


def _is_far(marking: Marking) -> bool:
    return INFINITY_LABEL in marking


# ---------------------------------------------------------------------------
# splitting the tables along finite vs unbounded

@dataclass(frozen=True, eq=False)
class GSplit:
    """Partition of the structure tables: entries with only finite cells
    (the finite subalgebra), with only unbounded cells (the splitting
    coproduct of R), and genuinely mixed ones."""

    ic: InfinityConfig
    coeffs: CoefficientSystem | None
    tilde: TildeTables
    finite_tables: LinftyTables          # built directly on the finite points
    finite_entries: tuple[StructureEntry, ...]
    infinite_entries: tuple[StructureEntry, ...]
    mixed_entries: tuple[StructureEntry, ...]


def split_g(ic: InfinityConfig, coeffs: CoefficientSystem | None = None,
            variant: str = "geometric") -> GSplit:
    """Split the structure tables of the extended configuration.

    Unbounded generators form an ideal (a cell of an unbounded polytope
    subdivision is allowed to be finite, but the subdivided polytope stays
    unbounded) and the finite generators a subalgebra; both closures are
    structural, so a violation is an internal error.  The finite part is
    cross-checked against tables built on the finite configuration alone.
    """
    tt = tilde_tables(ic, variant, coeffs)
    fin, inf_, mixed = [], [], []
    for e in tt.tables.all_entries():
        far_in = sum(1 for c in e.inputs if _is_far(c))
        if far_in and not _is_far(e.output):
            raise RuntimeError(f"ideal closure violated at {e.output}")
        if not far_in and _is_far(e.output):
            raise RuntimeError(f"subalgebra closure violated at {e.output}")
        (mixed if 0 < far_in < len(e.inputs) else
         inf_ if far_in else fin).append(e)
    finite_tables = build_structure_tables(ic.finite, variant, coeffs)

    def entry_map(entries):
        return {(e.inputs, e.output): e.coefficient for e in entries}

    ours, theirs = entry_map(fin), entry_map(finite_tables.all_entries())
    if ours != theirs:
        off = set(ours) ^ set(theirs) or \
            {k for k in ours if ours[k] != theirs[k]}
        raise RuntimeError(f"finite part disagrees with the finite "
                           f"configuration's tables at {sorted(off)[:3]}")
    fin_gens = {g for g in tt.tables.generators if not _is_far(g)}
    if fin_gens != set(finite_tables.generators):
        raise RuntimeError("finite generators disagree with the finite "
                           "configuration's enumeration")
    return GSplit(ic, coeffs, tt, finite_tables,
                  tuple(fin), tuple(inf_), tuple(mixed))


# ---------------------------------------------------------------------------
# boundary paths

def _wall_ends(wall) -> tuple[str, str]:
    (a, b), token = wall
    return (a, b) if token == 1 else (b, a)


def boundary_path(config: PointConfig, marking: Marking) -> tuple[str, ...]:
    """Finite boundary vertices of an unbounded marking, left to right."""
    walls = cell_walls(config, marking)
    if not walls:
        raise ValueError(f"{marking} has no finite boundary edge")
    verts = [_wall_ends(walls[0])[0]]
    for w in walls:
        tail, head = _wall_ends(w)
        if tail != verts[-1]:
            raise RuntimeError(f"boundary walls of {marking} do not chain")
        verts.append(head)
    return tuple(verts)


def finite_chains(ic: InfinityConfig, config: PointConfig,
                  marking: Marking) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(lower, upper) boundary chains of a finite marking, both read left to
    right; lower is the side turned away from the far direction."""
    cyc = convex_hull(config, marking).boundary
    pos = {l: ic.position(l) for l in cyc}
    i_min = min(range(len(cyc)), key=lambda i: pos[cyc[i]])
    i_max = max(range(len(cyc)), key=lambda i: pos[cyc[i]])
    n = len(cyc)

    def walk(a: int, b: int) -> list[str]:
        out = [cyc[a]]
        while a != b:
            a = (a + 1) % n
            out.append(cyc[a])
        return out

    lower = tuple(walk(i_min, i_max))
    upper = tuple(reversed(walk(i_max, i_min)))
    return lower, upper


# ---------------------------------------------------------------------------
# Koszul bookkeeping for reordering table entries

def _perm_sign(parities: Sequence[int], neworder: Sequence[int]) -> int:
    sign = 1
    for a in range(len(neworder)):
        for b in range(a + 1, len(neworder)):
            if (neworder[a] > neworder[b]
                    and parities[neworder[a]] and parities[neworder[b]]):
                sign = -sign
    return sign


def _reorder_columns(mat: MatrixQ, dims: Sequence[int],
                     elt_parities: Sequence[Sequence[int]],
                     neworder: Sequence[int]) -> MatrixQ:
    """Permute the tensor factors of the column space, with Koszul signs
    depending on the parities of the individual factor elements."""
    new_dims = [dims[i] for i in neworder]
    col_map: dict[int, tuple[int, int]] = {}
    for j_old in range(mat.ncols):
        combo_old = _decode(j_old, dims)
        j_new = 0
        for a, old in enumerate(neworder):
            j_new = j_new * new_dims[a] + combo_old[old]
        pars = [elt_parities[i][combo_old[i]] for i in range(len(dims))]
        col_map[j_old] = (j_new, _perm_sign(pars, neworder))
    ent = {}
    for (i, j_old), v in mat.entries.items():
        j_new, sign = col_map[j_old]
        ent[(i, j_new)] = sign * v
    return MatrixQ(mat.nrows, mat.ncols, ent)


def _scale_columns(mat: MatrixQ, signs: Sequence[int]) -> MatrixQ:
    return MatrixQ(mat.nrows, mat.ncols,
                   {(i, j): signs[j] * v for (i, j), v in mat.entries.items()})


# ---------------------------------------------------------------------------
# the triangular algebra of unbounded polygons

@dataclass(frozen=True)
class ProductEntry:
    left: Marking
    right: Marking
    output: Marking
    coefficient: object                  # Fraction, or MatrixQ when decorated


@dataclass(frozen=True, eq=False)
class TriangularAlgebra:
    """Strictly upper-triangular associative algebra of unbounded polygons.

    Generators sit in blocks indexed by their pair of rays (left one
    strictly before the right one); the product glues two polygons sharing
    a ray and is zero otherwise.  The splitting entries are the structure
    table's two-letter coproduct, kept for the word differential."""

    config: PointConfig
    order: tuple[str, ...]
    generators: tuple[Marking, ...]
    rays: Mapping[Marking, tuple[str, str]]
    degrees: Mapping[Marking, int]
    element_degrees: Mapping[Marking, tuple[int, ...]]
    products: tuple[ProductEntry, ...]
    product_map: Mapping[tuple[Marking, Marking], ProductEntry]
    splitting: tuple[StructureEntry, ...]
    coeffs: CoefficientSystem | None = None

    def block(self, i: str, j: str) -> tuple[Marking, ...]:
        return tuple(g for g in self.generators if self.rays[g] == (i, j))

    def block_dim(self, g: Marking) -> int:
        return len(self.element_degrees[g])

    def product(self, left: Marking, right: Marking) -> ProductEntry | None:
        return self.product_map.get((left, right))

    def graded_dimension(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for g in self.generators:
            for e in self.element_degrees[g]:
                k = self.degrees[g] + e
                out[k] = out.get(k, 0) + 1
        return out


def _letter_parity(degree: int, elt_degree: int) -> int:
    return (degree - 1 + elt_degree) % 2


def _coefficient_entry(coeff, out_elt: int, in_elts: Sequence[int],
                       in_dims: Sequence[int]) -> Fraction:
    if isinstance(coeff, MatrixQ):
        col = 0
        for e, d in zip(in_elts, in_dims):
            col = col * d + e
        return coeff.to_rows()[out_elt][col]
    if out_elt or any(in_elts):
        raise RuntimeError("scalar coefficient with nontrivial elements")
    return coeff


def _word_order_splitting(entry: StructureEntry, rays, parities,
                          elt_degrees, coeffs) -> StructureEntry:
    """Reorder a two-cell splitting so the halves chain left to right."""
    u, v = entry.inputs
    if rays[u][1] == rays[v][0]:
        return entry
    if rays[v][1] != rays[u][0]:
        raise RuntimeError(f"splitting halves of {entry.output} do not chain")
    if coeffs is None:
        sign = -1 if (parities[u] and parities[v]) else 1
        return StructureEntry((v, u), entry.output, entry.coefficient * sign)
    dims = (len(elt_degrees[u]), len(elt_degrees[v]))
    pars = ([(parities[u] + d) % 2 for d in elt_degrees[u]],
            [(parities[v] + d) % 2 for d in elt_degrees[v]])
    mat = _reorder_columns(entry.coefficient, dims, pars, (1, 0))
    return StructureEntry((v, u), entry.output, mat)


def _twisted_product(entry: StructureEntry, degrees, elt_degrees,
                     coeffs) -> ProductEntry:
    """Product of the algebra from a word-ordered splitting entry.

    The splitting coefficients live in the suspended world; multiplying the
    column of each left element by (-1) to its unsuspended degree is the
    standard change of suspension, and is what makes the table associative.
    """
    u, v = entry.inputs
    if coeffs is None:
        c = entry.coefficient * (-1) ** degrees[u]
        return ProductEntry(u, v, entry.output, c)
    du, dv = len(elt_degrees[u]), len(elt_degrees[v])
    signs = [(-1) ** (degrees[u] + elt_degrees[u][cu])
             for cu in range(du) for _ in range(dv)]
    return ProductEntry(u, v, entry.output,
                        _scale_columns(entry.coefficient, signs))


def _check_associative(alg: TriangularAlgebra) -> None:
    """Entrywise associativity over all chained triples of generators."""
    by_left: dict[str, list[Marking]] = {}
    for g in alg.generators:
        by_left.setdefault(alg.rays[g][0], []).append(g)
    for u in alg.generators:
        for v in by_left.get(alg.rays[u][1], ()):
            for w in by_left.get(alg.rays[v][1], ()):
                _assert_associative_triple(alg, u, v, w)


def _assert_associative_triple(alg: TriangularAlgebra, u, v, w) -> None:
    duvw = [alg.block_dim(u), alg.block_dim(v), alg.block_dim(w)]

    def compose(first: ProductEntry | None, second_of, outer_right: bool):
        """Collect target -> dense coefficient rows over u x v x w."""
        if first is None:
            return None
        second = second_of(first.output)
        if second is None:
            return None
        out = second.output
        nrows = alg.block_dim(out)
        rows = [[Q(0)] * (duvw[0] * duvw[1] * duvw[2]) for _ in range(nrows)]
        dm = alg.block_dim(first.output)
        for cu in range(duvw[0]):
            for cv in range(duvw[1]):
                for cw in range(duvw[2]):
                    col = (cu * duvw[1] + cv) * duvw[2] + cw
                    for r in range(nrows):
                        acc = Q(0)
                        for m in range(dm):
                            if outer_right:
                                a = _coefficient_entry(
                                    first.coefficient, m, (cu, cv),
                                    (duvw[0], duvw[1]))
                                b = _coefficient_entry(
                                    second.coefficient, r, (m, cw),
                                    (dm, duvw[2]))
                            else:
                                a = _coefficient_entry(
                                    first.coefficient, m, (cv, cw),
                                    (duvw[1], duvw[2]))
                                b = _coefficient_entry(
                                    second.coefficient, r, (cu, m),
                                    (duvw[0], dm))
                            acc += a * b
                        rows[r][col] += acc
        return out, rows

    lhs = compose(alg.product(u, v), lambda m: alg.product(m, w), True)
    rhs = compose(alg.product(v, w), lambda m: alg.product(u, m), False)
    if lhs is None and rhs is None:
        return
    if lhs is not None and rhs is not None:
        if lhs[0] != rhs[0] or lhs[1] != rhs[1]:
            raise RuntimeError(f"associativity fails on {(u, v, w)}")
        return
    out, rows = lhs if lhs is not None else rhs
    if any(any(x for x in row) for row in rows):
        raise RuntimeError(f"associativity fails on {(u, v, w)}")


def _verify_word_squared(splitting: Sequence[StructureEntry], parities,
                         elt_degrees, coeffs) -> None:
    """The splitting extends to the tensor coalgebra as a coderivation with
    Koszul prefix signs; check directly that it squares to zero."""
    by_output: dict[Marking, list[StructureEntry]] = {}
    for e in splitting:
        by_output.setdefault(e.output, []).append(e)
    for g, entries in by_output.items():
        acc: dict[tuple[Marking, Marking, Marking], dict] = {}

        def add(word, out_elts, in_elts, value):
            if value:
                slot = acc.setdefault(word, {})
                key = (out_elts, in_elts)
                slot[key] = slot.get(key, Q(0)) + value

        for e in entries:
            u, v = e.inputs
            for side, cell in enumerate((u, v)):
                for e2 in by_output.get(cell, []):
                    a, b = e2.inputs
                    word = (a, b, v) if side == 0 else (u, a, b)
                    du, dv = len(elt_degrees[u]), len(elt_degrees[v])
                    da, db = len(elt_degrees[a]), len(elt_degrees[b])
                    for r in range(len(elt_degrees[g])):
                        for cu in range(du):
                            for cv in range(dv):
                                c1 = _coefficient_entry(
                                    e.coefficient, r, (cu, cv), (du, dv))
                                if not c1:
                                    continue
                                mid = cu if side == 0 else cv
                                pref = 1
                                if side == 1 and _letter_parity(
                                        0, 0) is not None:
                                    pu = (parities[u] + elt_degrees[u][cu]) % 2
                                    pref = -1 if pu else 1
                                for ca in range(da):
                                    for cb in range(db):
                                        c2 = _coefficient_entry(
                                            e2.coefficient, mid, (ca, cb),
                                            (da, db))
                                        if not c2:
                                            continue
                                        elts = ((ca, cb, cv) if side == 0
                                                else (cu, ca, cb))
                                        add(word, r, elts, pref * c1 * c2)
        for word, slot in acc.items():
            for key, val in slot.items():
                if val:
                    raise RuntimeError(
                        f"word differential fails to square to zero on {g} "
                        f"at {word}")


def _make_triangular(config, order, gens, rays, degrees, elt_degrees,
                     splitting, coeffs) -> TriangularAlgebra:
    pos = {l: i for i, l in enumerate(order)}
    for g in gens:
        left, right = rays[g]
        if pos[left] >= pos[right]:
            raise RuntimeError(f"rays of {g} are not strictly ordered")
    products, pmap = [], {}
    for e in splitting:
        p = _twisted_product(e, degrees, elt_degrees, coeffs)
        products.append(p)
        pmap[(p.left, p.right)] = p
        if (rays[p.left][0], rays[p.right][1]) != rays[p.output]:
            raise RuntimeError(f"product {p.left} * {p.right} does not glue "
                               "along the shared ray")
        if coeffs is not None:
            _check_degree_additive(p, degrees, elt_degrees)
    alg = TriangularAlgebra(config, order, gens, rays, degrees, elt_degrees,
                            tuple(products), pmap, tuple(splitting), coeffs)
    _check_associative(alg)
    _verify_word_squared(splitting, {g: (degrees[g] - 1) % 2 for g in gens},
                         elt_degrees, coeffs)
    return alg


def _check_degree_additive(p: ProductEntry, degrees, elt_degrees) -> None:
    du = len(elt_degrees[p.left])
    dv = len(elt_degrees[p.right])
    rows = p.coefficient.to_rows()
    for r, row in enumerate(rows):
        for col, x in enumerate(row):
            if not x:
                continue
            cu, cv = divmod(col, dv)
            if (elt_degrees[p.output][r]
                    != elt_degrees[p.left][cu] + elt_degrees[p.right][cv]):
                raise RuntimeError(
                    f"product {p.left} * {p.right} is not degree additive")


def build_R_infty(ic: InfinityConfig,
                  coeffs: CoefficientSystem | None = None) -> TriangularAlgebra:
    """The triangular algebra of unbounded marked polygons (d = 2).

    Basis: unbounded geometric markings, in the block of their two ray
    slopes, with degree (number of marked points) - 2.  Product: the
    two-letter splitting coefficient, suspension-corrected; it vanishes
    unless the union is again a geometric marking.  Construction fails if
    any splitting has three or more unbounded cells, if a one-cell
    splitting appears (the internal differential must be zero), or if the
    table is not associative."""
    if ic.base.dimension != 2:
        raise ValueError("the polygon algebra is a d = 2 construction; "
                         "use build_R_1d for points on a line")
    tt = tilde_tables(ic, "geometric", coeffs)
    cc, tables = tt.config, tt.tables
    gens = tuple(g for g in tables.generators if _is_far(g))
    rays, degrees, elt_degrees = {}, {}, {}
    for g in gens:
        path = boundary_path(cc, g)
        rays[g] = (path[0], path[-1])
        degrees[g] = tables.degree(g)
        elt_degrees[g] = ((0,) if coeffs is None else
                          generator_block(cc, g, coeffs).element_degrees())
    parities = {g: (degrees[g] - 1) % 2 for g in gens}
    splitting = []
    for e in tables.all_entries():
        if not all(_is_far(c) for c in e.inputs):
            continue
        if len(e.inputs) == 1:
            raise RuntimeError(f"unbounded generator {e.output} has a "
                               "nonzero internal differential")
        if len(e.inputs) > 2:
            raise RuntimeError(f"unbounded generator {e.output} splits into "
                               f"{len(e.inputs)} unbounded cells")
        splitting.append(
            _word_order_splitting(e, rays, parities, elt_degrees, coeffs))
    return _make_triangular(cc, ic.slope_order, gens, rays, degrees,
                            elt_degrees, splitting, coeffs)


def build_R_1d(config: PointConfig) -> TriangularAlgebra:
    """The interval algebra of a configuration on a line.

    Generators are the geometric intervals [i, j] (every configuration
    point between the endpoints marked), with degree the number of gaps;
    the product of [i, j] and [j, k] is exactly +[i, k] after suspension
    correction, and all other products vanish.  The word differential of
    the splitting table is checked to square to zero independently of the
    ambient d-squared verification."""
    if config.dimension != 1:
        raise ValueError("expected a configuration on a line")
    if config.has_infinity:
        raise ValueError("expected a finite configuration")
    rep = check_general_position(config)
    if not rep.passed:
        raise ValueError(f"configuration is degenerate: {rep.violations}")
    tables = build_structure_tables(config, "geometric")
    drep = verify_d_squared(tables)
    if not drep.ok:
        raise RuntimeError(f"table differential fails to square to zero: "
                           f"{drep.failures[:1]}")
    order = tuple(sorted(config.labels, key=lambda l: config.coord(l)[0]))
    coord = {l: config.coord(l)[0] for l in config.labels}
    gens = tables.generators
    rays = {g: (min(g, key=coord.get), max(g, key=coord.get)) for g in gens}
    degrees = {g: tables.degree(g) for g in gens}
    elt_degrees = {g: (0,) for g in gens}
    parities = {g: (degrees[g] - 1) % 2 for g in gens}
    splitting = []
    for e in tables.all_entries():
        if len(e.inputs) == 1:
            raise RuntimeError(f"interval {e.output} has a nonzero internal "
                               "differential")
        if len(e.inputs) > 2:
            raise RuntimeError(f"interval {e.output} splits into more than "
                               "two intervals")
        splitting.append(
            _word_order_splitting(e, rays, parities, elt_degrees, None))
    alg = _make_triangular(config, order, gens, rays, degrees, elt_degrees,
                           splitting, None)
    for p in alg.products:
        if p.coefficient != 1:
            raise RuntimeError(
                f"interval product {p.left} * {p.right} is "
                f"{p.coefficient}, expected +1")
    return alg


# ---------------------------------------------------------------------------
# the mixed differential

@dataclass(frozen=True)
class MixedTerm:
    """One structure-table entry presented as symmetric times ordered:
    finite cells in canonical order, unbounded cells left to right, with
    the Koszul sign of the reordering folded into the coefficient."""

    source: Marking
    sym: tuple[Marking, ...]
    word: tuple[Marking, ...]
    coefficient: object


@dataclass(frozen=True, eq=False)
class MixedDifferential:
    ic: InfinityConfig
    coeffs: CoefficientSystem | None
    config: PointConfig
    tables: LinftyTables
    terms: tuple[MixedTerm, ...]
    report: object                       # the d-squared report of the tables

    def terms_of(self, source: Marking) -> tuple[MixedTerm, ...]:
        return tuple(t for t in self.terms if t.source == source)


def mixed_differential(ic: InfinityConfig,
                       coeffs: CoefficientSystem | None = None) -> MixedDifferential:
    """All structure-table entries in mixed normal form.

    Every entry of the concretized tables is rewritten with its finite
    cells first (kept in canonical order) and its unbounded cells sorted
    left to right by their left ray; the word part is checked to chain.
    The d-squared verification of the underlying tables is run and its
    report attached -- it covers the mixed presentation, which is a signed
    reindexing of the same data."""
    tt = tilde_tables(ic, "geometric", coeffs)
    cc, tables = tt.config, tt.tables
    pos = {l: ic.position(l) for l in ic.slope_order}
    report = verify_d_squared(tables)
    terms = []
    for e in tables.all_entries():
        fin_idx = [i for i, c in enumerate(e.inputs) if not _is_far(c)]
        far_idx = [i for i, c in enumerate(e.inputs) if _is_far(c)]
        far_idx.sort(key=lambda i: pos[boundary_path(cc, e.inputs[i])[0]])
        neworder = fin_idx + far_idx
        word = tuple(e.inputs[i] for i in far_idx)
        for a, b in zip(word, word[1:]):
            if boundary_path(cc, a)[-1] != boundary_path(cc, b)[0]:
                raise RuntimeError(
                    f"unbounded cells of {e.output} do not chain")
        if coeffs is None:
            pars = [tables.parity(c) for c in e.inputs]
            coeff = e.coefficient * _perm_sign(pars, neworder)
        else:
            blocks = [generator_block(cc, c, coeffs) for c in e.inputs]
            dims = [b.dim for b in blocks]
            pars = [[(tables.parity(c) + d) % 2 for d in b.element_degrees()]
                    for c, b in zip(e.inputs, blocks)]
            coeff = _reorder_columns(e.coefficient, dims, pars, neworder)
        terms.append(MixedTerm(e.output,
                               tuple(e.inputs[i] for i in fin_idx),
                               word, coeff))
    return MixedDifferential(ic, coeffs, cc, tables, tuple(terms), report)


# ---------------------------------------------------------------------------
# subdivisions with a single finite cell

@dataclass(frozen=True)
class OneFiniteSubdivision:
    """A coarse subdivision of an unbounded polygon with exactly one finite
    cell: the finite polygon sits on a contiguous stretch of the parent's
    boundary path, the remaining edges (the two handles) are absorbed by
    the outermost unbounded cells, and each upper edge of the finite
    polygon spans one unbounded cell."""

    parent: Marking
    finite_cell: Marking
    left_handle: tuple[str, ...]         # vertex path, single vertex if empty
    right_handle: tuple[str, ...]
    cells: tuple[Marking, ...]           # finite cell first, then left to right


def one_finite_subdivisions(ic: InfinityConfig,
                            parent) -> tuple[OneFiniteSubdivision, ...]:
    """Directly construct the one-finite-cell coarse subdivisions of an
    unbounded geometric marking, and cross-check the family against the
    structure-table entries with exactly one finite cell."""
    tt = tilde_tables(ic, "geometric")
    cc, tables = tt.config, tt.tables
    P = cc.sort_labels(parent)
    if not _is_far(P):
        raise ValueError("parent must be an unbounded marking")
    if P not in set(tables.generators):
        raise ValueError(f"{P} is not an unbounded geometric marking")
    sub = restrict_config(cc, P)
    p_path = boundary_path(cc, P)
    p_edges = list(zip(p_path, p_path[1:]))
    finite_labels = [l for l in P if l != INFINITY_LABEL]
    out = []
    for size in range(3, len(finite_labels) + 1):
        for q in itertools.combinations(finite_labels, size):
            mp = marked_polytope(sub, q)
            if not mp.geometric:
                continue
            if convex_hull(sub, q).dimension != 2:
                continue
            lower, upper = finite_chains(ic, cc, q)
            q_edges = list(zip(lower, lower[1:]))
            if not all(e in p_edges for e in q_edges):
                continue
            s = p_edges.index(q_edges[0])
            if p_edges[s:s + len(q_edges)] != q_edges:
                raise RuntimeError(f"lower edges of {q} sit on the parent "
                                   "boundary but not contiguously")
            left_handle = p_path[:s + 1]
            right_handle = p_path[s + len(q_edges):]
            cells = [cc.sort_labels(q)]
            m = len(upper) - 1
            for nu in range(m):
                seed = {upper[nu], upper[nu + 1], INFINITY_LABEL}
                if nu == 0:
                    seed.update(left_handle)
                if nu == m - 1:
                    seed.update(right_handle)
                hull = convex_hull(cc, seed)
                cell = [l for l in finite_labels
                        if point_in_hull(cc, hull, l)]
                cells.append(cc.sort_labels(tuple(cell) + (INFINITY_LABEL,)))
            covered = set().union(*map(set, cells))
            if covered != set(P):
                raise RuntimeError(f"cells built over {q} do not cover {P}")
            out.append(OneFiniteSubdivision(P, cells[0], left_handle,
                                            right_handle, tuple(cells)))
    direct = {frozenset(r.cells) for r in out}
    table = {frozenset(e.inputs)
             for e in tables.differential_map().get(P, [])
             if sum(1 for c in e.inputs if not _is_far(c)) == 1}
    if direct != table:
        raise RuntimeError(
            f"one-finite subdivisions of {P} disagree with the structure "
            f"tables: extra {sorted(map(sorted, direct - table))}, "
            f"missing {sorted(map(sorted, table - direct))}")
    return tuple(sorted(out, key=lambda r: (r.finite_cell, r.cells)))


# ---------------------------------------------------------------------------
# splitting the mixed differential by its number of finite cells

@dataclass(frozen=True, eq=False)
class PsiComponents:
    """Mixed-differential terms grouped by role: brackets of the finite
    subalgebra, the splitting coproduct of the polygon algebra, and the
    morphism components indexed by how many finite cells they consume."""

    differential: MixedDifferential
    bracket_terms: tuple[MixedTerm, ...]
    coproduct_terms: tuple[MixedTerm, ...]
    components: Mapping[int, tuple[MixedTerm, ...]]

    def counts(self) -> dict[int, int]:
        return {n: len(v) for n, v in sorted(self.components.items())}

    def higher_counts(self) -> dict[int, int]:
        return {n: len(v) for n, v in sorted(self.components.items())
                if n >= 2}


def extract_psi(md: MixedDifferential) -> PsiComponents:
    brackets, coproduct = [], []
    components: dict[int, list[MixedTerm]] = {}
    for t in md.terms:
        if not _is_far(t.source):
            if t.word:
                raise RuntimeError(f"finite {t.source} split off an "
                                   "unbounded cell")
            brackets.append(t)
        elif not t.sym:
            coproduct.append(t)
        else:
            if not t.word:
                raise RuntimeError(f"unbounded {t.source} split into finite "
                                   "cells only")
            components.setdefault(len(t.sym), []).append(t)
    return PsiComponents(md, tuple(brackets), tuple(coproduct),
                         {n: tuple(v) for n, v in components.items()})


# ---------------------------------------------------------------------------
# the directed Hochschild complex

@dataclass(frozen=True, eq=False)
class DirectedHochschild:
    """Cochains on strictly increasing ray chains of the triangular algebra.

    A basis label is (chain, inputs, output): a strictly slope-increasing
    tuple of rays, one (marking, element) input per consecutive pair, and a
    (marking, element) in the long block as output.  Total degree is the
    number of inputs plus the degree of the output minus the degrees of
    the inputs, minus one.  Units act as scalars and are not part of the
    chains, so the differential has outer terms multiplying by a generator
    on either side and inner terms splitting one input."""

    algebra: TriangularAlgebra
    complex: ChainComplexQ

    def label_index(self) -> dict:
        return {lab: (k, i)
                for k, labs in self.complex.basis_labels.items()
                for i, lab in enumerate(labs)}


def _cochain_degree(alg: TriangularAlgebra, chain, inputs, output) -> int:
    def deg(pair):
        m, e = pair
        return alg.degrees[m] + alg.element_degrees[m][e]

    return len(inputs) + deg(output) - sum(deg(p) for p in inputs) - 1


def directed_hochschild(R: TriangularAlgebra) -> DirectedHochschild:
    pos = {l: i for i, l in enumerate(R.order)}
    blocks: dict[tuple[str, str], list[Marking]] = {}
    for g in R.generators:
        blocks.setdefault(R.rays[g], []).append(g)

    def block_pairs(i, j):
        return [(m, e) for m in blocks.get((i, j), ())
                for e in range(R.block_dim(m))]

    labels_by_degree: dict[int, list] = {}
    r = len(R.order)
    for n in range(1, r):
        for chain in itertools.combinations(R.order, n + 1):
            legs = [block_pairs(a, b) for a, b in zip(chain, chain[1:])]
            outs = block_pairs(chain[0], chain[-1])
            if not outs or any(not leg for leg in legs):
                continue
            for inputs in itertools.product(*legs):
                for output in outs:
                    lab = (chain, inputs, output)
                    k = _cochain_degree(R, chain, inputs, output)
                    labels_by_degree.setdefault(k, []).append(lab)
    basis = {k: tuple(sorted(v)) for k, v in labels_by_degree.items()}
    index = {lab: (k, i) for k, labs in basis.items()
             for i, lab in enumerate(labs)}

    def par(pair):
        m, e = pair
        return _letter_parity(R.degrees[m], R.element_degrees[m][e])

    columns: dict[int, dict[int, dict[int, Fraction]]] = {
        k: {} for k in basis}

    def emit(k, col, lab, value):
        if not value:
            return
        k2, row = index[lab]
        if k2 != k + 1:
            raise RuntimeError("differential is not of degree one")
        columns[k].setdefault(col, {})[row] = \
            columns[k].get(col, {}).get(row, Q(0)) + value

    for k, labs in basis.items():
        for col, (chain, inputs, output) in enumerate(labs):
            n = len(chain) - 1
            out_m, out_e = output
            # outer left: multiply the output by a generator ending at the
            # left end of the chain, which also becomes a new first input
            for h in R.order:
                if pos[h] >= pos[chain[0]]:
                    continue
                for a_m in blocks.get((h, chain[0]), ()):
                    p = R.product(a_m, out_m)
                    if p is None:
                        continue
                    for a_e in range(R.block_dim(a_m)):
                        for r_e in range(R.block_dim(p.output)):
                            c = _coefficient_entry(
                                p.coefficient, r_e, (a_e, out_e),
                                (R.block_dim(a_m), R.block_dim(out_m)))
                            emit(k, col,
                                 ((h,) + chain, ((a_m, a_e),) + inputs,
                                  (p.output, r_e)),
                                 c)
            # inner: split one input into two along an intermediate ray
            for nu in range(1, n + 1):
                i0, i1 = chain[nu - 1], chain[nu]
                tgt_m, tgt_e = inputs[nu - 1]
                for mid in R.order:
                    if not pos[i0] < pos[mid] < pos[i1]:
                        continue
                    for a_m in blocks.get((i0, mid), ()):
                        for b_m in blocks.get((mid, i1), ()):
                            p = R.product(a_m, b_m)
                            if p is None or p.output != tgt_m:
                                continue
                            for a_e in range(R.block_dim(a_m)):
                                for b_e in range(R.block_dim(b_m)):
                                    c = _coefficient_entry(
                                        p.coefficient, tgt_e, (a_e, b_e),
                                        (R.block_dim(a_m),
                                         R.block_dim(b_m)))
                                    new_chain = (chain[:nu] + (mid,)
                                                 + chain[nu:])
                                    new_inputs = (inputs[:nu - 1]
                                                  + ((a_m, a_e), (b_m, b_e))
                                                  + inputs[nu:])
                                    emit(k, col,
                                         (new_chain, new_inputs, output),
                                         (-1) ** nu * c)
            # outer right: multiply the output on the right
            for h in R.order:
                if pos[h] <= pos[chain[-1]]:
                    continue
                for b_m in blocks.get((chain[-1], h), ()):
                    p = R.product(out_m, b_m)
                    if p is None:
                        continue
                    for b_e in range(R.block_dim(b_m)):
                        for r_e in range(R.block_dim(p.output)):
                            c = _coefficient_entry(
                                p.coefficient, r_e, (out_e, b_e),
                                (R.block_dim(out_m), R.block_dim(b_m)))
                            emit(k, col,
                                 (chain + (h,), inputs + ((b_m, b_e),),
                                  (p.output, r_e)),
                                 (-1) ** (n + 1) * c)

    diffs = {}
    for k in basis:
        if k + 1 not in basis:
            if any(columns[k].values()):
                raise RuntimeError("differential leaves the complex")
            continue
        entries = {}
        for col, rows in columns[k].items():
            for row, val in rows.items():
                if val:
                    entries[(row, col)] = val
        diffs[k] = MatrixQ(len(basis[k + 1]), len(basis[k]), entries) \
            if entries else MatrixQ.zero(len(basis[k + 1]), len(basis[k]))
    complex_ = ChainComplexQ({k: v for k, v in basis.items()}, diffs)
    return DirectedHochschild(R, complex_)


# ---------------------------------------------------------------------------
# the comparison map and its verification

@dataclass(frozen=True, eq=False)
class UniversalityReport:
    ic: InfinityConfig
    coeffs: CoefficientSystem | None
    g_dims: dict[int, int]
    hochschild_betti: dict[int, int]
    quasi_iso: bool
    quasi: QuasiIsoReport
    chain_map_ok: bool
    psi_higher_components: dict[int, int]
    handle_monotone: bool
    gr0_quasi_iso: bool
    gr0_support_match: bool

    def to_json(self) -> dict:
        return {
            "g_dims": {str(k): v for k, v in sorted(self.g_dims.items())},
            "hochschild_betti": {str(k): v for k, v in
                                 sorted(self.hochschild_betti.items())},
            "quasi_iso": self.quasi_iso,
            "psi_higher_components": {str(n): c for n, c in
                                      sorted(self.psi_higher_components.items())},
        }


def _handle_length(cc: PointConfig, rays, label) -> int:
    """Shared boundary between the outermost inputs and the output: the
    number of initial edges the first input's path shares with the
    output's, plus final edges for the last input."""
    chain, inputs, (out_m, _) = label
    c_path = boundary_path(cc, out_m)
    first = boundary_path(cc, inputs[0][0])
    last = boundary_path(cc, inputs[-1][0])
    if first[0] != c_path[0] or last[-1] != c_path[-1]:
        raise RuntimeError("input paths do not span the output's")
    pre = 0
    while (pre + 1 < len(first) and pre + 1 < len(c_path)
           and first[pre + 1] == c_path[pre + 1]):
        pre += 1
    suf = 0
    while (suf + 1 < len(last) and suf + 1 < len(c_path)
           and last[-2 - suf] == c_path[-2 - suf]):
        suf += 1
    return pre + suf


def _corner_support(ic: InfinityConfig, cc: PointConfig, rays, label) -> bool:
    """Geometric description of where the comparison map can land inside
    the handle-zero layer: each input spans a single lower edge, those
    edges close up with the output's boundary path into a convex polygon,
    and the cells cut out by the polygon's upper edges recover the inputs
    exactly."""
    chain, inputs, (out_m, _) = label
    c_path = boundary_path(cc, out_m)
    if chain[0] != c_path[0] or chain[-1] != c_path[-1]:
        return False
    for (m, _), a, b in zip(inputs, chain, chain[1:]):
        if boundary_path(cc, m) != (a, b):
            return False
    cycle = list(c_path) + [chain[i] for i in range(len(chain) - 2, 0, -1)]
    if len(cycle) < 3:
        return False
    from .geometry import orient
    n = len(cycle)
    for i in range(n):
        if orient(cc, (cycle[i], cycle[(i + 1) % n],
                       cycle[(i + 2) % n])) != 1:
            return False
    hull = convex_hull(cc, cycle)
    finite_labels = [l for l in out_m if l != INFINITY_LABEL]
    q = tuple(l for l in finite_labels if point_in_hull(cc, hull, l))
    sub = restrict_config(cc, out_m)
    if not is_geometric(sub, q) or convex_hull(sub, q).dimension != 2:
        return False
    covered = set(q)
    for (m, _), a, b in zip(inputs, chain, chain[1:]):
        region = convex_hull(cc, (a, b, INFINITY_LABEL))
        cell = tuple(l for l in finite_labels
                     if point_in_hull(cc, region, l)) + (INFINITY_LABEL,)
        if cc.sort_labels(cell) != m:
            return False
        covered |= set(m)
    return covered == set(out_m)


def verify_universality(ic: InfinityConfig,
                        coeffs: CoefficientSystem | None = None) -> UniversalityReport:
    """Check that the one-finite-cell component of the mixed differential
    is a quasi-isomorphism onto the directed Hochschild complex.

    Also verifies the two structural facts behind it: the differential
    never decreases the shared-handle length, and on the handle-zero layer
    the image is exactly the convex-corner cochains."""
    if ic.base.dimension != 2:
        raise ValueError("universality is checked for planar configurations")
    md = mixed_differential(ic, coeffs)
    if not md.report.ok:
        raise RuntimeError(f"structure tables fail d^2 = 0: "
                           f"{md.report.failures[:1]}")
    psi = extract_psi(md)
    R = build_R_infty(ic, coeffs)
    H = directed_hochschild(R)
    cc, tables = md.config, md.tables

    for t in psi.bracket_terms:
        if len(t.sym) == 1:
            raise RuntimeError(f"finite generator {t.source} has a nonzero "
                               "internal differential")

    g_labels: dict[int, list] = {}
    for g in tables.generators:
        if _is_far(g):
            continue
        degs = ((0,) if coeffs is None else
                generator_block(cc, g, coeffs).element_degrees())
        for e, d in enumerate(degs):
            g_labels.setdefault(tables.degree(g) + d, []).append((g, e))
    g_complex = ChainComplexQ({k: tuple(sorted(v))
                               for k, v in g_labels.items()})
    g_index = {lab: (k, i) for k, labs in g_complex.basis_labels.items()
               for i, lab in enumerate(labs)}
    h_index = H.label_index()

    psi_entries: dict[int, dict[tuple[int, int], Fraction]] = {}
    for t in psi.components.get(1, ()):
        q = t.sym[0]
        word_paths = [boundary_path(cc, b) for b in t.word]
        chain = (word_paths[0][0],) + tuple(p[-1] for p in word_paths)
        dims = [len(generator_block(cc, c, coeffs).element_degrees())
                if coeffs is not None else 1
                for c in (q,) + t.word]
        out_dim = (generator_block(cc, t.source, coeffs).dim
                   if coeffs is not None else 1)
        for col_flat in range(1 if coeffs is None else
                              dims[0] * _prod(dims[1:])):
            combo = _decode(col_flat, dims)
            q_e, word_e = combo[0], combo[1:]
            for out_e in range(out_dim):
                c = _coefficient_entry(t.coefficient, out_e, combo, dims)
                if not c:
                    continue
                src = (q, q_e)
                tgt = (chain, tuple(zip(t.word, word_e)), (t.source, out_e))
                ks, ci = g_index[src]
                kt, ri = h_index[tgt]
                if ks != kt:
                    raise RuntimeError(
                        f"comparison map does not preserve degree at {src}")
                psi_entries.setdefault(ks, {})[(ri, ci)] = \
                    psi_entries.get(ks, {}).get((ri, ci), Q(0)) + c

    psi1 = {}
    for k in set(g_complex.basis_labels) | set(H.complex.basis_labels):
        nr, nc = H.complex.dim(k), g_complex.dim(k)
        ent = {rc: v for rc, v in psi_entries.get(k, {}).items() if v}
        psi1[k] = MatrixQ(nr, nc, ent) if ent else MatrixQ.zero(nr, nc)

    chain_map_ok = all(
        (H.complex.differential(k) @ psi1[k]).is_zero()
        for k in g_complex.basis_labels)
    quasi = is_quasi_iso(psi1, g_complex, H.complex)

    handle = {lab: _handle_length(cc, R.rays, lab)
              for labs in H.complex.basis_labels.values() for lab in labs}
    handle_monotone = True
    for k in H.complex.basis_labels:
        d = H.complex.differential(k)
        rows = d.to_rows()
        labs_k = H.complex.basis_labels[k]
        labs_k1 = H.complex.basis_labels.get(k + 1, ())
        for r, row in enumerate(rows):
            for c, x in enumerate(row):
                if x and handle[labs_k1[r]] < handle[labs_k[c]]:
                    handle_monotone = False

    gr0_basis = {k: tuple(lab for lab in labs if handle[lab] == 0)
                 for k, labs in H.complex.basis_labels.items()}
    gr0_basis = {k: v for k, v in gr0_basis.items() if v}
    gr0_pos = {lab: (k, i) for k, labs in gr0_basis.items()
               for i, lab in enumerate(labs)}
    gr0_diffs = {}
    for k, labs in gr0_basis.items():
        if k + 1 not in gr0_basis:
            continue
        full = H.complex.differential(k).to_rows()
        h_rows = {lab: i for i, lab in
                  enumerate(H.complex.basis_labels.get(k + 1, ()))}
        h_cols = {lab: i for i, lab in
                  enumerate(H.complex.basis_labels[k])}
        ent = {}
        for ci, clab in enumerate(labs):
            for ri, rlab in enumerate(gr0_basis[k + 1]):
                v = full[h_rows[rlab]][h_cols[clab]]
                if v:
                    ent[(ri, ci)] = v
        gr0_diffs[k] = MatrixQ(len(gr0_basis[k + 1]), len(labs), ent)
    gr0_complex = ChainComplexQ(gr0_basis, gr0_diffs)

    psi_bar = {}
    support = set()
    for k in set(g_complex.basis_labels) | set(gr0_basis):
        nr, nc = gr0_complex.dim(k), g_complex.dim(k)
        ent = {}
        full = psi1.get(k)
        if full is not None and nr and nc:
            rows = full.to_rows()
            h_rows = {lab: i for i, lab in
                      enumerate(H.complex.basis_labels.get(k, ()))}
            for ri, rlab in enumerate(gr0_basis.get(k, ())):
                for ci in range(nc):
                    v = rows[h_rows[rlab]][ci]
                    if v:
                        ent[(ri, ci)] = v
                        support.add(_label_shadow(rlab))
        psi_bar[k] = MatrixQ(nr, nc, ent) if ent else MatrixQ.zero(nr, nc)
    gr0_quasi = is_quasi_iso(psi_bar, g_complex, gr0_complex)

    corner = {_label_shadow(lab)
              for labs in gr0_basis.values() for lab in labs
              if _corner_support(ic, cc, R.rays, lab)}
    gr0_support_match = support == corner

    return UniversalityReport(
        ic, coeffs,
        g_dims={k: len(v) for k, v in g_complex.basis_labels.items()},
        hochschild_betti=H.complex.cohomology(),
        quasi_iso=quasi.is_quasi_iso,
        quasi=quasi,
        chain_map_ok=chain_map_ok,
        psi_higher_components=psi.higher_counts(),
        handle_monotone=handle_monotone,
        gr0_quasi_iso=gr0_quasi.is_quasi_iso,
        gr0_support_match=gr0_support_match,
    )


def _label_shadow(label):
    chain, inputs, output = label
    return (chain, tuple(m for m, _ in inputs), output[0])


def _prod(xs) -> int:
    out = 1
    for x in xs:
        out *= x
    return out


def _decode(idx: int, dims: Sequence[int]) -> tuple[int, ...]:
    combo = []
    for d in reversed(dims):
        combo.append(idx % d)
        idx //= d
    return tuple(reversed(combo))
