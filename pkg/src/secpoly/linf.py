"""Homotopy Lie structure extracted from secondary polytopes.

Each full-dimensional marked subpolytope contributes a one-dimensional
generator sitting in the orientation line of its secondary polytope; coarse
subdivisions contribute signed matrix elements, assembled either as the
differential of a graded-commutative algebra on the symmetric space of
generators or, dually, as the structure constants of an L-infinity algebra.

Sign conventions (pinned here, verified by the d^2 = 0 checks):
  * the canonical orientation of a secondary polytope is its reduced echelon
    basis of GKZ-vector differences, base point the least triangulation;
  * a lattice face is oriented by concatenating the canonical bases of its
    cells' secondary polytopes, cells in canonical order;
  * the incidence sign compares (outward vector, facet basis) against the
    face basis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .geometry import PointConfig, convex_hull, enumerate_subpolytopes
from .linalg import ChainComplexQ, MatrixQ, coordinates_in_basis, det, rref
from .secondary import Face, SecondaryPolytope
from .subdivision import (
    Subdivision,
    coarse_subdivisions_of,
    enumerate_regular_triangulations,
    refines,
)

Q = Fraction


# ---------------------------------------------------------------------------
# orientation classes


@dataclass(frozen=True)
class OrientationClass:
    """Ordered basis of the span of GKZ differences, in marking coordinates."""

    marking: tuple[str, ...]
    basis: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.basis)


_GKZ_DATA_CACHE: dict = {}


def _gkz_data(config: PointConfig, marking: tuple[str, ...]):
    """(gkz vectors, top centroid, echelon basis) for one marking."""
    key = (config, marking)
    hit = _GKZ_DATA_CACHE.get(key)
    if hit is not None:
        return hit
    from .secondary import gkz_vector

    tris = enumerate_regular_triangulations(config, marking)
    vecs = [tuple(gkz_vector(config, t)[l] for l in marking) for t in tris]
    base = vecs[0]
    diffs = [[v - b for v, b in zip(vec, base)] for vec in vecs[1:]]
    basis, _ = rref(diffs) if diffs else ([], [])
    basis = tuple(tuple(row) for row in basis)
    n = Q(len(vecs))
    centroid = tuple(sum(v[i] for v in vecs) / n for i in range(len(marking)))
    out = (tris, vecs, centroid, basis)
    _GKZ_DATA_CACHE[key] = out
    return out


def orientation_class(config: PointConfig, marking: Iterable[str]) -> OrientationClass:
    mk = config.sort_labels(marking)
    _, _, _, basis = _gkz_data(config, mk)
    if len(basis) != len(mk) - config.dimension - 1:
        raise RuntimeError("orientation basis has unexpected dimension")
    return OrientationClass(mk, basis)


def _inject(vec: Sequence[Fraction], cell: tuple[str, ...],
            parent: tuple[str, ...]) -> tuple[Fraction, ...]:
    pos = {l: i for i, l in enumerate(parent)}
    out = [Q(0)] * len(parent)
    for l, v in zip(cell, vec):
        out[pos[l]] = v
    return tuple(out)


def product_basis(config: PointConfig, parent: tuple[str, ...],
                  cells: Sequence[tuple[str, ...]]) -> list[tuple[Fraction, ...]]:
    """Orientation basis of the face of Sigma(parent) given by a subdivision:
    canonical bases of the cell secondaries, concatenated in cell order and
    pushed into parent coordinates."""
    out = []
    for cell in cells:
        for vec in orientation_class(config, cell).basis:
            out.append(_inject(vec, cell, parent))
    return out


class DegenerateFaceError(ValueError):
    """A face whose cell secondaries do not multiply out to the face itself
    (dependent folding constraints); product orientations are undefined."""


def _sign_against(top_basis, facet_vectors) -> int:
    rows = []
    for v in facet_vectors:
        coords = coordinates_in_basis(top_basis, v)
        if coords is None:
            raise DegenerateFaceError("vector outside the face span")
        rows.append(list(coords))
    d = det(rows)
    if d == 0:
        raise DegenerateFaceError("degenerate orientation comparison")
    return 1 if d > 0 else -1


def incidence_sign(sp: SecondaryPolytope, small: Face, big: Face) -> int:
    """Boundary orientation sign of a codimension-1 face pair, both faces
    carrying their product orientations."""
    if small.index not in big.children:
        raise ValueError("incidence sign needs a codimension-1 face pair")
    config = sp.config
    b_big = product_basis(config, sp.marking, big.subdivision.cells)
    b_small = product_basis(config, sp.marking, small.subdivision.cells)
    if len(b_big) != big.dim or len(b_small) != small.dim:
        raise DegenerateFaceError(
            "face is a degenerate projection of its cell product")

    def centroid(face: Face):
        ids = sorted(face.vertex_ids)
        n = Q(len(ids))
        return [sum(sp.gkz[i][k] for i in ids) / n for k in range(len(sp.marking))]

    c_big, c_small = centroid(big), centroid(small)
    outward = [a - b for a, b in zip(c_small, c_big)]
    return _sign_against(b_big, [tuple(outward)] + b_small)


def _facet_sign(config: PointConfig, marking: tuple[str, ...],
                coarse: Subdivision) -> int:
    """Incidence sign of a coarse subdivision's facet against the top face,
    computed without building the full face lattice."""
    tris, vecs, top_centroid, top_basis = _gkz_data(config, marking)
    facet_basis = product_basis(config, marking, coarse.cells)
    if len(facet_basis) != len(top_basis) - 1:
        raise DegenerateFaceError(
            f"coarse subdivision {coarse.cells} of {marking} is degenerate: "
            "cell secondaries do not multiply out to a facet")
    ids = [i for i, t in enumerate(tris) if refines(config, t, coarse)]
    n = Q(len(ids))
    f_centroid = [sum(vecs[i][k] for i in ids) / n for k in range(len(marking))]
    outward = tuple(f - c for f, c in zip(f_centroid, top_centroid))
    return _sign_against(top_basis, [outward] + facet_basis)


# ---------------------------------------------------------------------------
# structure tables


@dataclass(frozen=True)
class StructureEntry:
    inputs: tuple[tuple[str, ...], ...]   # cell markings, canonical order
    output: tuple[str, ...]               # the subdivided marking
    coefficient: object                   # Fraction, or MatrixQ with coefficients


@dataclass(frozen=True)
class LinftyTables:
    config: PointConfig
    variant: str                          # "marked" | "geometric"
    generators: tuple[tuple[str, ...], ...]
    tables: Mapping[int, tuple[StructureEntry, ...]]
    coeffs: object = None                 # CoefficientSystem when decorated

    def degree(self, marking: tuple[str, ...]) -> int:
        return len(marking) - self.config.dimension

    def parity(self, marking: tuple[str, ...]) -> int:
        return (len(marking) - self.config.dimension - 1) % 2

    def arities(self) -> list[int]:
        return sorted(self.tables)

    def entries(self, arity: int) -> tuple[StructureEntry, ...]:
        return self.tables.get(arity, ())

    def all_entries(self) -> list[StructureEntry]:
        return [e for n in self.arities() for e in self.tables[n]]

    def differential_map(self) -> dict[tuple[str, ...], list[StructureEntry]]:
        """Entries grouped by the generator they differentiate."""
        out: dict[tuple[str, ...], list[StructureEntry]] = {}
        for e in self.all_entries():
            out.setdefault(e.output, []).append(e)
        return out


def build_structure_tables(config: PointConfig, variant: str = "marked",
                           coeffs=None) -> LinftyTables:
    if variant not in ("marked", "geometric"):
        raise ValueError("variant must be 'marked' or 'geometric'")
    geometric_only = variant == "geometric"
    gens = tuple(config.sort_labels(mp.marking) for mp in
                 enumerate_subpolytopes(config, geometric_only=geometric_only))
    gen_set = set(gens)
    tables: dict[int, list[StructureEntry]] = {}
    for marking in gens:
        for coarse in coarse_subdivisions_of(config, marking):
            cells = coarse.cells
            if geometric_only and not all(c in gen_set for c in cells):
                continue
            sign = Q(_facet_sign(config, marking, coarse))
            coeff = sign if coeffs is None else coeffs.entry_coefficient(
                config, marking, coarse, sign)
            entry = StructureEntry(cells, marking, coeff)
            tables.setdefault(len(cells), []).append(entry)
    frozen = {n: tuple(sorted(es, key=lambda e: (e.output, e.inputs)))
              for n, es in tables.items()}
    return LinftyTables(config, variant, gens, frozen, coeffs)


def koszul_sort(markings: Sequence[tuple[str, ...]],
                parity) -> tuple[tuple[tuple[str, ...], ...], int]:
    """Canonically sort a generator word, tracking the Koszul sign.

    Returns sign 0 when an odd-parity generator repeats (its square is zero
    in the graded-symmetric algebra).
    """
    seq = list(markings)
    sign = 1
    # insertion sort; each adjacent swap of generators g, h costs (-1)^(|g||h|)
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            if parity(seq[j - 1]) and parity(seq[j]):
                sign = -sign
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            j -= 1
    for a, b in zip(seq, seq[1:]):
        if a == b and parity(a):
            return tuple(seq), 0
    return tuple(seq), sign


@dataclass(frozen=True)
class DSquaredReport:
    ok: bool
    checked: int
    failures: tuple = ()


def verify_d_squared(tables: LinftyTables) -> DSquaredReport:
    """Expand the derivation-squared on every generator and demand zero.

    d(e) is the signed sum of cell words over coarse subdivisions; the second
    application uses the Leibniz rule with Koszul prefix signs.  Any nonzero
    residual word is reported with its generator.
    """
    if tables.coeffs is not None:
        return _verify_d_squared_decorated(tables)
    dmap = tables.differential_map()
    parity = tables.parity
    failures = []
    for g in tables.generators:
        residual: dict = {}
        for e1 in dmap.get(g, []):
            word = e1.inputs
            for i, gi in enumerate(word):
                prefix = sum(parity(x) for x in word[:i]) % 2
                for e2 in dmap.get(gi, []):
                    seq = word[:i] + e2.inputs + word[i + 1:]
                    key, ks = koszul_sort(seq, parity)
                    if ks == 0:
                        continue
                    c = e1.coefficient * e2.coefficient * ks * (-1) ** prefix
                    residual[key] = residual.get(key, Q(0)) + c
        bad = {k: v for k, v in residual.items() if v}
        if bad:
            failures.append((g, tuple(sorted(bad))))
    return DSquaredReport(not failures, len(tables.generators), tuple(failures))


def _verify_d_squared_decorated(tables: LinftyTables) -> DSquaredReport:
    """d-squared on decorated generators: e_{A'} tensor a block basis vector.

    Koszul bookkeeping runs over total parities (generator parity plus the
    block degree of the attached vector); entry matrices are read as
    structure constants between block bases, with columns decomposed cell by
    cell.  Nothing here assumes the matrices are monomial.
    """
    from .coeff import generator_block  # deferred: coeff never imports linf

    cs = tables.coeffs
    config = tables.config
    dmap = tables.differential_map()
    blocks = {g: generator_block(config, g, cs) for g in tables.generators}
    degrees = {g: blocks[g].element_degrees() for g in tables.generators}

    def par(elt) -> int:
        g, j = elt
        return (tables.parity(g) + degrees[g][j]) % 2

    expansions: dict = {}

    def d_of(elt):
        hit = expansions.get(elt)
        if hit is None:
            g, j = elt
            hit = []
            for e in dmap.get(g, []):
                cell_dims = [blocks[c].dim for c in e.inputs]
                for (row, col), v in e.coefficient.entries.items():
                    if row == j:
                        combo = _mixed_radix(col, cell_dims)
                        hit.append((v, tuple(zip(e.inputs, combo))))
            expansions[elt] = hit
        return hit

    failures = []
    for g in tables.generators:
        for j in range(blocks[g].dim):
            residual: dict = {}
            for c1, word in d_of((g, j)):
                prefix = 0
                for i, elt in enumerate(word):
                    for c2, inner in d_of(elt):
                        seq = word[:i] + inner + word[i + 1:]
                        key, ks = _sort_decorated(seq, par)
                        if ks:
                            c = c1 * c2 * ks * (-1) ** prefix
                            residual[key] = residual.get(key, Q(0)) + c
                    prefix = (prefix + par(elt)) % 2
            bad = tuple(sorted(k for k, v in residual.items() if v))
            if bad:
                failures.append(((g, j), bad))
    return DSquaredReport(not failures, len(tables.generators), tuple(failures))


def _mixed_radix(idx: int, dims: Sequence[int]) -> tuple[int, ...]:
    combo = []
    for d in reversed(dims):
        combo.append(idx % d)
        idx //= d
    return tuple(reversed(combo))


def _sort_decorated(seq, par):
    """Insertion-sort decorated generators (marking, block index), tracking
    the Koszul sign over total parities; zero when an odd element repeats."""
    lst = list(seq)
    sign = 1
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            if par(lst[j - 1]) and par(lst[j]):
                sign = -sign
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            j -= 1
    for a, b in zip(lst, lst[1:]):
        if a == b and par(a):
            return tuple(lst), 0
    return tuple(lst), sign


def nilpotency_bound(tables: LinftyTables) -> int:
    """Largest number of leaves over composition trees supported by the
    tables; composites with more inputs vanish identically.  This is a
    support bound: cancellations could only lower it further."""
    dmap = tables.differential_map()
    weight: dict[tuple[str, ...], int] = {}
    bound = 0
    for g in sorted(tables.generators, key=len):
        w = 1
        for e in dmap.get(g, []):
            total = sum(weight.get(i, 1) for i in e.inputs)
            bound = max(bound, total)
            w = max(w, total)
        weight[g] = w
    assert bound < len(tables.config.labels), "nilpotency bound law violated"
    return bound


# ---------------------------------------------------------------------------
# the one-polytope chain complex and marked columns


def cellular_complex(sp: SecondaryPolytope) -> ChainComplexQ:
    """Chain complex of the full face lattice with product orientations,
    graded so faces of dimension i sit in degree -i."""
    by_deg: dict[int, list[Face]] = {}
    for f in sp.faces:
        by_deg.setdefault(-f.dim, []).append(f)
    labels = {k: tuple(f.index for f in fs) for k, fs in by_deg.items()}
    index_of = {k: {f: i for i, f in enumerate(labels[k])} for k in labels}
    diffs = {}
    for k in sorted(labels):
        if k + 1 not in labels:
            continue
        entries = {}
        for f in sp.faces:
            if -f.dim != k:
                continue
            col = index_of[k][f.index]
            for c in f.children:
                row = index_of[k + 1][c]
                entries[(row, col)] = Q(incidence_sign(sp, sp.faces[c], f))
        diffs[k] = MatrixQ(len(labels[k + 1]), len(labels[k]), entries)
    return ChainComplexQ(labels, diffs)


@dataclass(frozen=True)
class ColumnReport:
    marking: tuple[str, ...]
    extra_points: tuple[str, ...]
    dims: dict
    betti: dict
    exact: bool


def marked_column_cohomology(config: PointConfig, labels: Iterable[str]) -> ColumnReport:
    """Cohomology of the span of all markings sharing one hull, under the
    point-dropping part of the differential.

    Exact whenever the hull holds configuration points besides its vertices;
    one-dimensional otherwise.
    """
    from .geometry import point_in_hull
    from .subdivision import make_subdivision

    d = config.dimension
    hull = convex_hull(config, config.sort_labels(labels))
    verts = hull.vertices
    extra = tuple(l for l in config.labels
                  if l not in verts and point_in_hull(config, hull, l))

    markings = []
    for r in range(len(extra) + 1):
        for sub in itertools.combinations(extra, r):
            markings.append(config.sort_labels(tuple(verts) + sub))
    by_deg: dict[int, list[tuple[str, ...]]] = {}
    for b in markings:
        by_deg.setdefault(d + 1 - len(b), []).append(b)
    labels_by_deg = {k: tuple(sorted(v)) for k, v in by_deg.items()}
    index_of = {k: {b: i for i, b in enumerate(bs)}
                for k, bs in labels_by_deg.items()}

    diffs = {}
    for k in sorted(labels_by_deg):
        if k + 1 not in labels_by_deg:
            continue
        entries = {}
        for b in labels_by_deg[k]:
            col = index_of[k][b]
            for p in b:
                if p in verts:
                    continue
                smaller = tuple(l for l in b if l != p)
                drop = make_subdivision(config, b, [smaller])
                sign = _facet_sign(config, b, drop)
                entries[(index_of[k + 1][smaller], col)] = Q(sign)
        diffs[k] = MatrixQ(len(labels_by_deg[k + 1]), len(labels_by_deg[k]), entries)

    complex_ = ChainComplexQ(labels_by_deg, diffs)
    betti = complex_.cohomology()
    dims = {k: len(v) for k, v in labels_by_deg.items()}
    return ColumnReport(config.sort_labels(labels), extra, dims, betti,
                        all(v == 0 for v in betti.values()))
