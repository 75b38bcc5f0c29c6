"""Regular polyhedral subdivisions of marked polytopes: lower-hull
construction from lifting functions, LP regularity certificates, the
refinement order, flip-graph enumeration of regular triangulations, and the
catalogue of coarse subdivisions.

A subdivision is stored combinatorially: the parent marking plus the tuple of
cell markings, each canonically sorted.  Certificates (lifting functions) ride
along but never participate in equality.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .geometry import (
    INFINITY_LABEL,
    PointConfig,
    convex_hull,
    enumerate_circuits,
    hull_volume,
    is_geometric,
    point_in_hull,
    require_general_position,
    simplex_volume,
)
from .linalg import kernel_basis, rank, solve
from .lp import LPResult, lp_strict_feasible

Q = Fraction


@dataclass(frozen=True)
class Subdivision:
    """Combinatorial subdivision: parent marking and cell markings."""

    parent: tuple[str, ...]
    cells: tuple[tuple[str, ...], ...]
    certificate: tuple[tuple[str, Fraction], ...] | None = field(
        default=None, compare=False)

    @property
    def is_proper(self) -> bool:
        return self.cells != (self.parent,)

    def cell_sets(self) -> list[frozenset]:
        return [frozenset(c) for c in self.cells]

    def certificate_dict(self) -> dict[str, Fraction] | None:
        return dict(self.certificate) if self.certificate is not None else None

    def is_triangulation(self, dimension: int) -> bool:
        return all(len(c) == dimension + 1 for c in self.cells)


def make_subdivision(config: PointConfig, parent: Iterable[str],
                     cells: Iterable[Iterable[str]],
                     certificate: Mapping[str, Fraction] | None = None) -> Subdivision:
    par = config.sort_labels(parent)
    cs = tuple(sorted((config.sort_labels(c) for c in cells),
                      key=lambda c: tuple(config.label_key(l) for l in c)))
    cert = None
    if certificate is not None:
        cert = tuple(sorted(((l, Q(v)) for l, v in certificate.items()),
                            key=lambda kv: config.label_key(kv[0])))
    return Subdivision(par, cs, cert)


def restrict_config(config: PointConfig, labels: Iterable[str]) -> PointConfig:
    """Sub-configuration on a label subset (order preserved).  Keeps the
    infinity direction iff the subset contains the infinity label."""
    keep = set(labels)
    pairs = [(l, c) for l, c in zip(config.labels, config.coords) if l in keep]
    inf = config.infinity_direction if INFINITY_LABEL in keep else None
    return PointConfig(config.dimension, tuple(l for l, _ in pairs),
                       tuple(c for _, c in pairs), inf)


# ---------------------------------------------------------------------------
# lower hulls


def lower_hull_subdivision(config: PointConfig, parent: Iterable[str],
                           psi: Mapping[str, Fraction]) -> Subdivision:
    """Regular subdivision induced by a lifting function.

    Lift each marked point p to (p, psi(p)), take the lower facets of the
    lifted hull, project.  A cell's marking is every marked point whose lift
    lies on the cell's supporting hyperplane.  Points lifted strictly above
    all supporting hyperplanes disappear from the markings.
    """
    d = config.dimension
    marking = config.sort_labels(parent)
    if INFINITY_LABEL in marking and INFINITY_LABEL not in config.labels:
        raise ValueError("lower hulls need finite points; concretize first")
    for l in marking:
        if l not in psi:
            raise ValueError(f"psi missing value at {l!r}")
    pts = {l: config.coord(l) for l in marking}

    cells: set[tuple[str, ...]] = set()
    for base in itertools.combinations(marking, d + 1):
        # the affine graph hyperplane through these d+1 lifted points:
        # x_{d+1} = a.x + b, solvable since the base is affinely independent
        rows = [list(pts[l]) + [Q(1)] for l in base]
        rhs = [Q(psi[l]) for l in base]
        sol = _solve_square(rows, rhs)
        if sol is None:
            continue
        a, b = sol[:d], sol[d]
        on, below = [], False
        for l in marking:
            val = sum(ai * xi for ai, xi in zip(a, pts[l])) + b
            lift = Q(psi[l])
            if lift < val:
                below = True
                break
            if lift == val:
                on.append(l)
        if below:
            continue
        cells.add(config.sort_labels(on))

    # keep only maximal on-sets: non-maximal supporting sets are lower faces
    # of the same facet
    maximal = [c for c in cells
               if not any(set(c) < set(o) for o in cells if o != c)]
    sub = make_subdivision(config, marking, maximal, psi)
    _check_tiling(config, sub)
    return sub


def _solve_square(rows, rhs):
    from .linalg import solve
    return solve(rows, rhs)


# ---------------------------------------------------------------------------
# structural validation


class MalformedSubdivision(ValueError):
    pass


def walls(config: PointConfig, s: Subdivision):
    """(internal, boundary) wall lists.  Internal walls carry the index pair
    of their two cells, boundary walls the single cell index."""
    seen: dict[tuple[str, ...], list[int]] = {}
    for i, cell in enumerate(s.cells):
        h = convex_hull(config, cell)
        for f, _ in h.facets:
            seen.setdefault(f, []).append(i)
    internal, boundary = [], []
    for f, owners in sorted(seen.items(),
                            key=lambda kv: tuple(config.label_key(l) for l in kv[0])):
        if len(owners) == 2:
            internal.append((f, (owners[0], owners[1])))
        elif len(owners) == 1:
            boundary.append((f, owners[0]))
        else:
            raise MalformedSubdivision(f"wall {f} shared by {len(owners)} cells")
    return internal, boundary


def _check_tiling(config: PointConfig, s: Subdivision) -> None:
    parent_set = set(s.parent)
    for cell in s.cells:
        if not set(cell) <= parent_set:
            raise MalformedSubdivision("cell marking escapes the parent marking")
    vol = sum(hull_volume(config, convex_hull(config, c)) for c in s.cells)
    target = hull_volume(config, convex_hull(config, s.parent))
    if vol != target:
        raise MalformedSubdivision(f"cell volumes sum to {vol}, parent has {target}")
    for a, b in itertools.combinations(s.cells, 2):
        if _interiors_overlap(config, a, b):
            raise MalformedSubdivision(f"cells {a} and {b} overlap")
    walls(config, s)  # raises on triple-shared walls


# ---------------------------------------------------------------------------
# regularity


@dataclass(frozen=True)
class RegularityResult:
    regular: bool
    certificate: tuple[tuple[str, Fraction], ...] | None = None

    def certificate_dict(self):
        return dict(self.certificate) if self.certificate else None


def _spanning_simplex(config: PointConfig, cell: tuple[str, ...]) -> tuple[str, ...]:
    """d+1 affinely independent labels of a full-dimensional cell."""
    d = config.dimension
    chosen: list[str] = []
    rows: list[list[Fraction]] = []
    for l in cell:
        cand = rows + [[*config.coord(l), Q(1)]]
        if rank(cand) == len(cand):
            chosen.append(l)
            rows = cand
        if len(chosen) == d + 1:
            return tuple(chosen)
    raise MalformedSubdivision(f"cell {cell} is not full-dimensional")


_BARY_CACHE: dict = {}
_FOLDING_CACHE: dict = {}


def _barycentric_weights(config: PointConfig, simplex: tuple[str, ...],
                         label: str) -> tuple[Fraction, ...]:
    key = (config, simplex, label)
    w = _BARY_CACHE.get(key)
    if w is None:
        d = config.dimension
        cols = [[*config.coord(l), Q(1)] for l in simplex]
        a_rows = [[cols[k][j] for k in range(d + 1)] for j in range(d + 1)]
        w = solve(a_rows, [*config.coord(label), Q(1)])
        _BARY_CACHE[key] = w
    return w


def _barycentric_row(config: PointConfig, simplex: tuple[str, ...],
                     label: str, var_of, sign: int):
    """Row of sign * (psi_label - affine interpolation over the simplex)."""
    weights = _barycentric_weights(config, simplex, label)
    row = [Q(0)] * len(var_of)
    row[var_of[label]] += Q(sign)
    for w, l in zip(weights, simplex):
        row[var_of[l]] -= Q(sign) * w
    return row


def folding_system(config: PointConfig, s: Subdivision):
    """(equalities, stricts, nvars, var_index) of the regularity LP.

    One variable per parent-marking point (the lift).  Per-cell affine
    functions are eliminated by barycentric interpolation over a spanning
    simplex of the cell: equalities force the remaining marked points of a
    cell onto its interpolated function; stricts demand a convex break
    across every internal wall and strict above-ness of unmarked points
    over the cell containing them.

    Results are cached; callers must treat the returned rows as read-only.
    """
    fkey = (config, s.parent, s.cells)
    hit = _FOLDING_CACHE.get(fkey)
    if hit is not None:
        return hit
    marking = s.parent
    var_of = {l: i for i, l in enumerate(marking)}
    nvars = len(marking)
    spans = [_spanning_simplex(config, cell) for cell in s.cells]

    equalities = []
    for cell, span in zip(s.cells, spans):
        for l in cell:
            if l in span:
                continue
            equalities.append((_barycentric_row(config, span, l, var_of, 1),
                               Q(0)))

    stricts = []
    internal, _ = walls(config, s)
    for wall, (i, j) in internal:
        # one break per wall: cell i's function, extended across the wall,
        # sits strictly below the lift of a point of cell j off the wall
        off = next(l for l in s.cells[j] if l not in wall)
        stricts.append((_barycentric_row(config, spans[i], off, var_of, 1),
                        Q(0)))

    hulls = {i: convex_hull(config, cell) for i, cell in enumerate(s.cells)}
    for l in marking:
        if any(l in cell for cell in s.cells):
            continue
        holder = next((i for i in range(len(s.cells))
                       if point_in_hull(config, hulls[i], l)), None)
        if holder is None:
            raise MalformedSubdivision(f"marked point {l} escapes all cells")
        stricts.append((_barycentric_row(config, spans[holder], l, var_of, 1),
                        Q(0)))

    out = (equalities, stricts, nvars, var_of)
    _FOLDING_CACHE[fkey] = out
    return out


_REGULARITY_CACHE: dict = {}


def is_regular(config: PointConfig, s: Subdivision) -> RegularityResult:
    key = (config, s.parent, s.cells)
    hit = _REGULARITY_CACHE.get(key)
    if hit is not None:
        return hit
    _check_tiling(config, s)
    equalities, stricts, nvars, var_of = folding_system(config, s)
    res: LPResult = lp_strict_feasible(equalities, stricts, nvars)
    if not res.feasible:
        out = RegularityResult(False)
    else:
        cert = tuple(sorted(((l, res.witness[i]) for l, i in var_of.items()),
                            key=lambda kv: config.label_key(kv[0])))
        out = RegularityResult(True, cert)
    _REGULARITY_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# piecewise-affine dimension and coarseness


def pw_affine_dim(config: PointConfig, s: Subdivision) -> tuple[int, int]:
    """(dim, reduced) where dim counts lift tuples on the parent marking that
    extend to a function affine on every cell; points marked in no cell are
    free.  reduced = dim - (d+1), the dimension of the normal cone of the
    matching face of the secondary polytope modulo global affine functions.
    """
    d = config.dimension
    equalities, _, nvars, _ = folding_system(config, s)
    rows = [eq for eq, _ in equalities]
    ker = kernel_basis(rows) if rows else []
    dim = len(ker) if rows else nvars
    return dim, dim - (d + 1)


def is_coarse(config: PointConfig, s: Subdivision) -> bool:
    if not s.is_proper:
        raise ValueError("coarseness is asked of proper subdivisions only")
    if not is_regular(config, s).regular:
        return False
    return pw_affine_dim(config, s)[1] == 1


# ---------------------------------------------------------------------------
# refinement order


_VOLUME_CACHE: dict = {}


def _cell_volume(config: PointConfig, cell: Sequence[str]) -> Fraction:
    key = (config, config.sort_labels(cell))
    v = _VOLUME_CACHE.get(key)
    if v is None:
        v = hull_volume(config, convex_hull(config, cell))
        _VOLUME_CACHE[key] = v
    return v


def refines(config: PointConfig, fine: Subdivision, coarse: Subdivision) -> bool:
    """fine <= coarse: every fine cell sits inside a coarse cell with a
    smaller marking, and the induced cells tile each coarse cell.

    Hosts are found by label containment alone: a cell's marked points all
    lie in its hull, so label containment certifies geometric containment,
    while a geometric host that misses part of the marking would fail the
    relation anyway; full-dimensional cells fit in at most one host.
    """
    if fine.parent != coarse.parent:
        raise ValueError("refinement compares subdivisions of one parent")
    csets = [frozenset(c) for c in coarse.cells]
    assignment: list[list[int]] = [[] for _ in coarse.cells]
    for k, cell in enumerate(fine.cells):
        cs = set(cell)
        host = next((i for i, s in enumerate(csets) if cs <= s), None)
        if host is None:
            return False
        assignment[host].append(k)
    for i, ks in enumerate(assignment):
        vol = sum(_cell_volume(config, fine.cells[k]) for k in ks)
        if vol != _cell_volume(config, coarse.cells[i]):
            return False
    return True


def induced_subdivision(config: PointConfig, fine: Subdivision,
                        coarse_cell: Sequence[str]) -> Subdivision:
    """Restriction of a refining subdivision to one coarse cell."""
    h = convex_hull(config, coarse_cell)
    cells = [c for c in fine.cells
             if all(point_in_hull(config, h, l) for l in c)]
    return make_subdivision(config, coarse_cell, cells)


# ---------------------------------------------------------------------------
# triangulation enumeration


def _random_triangulation(config: PointConfig, parent: tuple[str, ...],
                          rng: random.Random) -> Subdivision:
    d = config.dimension
    span = 8 * (len(parent) ** 2) * (1 + int(config.coordinate_bound())) ** d
    while True:
        psi = {l: Q(rng.randint(0, span)) for l in parent}
        sub = lower_hull_subdivision(config, parent, psi)
        if sub.is_triangulation(d):
            return sub


def flips_of(config: PointConfig, tri: Subdivision) -> list[Subdivision]:
    """All circuit-supported flips applicable to a triangulation."""
    sub_config = restrict_config(config, tri.parent)
    cells = set(tri.cells)
    out = []
    for z in enumerate_circuits(sub_config):
        support = z.support
        plus = [config.sort_labels(set(support) - {l}) for l in z.negative]
        minus = [config.sort_labels(set(support) - {l}) for l in z.positive]
        for side_in, side_out in ((plus, minus), (minus, plus)):
            if all(c in cells for c in side_in):
                new_cells = (cells - set(side_in)) | set(side_out)
                out.append(make_subdivision(config, tri.parent, new_cells))
    return out


def enumerate_regular_triangulations(config: PointConfig, parent: Iterable[str],
                                     seed: int = 0) -> list[Subdivision]:
    """Breadth-first flip search from a generic lower-hull triangulation,
    keeping regular nodes only."""
    par = config.sort_labels(parent)
    require_general_position(restrict_config(config, par))
    rng = random.Random(seed)
    start = _random_triangulation(config, par, rng)
    seen = {start.cells: start}
    frontier = [start]
    while frontier:
        new_frontier = []
        for tri in frontier:
            for nxt in flips_of(config, tri):
                if nxt.cells in seen:
                    continue
                reg = is_regular(config, nxt)
                if not reg.regular:
                    continue
                withcert = Subdivision(nxt.parent, nxt.cells, reg.certificate)
                seen[nxt.cells] = withcert
                new_frontier.append(withcert)
        frontier = new_frontier
    return [seen[k] for k in sorted(seen,
            key=lambda cs: tuple(tuple(config.label_key(l) for l in c) for c in cs))]


# ---------------------------------------------------------------------------
# brute-force tiling oracle


_OVERLAP_CACHE: dict = {}
_BBOX_CACHE: dict = {}


def _bbox(config: PointConfig, cell: tuple[str, ...]):
    key = (config, cell)
    hit = _BBOX_CACHE.get(key)
    if hit is None:
        pts = [config.coord(l) for l in cell]
        hit = tuple((min(p[j] for p in pts), max(p[j] for p in pts))
                    for j in range(config.dimension))
        _BBOX_CACHE[key] = hit
    return hit


def _interiors_overlap(config: PointConfig, cell_a: Sequence[str],
                       cell_b: Sequence[str]) -> bool:
    """Exact test: do the open hulls intersect?  LP on a common interior
    point, written with the facet inequalities of both cells."""
    a, b = tuple(cell_a), tuple(cell_b)
    key = (config, a, b) if a <= b else (config, b, a)
    hit = _OVERLAP_CACHE.get(key)
    if hit is not None:
        return hit
    d = config.dimension
    if any(lo_a >= hi_b or lo_b >= hi_a
           for (lo_a, hi_a), (lo_b, hi_b) in zip(_bbox(config, a),
                                                 _bbox(config, b))):
        _OVERLAP_CACHE[key] = False
        return False
    stricts = []
    for cell in (a, b):
        for normal, c0, sgn in _facet_halfspaces(config, cell):
            stricts.append(([sgn * n for n in normal], sgn * c0))
    ans = lp_strict_feasible([], stricts, d).feasible
    _OVERLAP_CACHE[key] = ans
    return ans


def _cross_normal(frame: list[list[Fraction]], d: int) -> list[Fraction]:
    """Vector n with n.x = det[frame rows, x] for x in R^d (generalized
    cross product via cofactor expansion along the last row)."""
    from .linalg import det as _det
    normal = []
    for j in range(d):
        minor = [[row[k] for k in range(d) if k != j] for row in frame]
        normal.append(Q(-1) ** (d + 1 + j) * _det(minor))
    return normal


_HALFSPACE_CACHE: dict = {}
_TILINGS_CACHE: dict = {}


def _facet_halfspaces(config: PointConfig, cell: tuple[str, ...]):
    """[(normal, offset, sign)]: x is strictly inside iff
    sign * (normal.x - offset) > 0 for every facet."""
    key = (config, cell)
    hit = _HALFSPACE_CACHE.get(key)
    if hit is not None:
        return hit
    d = config.dimension
    out = []
    for f, sgn in convex_hull(config, cell).facets:
        pts = [config.coord(l) for l in f]
        base = pts[0]
        frame = [[p[j] - base[j] for j in range(d)] for p in pts[1:]]
        normal = _cross_normal(frame, d)
        c0 = sum(n * b for n, b in zip(normal, base))
        out.append((tuple(normal), c0, sgn))
    _HALFSPACE_CACHE[key] = out
    return out


def _strict_side(config: PointConfig, cell: tuple[str, ...],
                 q: Sequence[Fraction]):
    """True if q is strictly inside the cell, False if strictly outside,
    None if q lies on some facet hyperplane."""
    inside = True
    for normal, c0, sgn in _facet_halfspaces(config, cell):
        v = sum(n * x for n, x in zip(normal, q)) - c0
        if v == 0:
            return None
        if sgn * (1 if v > 0 else -1) < 0:
            inside = False
    return inside


def enumerate_tilings(config: PointConfig, parent: Iterable[str],
                      candidates: Sequence[tuple[str, ...]],
                      proper_only: bool = False) -> list[tuple[tuple[str, ...], ...]]:
    """All subsets of candidate cells tiling the parent polytope exactly.

    General position makes interior-disjointness + exact volume coverage
    equivalent to being a face-to-face tiling.  The search branches on which
    cell covers a generic interior point of the first still-available
    candidate, so each tiling is visited exactly once.
    """
    par = config.sort_labels(parent)
    order = sorted(set(candidates),
                   key=lambda c: tuple(config.label_key(l) for l in c))
    cache_key = (config, par, tuple(order))
    hit = _TILINGS_CACHE.get(cache_key)
    if hit is not None:
        tilings = hit
        if proper_only:
            tilings = [t for t in tilings if t != (par,)]
        return tilings
    target = hull_volume(config, convex_hull(config, par))
    vols = {c: hull_volume(config, convex_hull(config, c)) for c in order}
    rng = random.Random(987654321)

    def overlaps(a, b) -> bool:
        return _interiors_overlap(config, a, b)

    halfspaces = {c: _facet_halfspaces(config, c) for c in order}
    probe_memo: dict[tuple[str, ...], frozenset] = {}

    def probe_inside(probe) -> frozenset:
        # generic interior point of the probe cell (a strict convex
        # combination avoiding every candidate's facet hyperplanes), reduced
        # to the set of candidates strictly containing it; memoized since the
        # search revisits the same probe across branches
        hit = probe_memo.get(probe)
        if hit is not None:
            return hit
        pts = [config.coord(l) for l in probe]
        d = config.dimension
        for _ in range(500):
            w = [rng.randint(1, 997) for _ in pts]
            tot = sum(w)
            num = [sum(wi * p[j] for wi, p in zip(w, pts)) for j in range(d)]
            inside = set()
            ok = True
            for c in order:
                side = True
                for normal, c0, sgn in halfspaces[c]:
                    v = sum(n * x for n, x in zip(normal, num)) - c0 * tot
                    if v == 0:
                        ok = False
                        break
                    if sgn * (1 if v > 0 else -1) < 0:
                        side = False
                if not ok:
                    break
                if side:
                    inside.add(c)
            if ok:
                res = frozenset(inside)
                probe_memo[probe] = res
                return res
        raise RuntimeError("failed to find a generic interior point")

    results = []

    def extend(chosen, covered, allowed):
        if covered == target:
            results.append(tuple(sorted(chosen,
                           key=lambda c: tuple(config.label_key(l) for l in c))))
            return
        if not allowed:
            return
        inside = probe_inside(allowed[0])
        # every completion covers the probe point with exactly one cell
        for c in allowed:
            if covered + vols[c] > target:
                continue
            if c in inside:
                extend(chosen + (c,), covered + vols[c],
                       [x for x in allowed if x != c and not overlaps(x, c)])

    extend((), Q(0), order)
    tilings = sorted(set(results))
    _TILINGS_CACHE[cache_key] = tilings
    if proper_only:
        tilings = [t for t in tilings if t != (par,)]
    return tilings


def brute_force_triangulations(config: PointConfig, parent: Iterable[str],
                               regular_only: bool = True) -> list[Subdivision]:
    """Oracle: every maximal-simplex tiling, optionally filtered by the LP
    regularity certificate.  Exponential; meant for small markings."""
    par = config.sort_labels(parent)
    d = config.dimension
    candidates = [config.sort_labels(c)
                  for c in itertools.combinations(par, d + 1)]
    subs = [make_subdivision(config, par, t)
            for t in enumerate_tilings(config, par, candidates)]
    if regular_only:
        subs = [s for s in subs if is_regular(config, s).regular]
    return sorted(subs, key=lambda s: s.cells)


# ---------------------------------------------------------------------------
# coarse subdivisions


def coarse_subdivisions_of(config: PointConfig, parent: Iterable[str],
                           oracle: bool = False) -> list[Subdivision]:
    """Every coarse subdivision of the marked polytope.

    Two disjoint families: drop one non-vertex point from the marking
    (one-cell subdivisions), and proper tilings by at least two fully marked
    cells whose stitched piecewise-affine space has reduced dimension one,
    kept only when regular.  The oracle flag reruns the second family through
    a full filter of all fully-marked tilings (no dimension shortcut).
    """
    par = config.sort_labels(parent)
    d = config.dimension
    sub_config = restrict_config(config, par)
    require_general_position(sub_config)
    hull = convex_hull(config, par)
    out = []

    for omega in par:
        if omega in hull.vertices:
            continue
        out.append(make_subdivision(config, par,
                                    [tuple(l for l in par if l != omega)]))

    full_cells = []
    for size in range(d + 1, len(par) + 1):
        for sub in itertools.combinations(par, size):
            if is_geometric(sub_config, sub):
                full_cells.append(config.sort_labels(sub))
    for t in enumerate_tilings(config, par, full_cells, proper_only=True):
        if len(t) < 2:
            continue
        s = make_subdivision(config, par, t)
        if oracle:
            if is_coarse(config, s):
                out.append(s)
        else:
            if pw_affine_dim(config, s)[1] == 1 and is_regular(config, s).regular:
                out.append(s)
    return sorted(out, key=lambda s: s.cells)
