"""Point configurations with exact orientation predicates, one optional
symbolic point at infinity, convex hulls, circuits, and marked subpolytopes.

The point at infinity is stored only as a direction vector; predicates treat
it as the limit of M*u with M -> +infinity.  A concrete big-M instantiation
exists for LP consumption and is certified against the symbolic answers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from .linalg import det, kernel_basis

Q = Fraction

INFINITY_LABEL = "infinity"


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


# ---------------------------------------------------------------------------
# configurations


@dataclass(frozen=True)
class PointConfig:
    """Ordered labelled rational points in R^d, optionally extended by a
    symbolic point at infinity in a fixed direction."""

    dimension: int
    labels: tuple[str, ...]
    coords: tuple[tuple[Fraction, ...], ...]
    infinity_direction: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        d = self.dimension
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if len(self.labels) != len(self.coords):
            raise ValueError("labels and coords must be parallel")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")
        # the reserved label may appear as an ordinary point only in
        # concretized (big-M) configurations, which carry no direction
        if INFINITY_LABEL in self.labels and self.infinity_direction is not None:
            raise ValueError(f"label {INFINITY_LABEL!r} is reserved")
        for p in self.coords:
            if len(p) != d:
                raise ValueError("coordinate length != dimension")
        if self.infinity_direction is not None:
            u = self.infinity_direction
            if len(u) != d or not any(u):
                raise ValueError("infinity direction must be a nonzero d-vector")

    @classmethod
    def build(cls, dimension: int,
              points: Sequence[tuple[str, Sequence]],
              infinity: Sequence | None = None) -> "PointConfig":
        labels = tuple(lab for lab, _ in points)
        coords = tuple(tuple(Q(x) for x in p) for _, p in points)
        inf = tuple(Q(x) for x in infinity) if infinity is not None else None
        return cls(dimension, labels, coords, inf)

    def __hash__(self):
        # configs key every module-level cache; dataclass hashing would walk
        # all Fraction coordinates on each lookup, so memoize it
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.dimension, self.labels, self.coords,
                      self.infinity_direction))
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def has_infinity(self) -> bool:
        return self.infinity_direction is not None

    def all_labels(self) -> tuple[str, ...]:
        return self.labels + ((INFINITY_LABEL,) if self.has_infinity else ())

    def coord(self, label: str) -> tuple[Fraction, ...]:
        if label == INFINITY_LABEL and label not in self.labels:
            raise KeyError("the point at infinity has no finite coordinates")
        try:
            return self.coords[self.labels.index(label)]
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None

    def label_key(self, label: str):
        """Canonical order: configuration order, infinity last."""
        if label == INFINITY_LABEL and label not in self.labels:
            if not self.has_infinity:
                raise KeyError("configuration has no point at infinity")
            return len(self.labels)
        return self.labels.index(label)

    def sort_labels(self, labels: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted(labels, key=self.label_key))

    def concretize(self, big_m: Fraction) -> "PointConfig":
        """Replace infinity by the concrete far point big_m * u (anchored at
        the origin).  The stand-in keeps the reserved label so downstream
        code keyed by labels is untouched.

        Used only for LP-level computations whose combinatorial output is
        then certified stable under doubling big_m.
        """
        if not self.has_infinity:
            raise ValueError("nothing to concretize")
        far = tuple(Q(big_m) * x for x in self.infinity_direction)
        return PointConfig(self.dimension, self.labels + (INFINITY_LABEL,),
                           self.coords + (far,), None)

    def coordinate_bound(self) -> Fraction:
        """Max absolute coordinate; seed for big-M choices."""
        m = Q(0)
        for p in self.coords:
            for x in p:
                if abs(x) > m:
                    m = abs(x)
        return m


# ---------------------------------------------------------------------------
# orientation


def affine_orient_coords(pts: Sequence[Sequence[Fraction]]) -> int:
    """Sign of det[p2-p1, ..., p_{d+1}-p1] for d+1 finite points in R^d."""
    d = len(pts) - 1
    if any(len(p) != d for p in pts):
        raise ValueError("need d+1 points in R^d")
    rows = [[Q(pts[i + 1][j]) - Q(pts[0][j]) for j in range(d)] for i in range(d)]
    return _sign(det(rows))


_ORIENT_CACHE: dict = {}


def orient(config: PointConfig, labels: Sequence[str]) -> int:
    """Orientation of d+1 labelled points, at most one of them infinity.

    With infinity present the tuple is permuted so infinity sits last
    (tracking the transposition parity) and the infinity row becomes the
    direction vector: this is the sign of the leading M-coefficient of the
    determinant with infinity at M*u.
    """
    key = (config, tuple(labels))
    hit = _ORIENT_CACHE.get(key)
    if hit is not None:
        return hit
    res = _orient_uncached(config, key[1])
    _ORIENT_CACHE[key] = res
    return res


def _orient_uncached(config: PointConfig, labels: tuple[str, ...]) -> int:
    d = config.dimension
    if len(labels) != d + 1:
        raise ValueError(f"orient needs {d + 1} labels")
    inf_count = (0 if INFINITY_LABEL in config.labels
                 else sum(1 for l in labels if l == INFINITY_LABEL))
    if inf_count > 1:
        raise ValueError("at most one argument may be infinity")
    if inf_count == 0:
        return affine_orient_coords([config.coord(l) for l in labels])
    if not config.has_infinity:
        raise ValueError("configuration has no point at infinity")
    idx = list(labels).index(INFINITY_LABEL)
    parity = -1 if (len(labels) - 1 - idx) % 2 else 1
    finite = [config.coord(l) for i, l in enumerate(labels) if i != idx]
    u = config.infinity_direction
    p0 = finite[0]
    rows = [[finite[i + 1][j] - p0[j] for j in range(d)] for i in range(d - 1)]
    rows.append(list(u))
    return parity * _sign(det(rows))


# ---------------------------------------------------------------------------
# general position


@dataclass(frozen=True)
class GeneralPositionReport:
    passed: bool
    violations: tuple[tuple[str, tuple[str, ...]], ...]  # (kind, labels)


def check_general_position(config: PointConfig) -> GeneralPositionReport:
    """Full degeneracy scan: affinely dependent (d+1)-subsets of finite
    points, and d-subsets degenerate together with infinity."""
    d = config.dimension
    bad: list[tuple[str, tuple[str, ...]]] = []
    if len(config.labels) < d + 1:
        bad.append(("too-few-points", config.labels))
    for sub in itertools.combinations(config.labels, d + 1):
        if affine_orient_coords([config.coord(l) for l in sub]) == 0:
            bad.append(("affinely-dependent", sub))
    if config.has_infinity:
        for sub in itertools.combinations(config.labels, d):
            if orient(config, sub + (INFINITY_LABEL,)) == 0:
                bad.append(("infinity-degenerate", sub + (INFINITY_LABEL,)))
    return GeneralPositionReport(not bad, tuple(bad))


def require_general_position(config: PointConfig) -> None:
    rep = check_general_position(config)
    if not rep.passed:
        raise ValueError(f"configuration not in general position: {rep.violations[:3]}")


# ---------------------------------------------------------------------------
# hulls


@dataclass(frozen=True)
class Hull:
    """Convex hull of a labelled subset (possibly including infinity).

    facets: tuple of (vertex-labels sorted canonically, inner_sign) where
    inner_sign is the orient() value of the facet tuple extended by any
    point of the subset off the facet.  boundary: counter-clockwise vertex
    cycle for d = 2 (including infinity when the hull is unbounded),
    otherwise None.
    """

    dimension: int
    subset: tuple[str, ...]
    vertices: tuple[str, ...]
    facets: tuple[tuple[tuple[str, ...], int], ...]
    boundary: tuple[str, ...] | None

    def facet_sets(self) -> list[frozenset]:
        return [frozenset(f) for f, _ in self.facets]

    @property
    def is_unbounded(self) -> bool:
        return INFINITY_LABEL in self.vertices


_HULL_CACHE: dict = {}


def convex_hull(config: PointConfig, labels: Iterable[str]) -> Hull:
    d = config.dimension
    subset = config.sort_labels(labels)
    cached = _HULL_CACHE.get((config, subset))
    if cached is not None:
        return cached
    if len(subset) < d + 1:
        raise ValueError("hull needs at least d+1 points")
    if sum(1 for l in subset if l == INFINITY_LABEL) > 1:
        raise ValueError("at most one infinity member")

    facets = []
    for f in itertools.combinations(subset, d):
        signs = set()
        for x in subset:
            if x in f:
                continue
            signs.add(orient(config, f + (x,)))
        if len(signs) == 1:
            s = signs.pop()
            if s == 0:
                raise ValueError(f"degenerate facet candidate {f}")
            facets.append((f, s))
    if not facets:
        raise ValueError("degenerate subset: no facets found")

    verts = set()
    for f, _ in facets:
        verts.update(f)
    vertices = config.sort_labels(verts)

    boundary = None
    if d == 2:
        step = {}
        for (a, b), s in facets:
            if s > 0:
                step[a] = b
            else:
                step[b] = a
        start = vertices[0]
        cyc = [start]
        cur = step[start]
        while cur != start:
            cyc.append(cur)
            cur = step[cur]
            if len(cyc) > len(vertices):
                raise ValueError("hull boundary walk failed to close")
        if len(cyc) != len(vertices):
            raise ValueError("hull boundary misses vertices")
        boundary = tuple(cyc)

    hull = Hull(d, subset, vertices, tuple(sorted(facets)), boundary)
    _HULL_CACHE[(config, subset)] = hull
    return hull


def point_in_hull(config: PointConfig, hull: Hull, label: str) -> bool:
    """Is the labelled configuration point inside Conv(subset)?  In general
    position a point not in the subset is never on the boundary."""
    if label in hull.subset:
        return True
    if label == INFINITY_LABEL:
        return False  # a bounded-or-not hull of other points never swallows infinity
    for f, s in hull.facets:
        if orient(config, f + (label,)) != s:
            return False
    return True


_GEOMETRIC_CACHE: dict = {}


def is_geometric(config: PointConfig, labels: Iterable[str]) -> bool:
    """Marking equals every configuration point inside its hull?"""
    key = (config, config.sort_labels(labels))
    hit = _GEOMETRIC_CACHE.get(key)
    if hit is not None:
        return hit
    subset = set(key[1])
    hull = convex_hull(config, subset)
    res = True
    for other in config.all_labels():
        if other in subset:
            continue
        if other == INFINITY_LABEL and INFINITY_LABEL not in subset:
            continue
        if point_in_hull(config, hull, other):
            res = False
            break
    _GEOMETRIC_CACHE[key] = res
    return res


# ---------------------------------------------------------------------------
# volumes


def simplex_volume(config: PointConfig, labels: Sequence[str]) -> Fraction:
    """Lebesgue volume |det|/d! of a finite d-simplex."""
    d = config.dimension
    if len(labels) != d + 1 or (INFINITY_LABEL in labels
                                and INFINITY_LABEL not in config.labels):
        raise ValueError("need d+1 finite points")
    pts = [config.coord(l) for l in labels]
    rows = [[pts[i + 1][j] - pts[0][j] for j in range(d)] for i in range(d)]
    v = det(rows)
    fact = 1
    for k in range(2, d + 1):
        fact *= k
    return abs(v) / fact


def hull_volume(config: PointConfig, hull: Hull) -> Fraction:
    """Volume of a bounded hull by signed cones over the origin.

    Independent of any triangulation choice, so it serves as an oracle for
    triangulation-based volume sums.
    """
    if hull.is_unbounded and INFINITY_LABEL not in config.labels:
        raise ValueError("unbounded hulls have no volume")
    d = hull.dimension
    fact = 1
    for k in range(2, d + 1):
        fact *= k
    origin = tuple(Q(0) for _ in range(d))
    total = Q(0)
    for f, s in hull.facets:
        pts = [config.coord(l) for l in f]
        rows = [[p[j] - origin[j] for j in range(d)] for p in pts]
        dv = det(rows)
        if dv == 0:
            continue
        # orient() of f extended by the origin: +s means origin on the inner
        # side, so the cone adds; outer side subtracts
        t = affine_orient_coords(pts + [origin])
        total += (abs(dv) / fact) * (1 if t == s else -1)
    return total


# ---------------------------------------------------------------------------
# circuits


@dataclass(frozen=True)
class Circuit:
    """Minimal affine dependency on d+2 points with its Radon split."""

    support: tuple[str, ...]         # canonical order
    dependency: tuple[int, ...]      # primitive integers, parallel to support
    positive: frozenset
    negative: frozenset

    def coefficient(self, label: str) -> int:
        return self.dependency[self.support.index(label)]


def circuit_of(config: PointConfig, labels: Iterable[str]) -> Circuit:
    d = config.dimension
    support = config.sort_labels(labels)
    if len(support) != d + 2:
        raise ValueError("a circuit has d+2 points")
    cols = []
    for l in support:
        if l == INFINITY_LABEL and l not in config.labels:
            cols.append((Q(0),) + tuple(config.infinity_direction))
        else:
            cols.append((Q(1),) + config.coord(l))
    rows = [[cols[j][i] for j in range(d + 2)] for i in range(d + 1)]
    ker = kernel_basis(rows)
    if len(ker) != 1:
        raise ValueError(f"support {support} is not a circuit (kernel dim {len(ker)})")
    vec = ker[0]
    if any(v == 0 for v in vec):
        raise ValueError(f"degenerate circuit {support}: zero coefficient")
    lcm = 1
    for v in vec:
        lcm = lcm * v.denominator // gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    ints = [v // g for v in ints]
    if ints[0] < 0:
        ints = [-v for v in ints]
    pos = frozenset(l for l, v in zip(support, ints) if v > 0)
    neg = frozenset(l for l, v in zip(support, ints) if v < 0)
    return Circuit(support, tuple(ints), pos, neg)


_CIRCUITS_CACHE: dict = {}


def enumerate_circuits(config: PointConfig, include_infinity: bool = False) -> list[Circuit]:
    key = (config, include_infinity)
    hit = _CIRCUITS_CACHE.get(key)
    if hit is not None:
        return list(hit)
    d = config.dimension
    universe = config.all_labels() if (include_infinity and config.has_infinity) else config.labels
    out = [circuit_of(config, sub)
           for sub in itertools.combinations(universe, d + 2)]
    out.sort(key=lambda c: tuple(config.label_key(l) for l in c.support))
    _CIRCUITS_CACHE[key] = tuple(out)
    return out


# ---------------------------------------------------------------------------
# marked subpolytopes


@dataclass(frozen=True)
class MarkedPolytope:
    """A marking A' (subset of labels, possibly with infinity) together with
    the vertex set of its hull and the geometric flag A' = A cap Conv(A')."""

    marking: frozenset
    vertex_set: frozenset
    geometric: bool

    @property
    def is_unbounded(self) -> bool:
        return INFINITY_LABEL in self.marking


def marked_polytope(config: PointConfig, labels: Iterable[str]) -> MarkedPolytope:
    subset = frozenset(labels)
    hull = convex_hull(config, subset)
    return MarkedPolytope(subset, frozenset(hull.vertices),
                          is_geometric(config, subset))


def enumerate_subpolytopes(config: PointConfig,
                           include_infinity: bool = False,
                           geometric_only: bool = True) -> list[MarkedPolytope]:
    """All full-dimensional marked subpolytopes, canonically sorted.

    In general position every marking of size >= d+1 (with at most the one
    infinity member) is automatically full-dimensional.  geometric_only
    keeps just those whose marking swallows every configuration point of
    their hull.
    """
    d = config.dimension
    require_general_position(config)
    universe = config.all_labels() if (include_infinity and config.has_infinity) \
        else config.labels
    out = []
    for size in range(d + 1, len(universe) + 1):
        for sub in itertools.combinations(universe, size):
            mp = marked_polytope(config, sub)
            if geometric_only and not mp.geometric:
                continue
            out.append(mp)
    out.sort(key=lambda m: (len(m.marking),
                            tuple(config.label_key(l) for l in config.sort_labels(m.marking))))
    return out


def split_families(polys: Iterable[MarkedPolytope]) -> tuple[list[MarkedPolytope], list[MarkedPolytope]]:
    finite = [p for p in polys if not p.is_unbounded]
    infinite = [p for p in polys if p.is_unbounded]
    return finite, infinite


# ---------------------------------------------------------------------------
# slope order (d = 2 with infinity)


def slope_key(config: PointConfig, label: str) -> Fraction:
    """Total order on finite points induced by the infinity direction:
    increasing inner product with u rotated clockwise (u = (0,1) gives the
    left-to-right x order)."""
    if config.dimension != 2 or not config.has_infinity:
        raise ValueError("slope order needs d=2 with infinity")
    u = config.infinity_direction
    z = config.coord(label)
    return z[0] * u[1] - z[1] * u[0]
