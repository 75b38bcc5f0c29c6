"""The secondary polytope of a marked configuration: GKZ vertices, the full
face lattice, the face <-> subdivision dictionary, factorization of faces
into products, and dual webs for plane subdivisions.

The lattice is assembled from vertex-facet incidence: facets are the coarse
subdivisions (enumerated independently), a facet's vertex set is the set of
triangulations refining it, and general faces arise as intersections.  Every
face is bound to its subdivision by summing facet certificates -- an interior
point of the face's normal cone -- and pushing through the lower hull.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .geometry import (
    PointConfig,
    convex_hull,
    is_geometric,
    simplex_volume,
)
from .linalg import rank, solve
from .subdivision import (
    Subdivision,
    _facet_halfspaces,
    coarse_subdivisions_of,
    enumerate_regular_triangulations,
    induced_subdivision,
    is_regular,
    lower_hull_subdivision,
    refines,
    restrict_config,
    walls,
)

Q = Fraction


def gkz_vector(config: PointConfig, t: Subdivision) -> dict[str, Fraction]:
    """Entry at each marked point: total volume of the simplices having it
    as a vertex; zero if the triangulation never uses the point."""
    if not t.is_triangulation(config.dimension):
        raise ValueError("GKZ vectors are defined for triangulations")
    out = {l: Q(0) for l in t.parent}
    for cell in t.cells:
        v = simplex_volume(config, cell)
        for l in cell:
            out[l] += v
    return out


@dataclass(frozen=True)
class Face:
    """One face of the secondary polytope."""

    index: int
    dim: int
    vertex_ids: frozenset          # indices into SecondaryPolytope.triangulations
    subdivision: Subdivision
    geometric: bool
    children: tuple[int, ...]      # covered faces (one dimension down)
    parents: tuple[int, ...]


@dataclass(frozen=True)
class SecondaryPolytope:
    config: PointConfig
    marking: tuple[str, ...]
    dim: int
    triangulations: tuple[Subdivision, ...]
    gkz: tuple[tuple[Fraction, ...], ...]   # per triangulation, marking order
    faces: tuple[Face, ...]                 # sorted by (dim, vertex_ids)

    def top(self) -> Face:
        return self.faces[-1]

    def vertices(self) -> list[Face]:
        return [f for f in self.faces if f.dim == 0]

    def facets(self) -> list[Face]:
        return [f for f in self.faces if f.dim == self.dim - 1]

    def face_of_subdivision(self, s: Subdivision) -> Face:
        """The face whose refining triangulations are exactly those of s."""
        vids = frozenset(i for i, t in enumerate(self.triangulations)
                         if refines(self.config, t, s))
        for f in self.faces:
            if f.vertex_ids == vids:
                return f
        raise KeyError("subdivision does not correspond to a lattice face")

    def f_vector(self) -> list[int]:
        out = [0] * (self.dim + 1)
        for f in self.faces:
            out[f.dim] += 1
        return out


_SECONDARY_CACHE: dict = {}


def build_secondary(config: PointConfig, marking: Iterable[str] | None = None,
                    seed: int = 0) -> SecondaryPolytope:
    par = config.sort_labels(marking if marking is not None else config.labels)
    key = (config, par)
    hit = _SECONDARY_CACHE.get(key)
    if hit is not None:
        return hit

    d = config.dimension
    tris = tuple(enumerate_regular_triangulations(config, par, seed=seed))
    vecs = tuple(tuple(gkz_vector(config, t)[l] for l in par) for t in tris)
    base = vecs[0]
    diffs = [[v - b for v, b in zip(vec, base)] for vec in vecs[1:]]
    dim = rank(diffs) if diffs else 0
    if dim != len(par) - d - 1:
        raise RuntimeError(
            f"secondary polytope dimension {dim} != |A|-d-1 = {len(par) - d - 1}")

    all_ids = frozenset(range(len(tris)))
    coarse = coarse_subdivisions_of(config, par)
    facet_sets = {}
    for s in coarse:
        vids = frozenset(i for i, t in enumerate(tris) if refines(config, t, s))
        facet_sets[vids] = s

    # intersection closure of the facet vertex sets gives every proper face
    closure: set[frozenset] = set(facet_sets)
    frontier = set(facet_sets)
    while frontier:
        new = set()
        for a in frontier:
            for b in facet_sets:
                c = a & b
                if c and c not in closure:
                    new.add(c)
        closure |= new
        frontier = new

    def face_dim(vids: frozenset) -> int:
        ids = sorted(vids)
        b = vecs[ids[0]]
        rows = [[v - x for v, x in zip(vecs[i], b)] for i in ids[1:]]
        return rank(rows) if rows else 0

    def subdivision_of(vids: frozenset) -> Subdivision:
        if vids == all_ids:
            psi = {l: Q(0) for l in par}
            return lower_hull_subdivision(config, par, psi)
        total = {l: Q(0) for l in par}
        for fset, s in facet_sets.items():
            if vids <= fset:
                cert = is_regular(config, s).certificate_dict()
                for l in par:
                    total[l] += cert[l]
        sub = lower_hull_subdivision(config, par, total)
        back = frozenset(i for i, t in enumerate(tris) if refines(config, t, sub))
        if back != vids:
            raise RuntimeError("normal-cone interior point missed its face")
        return sub

    node_sets = sorted(closure | {all_ids},
                       key=lambda v: (face_dim(v), tuple(sorted(v))))
    faces = []
    for idx, vids in enumerate(node_sets):
        sub = subdivision_of(vids)
        geo = all(is_geometric(restrict_config(config, par), c) for c in sub.cells)
        faces.append((idx, face_dim(vids), vids, sub, geo))

    # covers: children are maximal strictly-contained faces
    children: dict[int, list[int]] = {i: [] for i, *_ in faces}
    parents: dict[int, list[int]] = {i: [] for i, *_ in faces}
    for i, di, vi, _, _ in faces:
        for j, dj, vj, _, _ in faces:
            if vj < vi and dj == di - 1:
                children[i].append(j)
                parents[j].append(i)

    out = SecondaryPolytope(
        config, par, dim, tris, vecs,
        tuple(Face(i, di, vi, sub, geo,
                   tuple(sorted(children[i])), tuple(sorted(parents[i])))
              for i, di, vi, sub, geo in faces))
    _SECONDARY_CACHE[key] = out
    return out


def face_to_subdivision(sp: SecondaryPolytope, face: Face) -> Subdivision:
    """The subdivision bound to a lattice face (already computed at build
    time from an interior point of the face's normal cone)."""
    if sp.faces[face.index] is not face and sp.faces[face.index] != face:
        raise ValueError("face does not belong to this lattice")
    return face.subdivision


# ---------------------------------------------------------------------------
# factorization of faces


@dataclass(frozen=True)
class FactorizationReport:
    ok: bool
    factor_dims: tuple[int, ...]
    face_count: int
    product_count: int
    reason: str | None = None


def verify_factorization(sp: SecondaryPolytope, face: Face) -> FactorizationReport:
    """Check constructively that the faces below a given face form the
    product of the factor secondary polytopes of its subdivision's cells.

    The comparison map sends a subface to the tuple of subdivisions induced
    on each cell; it must be a bijection onto the product of the factor
    lattices and order-preserving in both directions.
    """
    config = sp.config
    cells = face.subdivision.cells
    factors = [build_secondary(restrict_config(config, c), c) for c in cells]
    factor_dims = tuple(f.dim for f in factors)

    below = [g for g in sp.faces if g.vertex_ids <= face.vertex_ids]
    product_count = 1
    for f in factors:
        product_count *= len(f.faces)

    if sum(factor_dims) != face.dim:
        # degenerate coordinates: the face is only a projection (a fiber
        # product) of the product of cell secondaries, not the product itself
        return FactorizationReport(False, factor_dims, len(below),
                                   product_count,
                                   "factor dimensions do not sum to the face dimension")

    images: dict = {}
    for g in below:
        if not refines(config, g.subdivision, face.subdivision):
            return FactorizationReport(False, factor_dims, len(below),
                                       product_count, "subface fails to refine")
        img = []
        for cell, factor in zip(cells, factors):
            ind = induced_subdivision(config, g.subdivision, cell)
            try:
                ff = factor.face_of_subdivision(ind)
            except KeyError:
                return FactorizationReport(False, factor_dims, len(below),
                                           product_count,
                                           "induced cell subdivision is not a factor face")
            img.append(ff.index)
        images[g.index] = tuple(img)

    if len(set(images.values())) != len(below) or len(below) != product_count:
        return FactorizationReport(False, factor_dims, len(below),
                                   product_count, "not a bijection")

    # order-preserving both ways, via vertex-set containment per factor
    for g in below:
        for h in below:
            left = g.vertex_ids <= h.vertex_ids
            right = all(
                factors[k].faces[images[g.index][k]].vertex_ids
                <= factors[k].faces[images[h.index][k]].vertex_ids
                for k in range(len(factors)))
            if left != right:
                return FactorizationReport(False, factor_dims, len(below),
                                           product_count, "order mismatch")

    return FactorizationReport(True, factor_dims, len(below), product_count)


# ---------------------------------------------------------------------------
# dual webs (d = 2)


def _rot_ccw(v: Sequence[Fraction]) -> tuple[Fraction, Fraction]:
    return (-v[1], v[0])


@dataclass(frozen=True)
class DualWeb:
    """Plane dual of a regular 2d subdivision: one vertex per cell at the
    90-degree-rotated slope of the certificate's affine piece."""

    positions: tuple[tuple[str, ...], ...]          # cell order
    coords: tuple[tuple[Fraction, Fraction], ...]   # vertex positions
    edges: tuple[tuple[int, int, tuple[str, ...]], ...]   # (cell i, cell j, wall)
    rays: tuple[tuple[int, tuple[str, ...], tuple[Fraction, Fraction]], ...]


def dual_web(config: PointConfig, s: Subdivision) -> DualWeb:
    if config.dimension != 2:
        raise ValueError("dual webs are a planar construction")
    cert = s.certificate_dict()
    if cert is None:
        reg = is_regular(config, s)
        if not reg.regular:
            raise ValueError("dual webs need a regular subdivision")
        cert = reg.certificate_dict()

    # per-cell affine pieces a.x + b of the folded function
    slopes = []
    for cell in s.cells:
        span = _affine_span_labels(config, cell)
        sol = solve([[config.coord(l)[0], config.coord(l)[1], Q(1)] for l in span],
                    [cert[l] for l in span])
        slopes.append((sol[0], sol[1]))
    coords = tuple(_rot_ccw(a) for a in slopes)

    internal, boundary = walls(config, s)
    edges = tuple((i, j, wall) for wall, (i, j) in internal)
    rays = tuple((i, wall, _ray_direction(config, s.cells[i], wall))
                 for wall, i in boundary)
    return DualWeb(tuple(s.cells), coords, edges, rays)


def _affine_span_labels(config: PointConfig, cell: tuple[str, ...]) -> list[str]:
    """Three cell labels in general position (the cell is 2-dimensional)."""
    for trip in itertools.combinations(cell, 3):
        rows = [[config.coord(l)[0], config.coord(l)[1], Q(1)] for l in trip]
        if rank(rows) == 3:
            return list(trip)
    raise ValueError("cell is not full-dimensional")


def _ray_direction(config: PointConfig, cell: tuple[str, ...],
                   wall: tuple[str, ...]) -> tuple[Fraction, Fraction]:
    """Rotated outward normal of the cell at the given wall."""
    hull = convex_hull(config, cell)
    for (f, sgn), (normal, _c0, sg) in zip(hull.facets,
                                           _facet_halfspaces(config, cell)):
        if frozenset(f) == frozenset(wall):
            outward = tuple(-sg * n for n in normal)
            return _rot_ccw(outward)
    raise ValueError("wall is not a facet of the cell")


# ---------------------------------------------------------------------------
# DOT serialization


def face_lattice_dot(sp: SecondaryPolytope) -> str:
    lines = ["digraph secondary_face_lattice {", "  rankdir=BT;"]
    for f in sp.faces:
        cells = " | ".join(",".join(c) for c in f.subdivision.cells)
        shape = "doublecircle" if f.geometric else "ellipse"
        lines.append(f'  f{f.index} [label="dim {f.dim}: {cells}", shape={shape}];')
    for f in sp.faces:
        for c in f.children:
            lines.append(f"  f{c} -> f{f.index};")
    lines.append("}")
    return "\n".join(lines)


def web_dot(web: DualWeb) -> str:
    lines = ["graph dual_web {"]
    for i, (cell, (x, y)) in enumerate(zip(web.positions, web.coords)):
        lines.append(f'  w{i} [label="{",".join(cell)}", pos="{x},{y}!"];')
    for i, j, wall in web.edges:
        lines.append(f'  w{i} -- w{j} [label="{",".join(wall)}"];')
    for k, (i, wall, (dx, dy)) in enumerate(web.rays):
        lines.append(f'  r{k} [shape=point, label=""];')
        lines.append(f'  w{i} -- r{k} [style=dashed, label="ray {dx},{dy}"];')
    lines.append("}")
    return "\n".join(lines)
