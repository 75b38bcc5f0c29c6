"""Coefficient systems on oriented walls and their tensor calculus.

A system attaches a graded rational vector space to every oriented
(d-1)-simplex on configuration points, with the reversed orientation
carrying the dual space.  Polytopes get boundary tensor blocks, regular
subdivisions get products of cell blocks, and coarsening a subdivision
contracts the disappearing internal walls by dual-basis traces with Koszul
signs.  These trace matrices are the coefficient layer of the structure
tables: they compose transitively along refinement chains, and disjoint
contractions commute.

Orientation bookkeeping: a wall is stored as (labels, token) with labels in
configuration order and token +1 for the even permutation class of that
order, -1 for the odd one.  A cell induces the token given by the orient()
sign of the wall against the cell's interior, so the two cells sharing an
internal wall induce opposite tokens.  For d = 2 this is the usual rule
that boundary edges of a counterclockwise polygon keep the interior on
their left.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Iterable, Mapping, Sequence

from .geometry import (
    INFINITY_LABEL,
    MarkedPolytope,
    PointConfig,
    convex_hull,
)
from .linalg import MatrixQ, rank
from .subdivision import Subdivision, make_subdivision, refines

Q = Fraction

OrientedWall = tuple[tuple[str, ...], int]


def oriented_edge(config: PointConfig, tail: str, head: str) -> OrientedWall:
    """The oriented wall of a directed edge (d = 2 convenience)."""
    labels = config.sort_labels((tail, head))
    return (labels, 1 if labels == (tail, head) else -1)


def reverse_wall(wall: OrientedWall) -> OrientedWall:
    return (wall[0], -wall[1])


@dataclass(frozen=True)
class GradedSpace:
    """Ordered basis with one integer degree per basis vector."""

    degrees: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.degrees)

    def dual(self) -> "GradedSpace":
        return GradedSpace(tuple(-g for g in self.degrees))


TRIVIAL_SPACE = GradedSpace((0,))


@dataclass(frozen=True)
class CoefficientSystem:
    """Spaces per oriented wall; unspecified walls default to 𝐤 in degree 0.

    Only one orientation of a wall may be listed; the reverse carries the
    dual space with the transposed pairing, so applying the identification
    twice is the identity by construction.  Pairings default to dual bases
    and must be degree-preserving and invertible.
    """

    spaces: tuple[tuple[OrientedWall, GradedSpace], ...] = ()
    pairings: tuple[tuple[OrientedWall, tuple[tuple[Fraction, ...], ...]], ...] = ()

    def __post_init__(self):
        seen = {}
        for wall, space in self.spaces:
            if wall in seen or reverse_wall(wall) in seen:
                raise ValueError(f"wall {wall} listed twice (or with both "
                                 "orientations); the reverse is derived")
            seen[wall] = space
        for wall, rows in self.pairings:
            space = seen.get(wall)
            if space is None:
                raise ValueError(f"pairing for {wall} without a listed space")
            n = space.dim
            if len(rows) != n or any(len(r) != n for r in rows):
                raise ValueError(f"pairing for {wall} must be {n}x{n}")
            for i in range(n):
                for j in range(n):
                    if rows[i][j] and space.degrees[i] != space.degrees[j]:
                        raise ValueError(f"pairing for {wall} is not "
                                         "degree-preserving")
            if rank([[Q(v) for v in r] for r in rows]) != n:
                raise ValueError(f"pairing for {wall} is degenerate")
        object.__setattr__(self, "_space_map", seen)
        object.__setattr__(self, "_pairing_map",
                           {w: rows for w, rows in self.pairings})

    @property
    def is_trivial(self) -> bool:
        return not self.spaces

    def space(self, wall: OrientedWall) -> GradedSpace:
        m = self._space_map
        if wall in m:
            return m[wall]
        rev = reverse_wall(wall)
        if rev in m:
            return m[rev].dual()
        return TRIVIAL_SPACE

    def pairing_rows(self, wall: OrientedWall):
        """Rows P with P[i][j] = <e_i of N_wall, e_j of N_reversed>."""
        m = self._pairing_map
        if wall in m:
            return m[wall]
        rev = reverse_wall(wall)
        if rev in m:
            rows = m[rev]
            n = len(rows)
            return tuple(tuple(rows[j][i] for j in range(n)) for i in range(n))
        n = self.space(wall).dim
        return tuple(tuple(Q(1) if i == j else Q(0) for j in range(n))
                     for i in range(n))

    def entry_coefficient(self, config: PointConfig, marking: tuple[str, ...],
                          coarse: Subdivision, sign) -> MatrixQ:
        """Coefficient matrix of a structure-table entry: the incidence sign
        times the generalization map onto the undivided marking."""
        trivial = make_subdivision(config, marking, [marking])
        return generalization_map(config, coarse, trivial, self).scale(Q(sign))


def trivial_system() -> CoefficientSystem:
    return CoefficientSystem()


def coefficient_system(config: PointConfig, edges: Iterable[Mapping]) -> CoefficientSystem:
    """Build a system from edge records
    {"from", "to", "graded_dims": {degree: dim}, "pairing": optional rows}."""
    spaces, pairings = [], []
    for rec in edges:
        wall = oriented_edge(config, rec["from"], rec["to"])
        degrees = []
        for deg in sorted(rec["graded_dims"], key=int):
            degrees.extend([int(deg)] * int(rec["graded_dims"][deg]))
        spaces.append((wall, GradedSpace(tuple(degrees))))
        if rec.get("pairing") is not None:
            pairings.append((wall, tuple(
                tuple(_parse_q(v) for v in row) for row in rec["pairing"])))
    return CoefficientSystem(tuple(spaces), tuple(pairings))


def _parse_q(v) -> Fraction:
    if isinstance(v, str):
        return Q(v)
    return Q(v)


def system_to_json(cs: CoefficientSystem) -> str:
    edges = []
    for (labels, token), space in cs.spaces:
        tail, head = labels if token > 0 else (labels[1], labels[0])
        dims: dict[str, int] = {}
        for g in space.degrees:
            dims[str(g)] = dims.get(str(g), 0) + 1
        rec = {"from": tail, "to": head, "graded_dims": dims}
        pm = cs._pairing_map.get((labels, token))
        if pm is not None:
            rec["pairing"] = [[str(v) for v in row] for row in pm]
        edges.append(rec)
    return json.dumps({"edges": edges}, indent=2)


def system_from_json(config: PointConfig, text: str) -> CoefficientSystem:
    return coefficient_system(config, json.loads(text)["edges"])


# ---------------------------------------------------------------------------
# tensor blocks


@dataclass(frozen=True)
class TensorBlock:
    """Ordered tensor product of wall spaces with the product basis.

    Basis elements are tuples of per-factor indices, flattened row-major
    (last factor fastest); their degree is the sum of factor degrees.
    """

    owner: tuple
    walls: tuple[OrientedWall, ...]
    factor_dims: tuple[int, ...]
    factor_degrees: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return prod(self.factor_dims)

    def flatten(self, combo: Sequence[int]) -> int:
        idx = 0
        for k, d in zip(combo, self.factor_dims):
            idx = idx * d + k
        return idx

    def unflatten(self, idx: int) -> tuple[int, ...]:
        combo = []
        for d in reversed(self.factor_dims):
            combo.append(idx % d)
            idx //= d
        return tuple(reversed(combo))

    def degree_of(self, idx: int) -> int:
        return sum(degs[k] for degs, k in
                   zip(self.factor_degrees, self.unflatten(idx)))

    def element_degrees(self) -> tuple[int, ...]:
        return tuple(sum(p) for p in itertools.product(*self.factor_degrees)) \
            if self.factor_degrees else (0,)

    def graded_dimension(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for g in self.element_degrees():
            out[g] = out.get(g, 0) + 1
        return out


def _block(cs: CoefficientSystem, owner: tuple,
           walls: tuple[OrientedWall, ...]) -> TensorBlock:
    spaces = [cs.space(w) for w in walls]
    return TensorBlock(owner, walls,
                       tuple(s.dim for s in spaces),
                       tuple(s.degrees for s in spaces))


def cell_walls(config: PointConfig, cell: Iterable[str]) -> tuple[OrientedWall, ...]:
    """Boundary walls of a cell with induced orientations, canonically
    ordered: counterclockwise from the least vertex for d = 2 (rotated to
    start after infinity for unbounded cells, whose infinite walls are
    dropped), sorted facet order otherwise."""
    h = convex_hull(config, cell)
    if config.dimension == 2:
        cyc = h.boundary
        if INFINITY_LABEL in cyc:
            k = cyc.index(INFINITY_LABEL)
            cyc = cyc[k:] + cyc[:k]
        out = []
        for u, v in zip(cyc, cyc[1:] + cyc[:1]):
            if INFINITY_LABEL in (u, v):
                continue
            out.append(oriented_edge(config, u, v))
        return tuple(out)
    return tuple((f, s) for f, s in h.facets if INFINITY_LABEL not in f)


_BLOCK_CACHE: dict = {}


def boundary_tensor(config: PointConfig, mp, cs: CoefficientSystem) -> TensorBlock:
    """Tensor product over the boundary walls of a finite marked polytope."""
    marking = mp.marking if isinstance(mp, MarkedPolytope) else \
        config.sort_labels(mp)
    if INFINITY_LABEL in marking:
        raise ValueError("infinite polytopes take linear tensor products")
    key = (cs, config, "polytope", marking)
    hit = _BLOCK_CACHE.get(key)
    if hit is None:
        hit = _block(cs, ("polytope", marking), cell_walls(config, marking))
        _BLOCK_CACHE[key] = hit
    return hit


def subdivision_block(config: PointConfig, s: Subdivision,
                      cs: CoefficientSystem) -> TensorBlock:
    """Tensor of the cell blocks in canonical cell order (the factorization
    property of stalks, taken as the definition here)."""
    key = (cs, config, "subdivision", s.parent, s.cells)
    hit = _BLOCK_CACHE.get(key)
    if hit is not None:
        return hit
    walls: list[OrientedWall] = []
    for c in s.cells:
        walls.extend(cell_walls(config, c))
    if len(set(walls)) != len(walls):
        raise ValueError(f"subdivision {s.cells} repeats an oriented wall")
    hit = _block(cs, ("subdivision", s.parent, s.cells), tuple(walls))
    _BLOCK_CACHE[key] = hit
    return hit


def linear_tensor(config: PointConfig, mp, cs: CoefficientSystem) -> TensorBlock:
    """Ordered tensor over the finite boundary edges of an infinite polygon,
    read off counterclockwise between its two infinite edges."""
    if config.dimension != 2:
        raise ValueError("linear tensor products are a d = 2 construction")
    marking = mp.marking if isinstance(mp, MarkedPolytope) else \
        config.sort_labels(mp)
    if INFINITY_LABEL not in marking:
        raise ValueError("finite polytopes take cyclic boundary tensors")
    key = (cs, config, "path-of", marking)
    hit = _BLOCK_CACHE.get(key)
    if hit is None:
        hit = _block(cs, ("path", cell_walls(config, marking)),
                     cell_walls(config, marking))
        _BLOCK_CACHE[key] = hit
    return hit


def generator_block(config: PointConfig, mp, cs: CoefficientSystem) -> TensorBlock:
    """Value block of a marked polytope: cyclic boundary tensor when finite,
    linear tensor when the marking reaches infinity."""
    marking = mp.marking if isinstance(mp, MarkedPolytope) else \
        config.sort_labels(mp)
    if INFINITY_LABEL in marking:
        return linear_tensor(config, marking, cs)
    return boundary_tensor(config, marking, cs)


def path_block(cs: CoefficientSystem, walls: Iterable[OrientedWall]) -> TensorBlock:
    walls = tuple(walls)
    return _block(cs, ("path", walls), walls)


# ---------------------------------------------------------------------------
# trace contraction


def _trace_matrix(cs: CoefficientSystem, src: TensorBlock,
                  pairs: Sequence[tuple[int, int]],
                  place: Mapping[int, int], dst: TensorBlock) -> MatrixQ:
    """Contract the paired factor positions of src by wall pairings and
    reorder the survivors onto dst slots, with Koszul signs throughout.

    Each pair (p, q), p < q, has src.walls[q] the reversal of src.walls[p];
    the second factor is moved left across the still-alive factors between
    them (sign per odd-odd crossing) and evaluated against the first.
    Survivor reordering pays one sign per odd-odd inversion.
    """
    degs = src.factor_degrees
    dims = src.factor_dims
    pair_rows = {(p, q): cs.pairing_rows(src.walls[p]) for p, q in pairs}
    n = len(src.walls)
    entries: dict[tuple[int, int], Fraction] = {}
    for combo in itertools.product(*[range(d) for d in dims]):
        scalar = Q(1)
        alive = [True] * n
        for p, q in sorted(pairs):
            val = pair_rows[(p, q)][combo[p]][combo[q]]
            if not val:
                scalar = Q(0)
                break
            if degs[q][combo[q]] % 2:
                crossed = sum(degs[m][combo[m]]
                              for m in range(p + 1, q) if alive[m])
                if crossed % 2:
                    val = -val
            scalar *= val
            alive[p] = alive[q] = False
        if not scalar:
            continue
        survivors = [m for m in range(n) if alive[m]]
        sign = 1
        for a, b in itertools.combinations(survivors, 2):
            if place[a] > place[b] and degs[a][combo[a]] % 2 \
                    and degs[b][combo[b]] % 2:
                sign = -sign
        target = [0] * len(survivors)
        for m in survivors:
            target[place[m]] = combo[m]
        entries[(dst.flatten(target), src.flatten(combo))] = scalar * sign
    return MatrixQ(dst.dim, src.dim, entries)


_GMAP_CACHE: dict = {}


def generalization_map(config: PointConfig, fine: Subdivision,
                       coarse: Subdivision, cs: CoefficientSystem) -> MatrixQ:
    """Trace-contraction over the internal walls of fine absent from coarse,
    as a matrix from the fine block to the coarse block.  Transitive along
    chains of refinements."""
    key = (cs, config, fine.parent, fine.cells, coarse.parent, coarse.cells)
    hit = _GMAP_CACHE.get(key)
    if hit is not None:
        return hit
    if fine.parent != coarse.parent or not refines(config, fine, coarse):
        raise ValueError(f"{fine.cells} does not refine {coarse.cells}")
    src = subdivision_block(config, fine, cs)
    dst = subdivision_block(config, coarse, cs)
    dst_pos = {w: i for i, w in enumerate(dst.walls)}
    place, leftovers = {}, {}
    for i, w in enumerate(src.walls):
        if w in dst_pos:
            place[i] = dst_pos[w]
        else:
            leftovers.setdefault(w[0], []).append(i)
    pairs = []
    for labels, positions in leftovers.items():
        if len(positions) != 2 or \
                src.walls[positions[0]] != reverse_wall(src.walls[positions[1]]):
            raise ValueError(f"wall {labels} cannot be traced out")
        pairs.append(tuple(positions))
    if len(place) != len(dst.walls):
        raise ValueError("coarse walls missing from the fine subdivision")
    hit = _trace_matrix(cs, src, pairs, place, dst)
    _GMAP_CACHE[key] = hit
    return hit


def trace_pair(cs: CoefficientSystem, block: TensorBlock,
               shared: Iterable[str]) -> tuple[MatrixQ, TensorBlock]:
    """Contract the one wall class {shared} out of a path block."""
    labels = frozenset(shared)
    positions = [i for i, w in enumerate(block.walls)
                 if frozenset(w[0]) == labels]
    if len(positions) != 2 or \
            block.walls[positions[0]] != reverse_wall(block.walls[positions[1]]):
        raise ValueError(f"wall {sorted(labels)} must occur exactly twice, "
                         "with opposite orientations")
    survivors = [i for i in range(len(block.walls)) if i not in positions]
    dst = path_block(cs, tuple(block.walls[i] for i in survivors))
    place = {pos: slot for slot, pos in enumerate(survivors)}
    return _trace_matrix(cs, block, [tuple(positions)], place, dst), dst


def concatenate(cs: CoefficientSystem, path1: TensorBlock, path2: TensorBlock,
                shared: Iterable[str]) -> MatrixQ:
    """Glue two path blocks along a shared edge carried with opposite
    orientations, pairing it out; the matrix maps the concatenated block to
    the glued path."""
    labels = frozenset(shared)
    in1 = [w for w in path1.walls if frozenset(w[0]) == labels]
    in2 = [w for w in path2.walls if frozenset(w[0]) == labels]
    if len(in1) != 1 or len(in2) != 1 or in1[0] != reverse_wall(in2[0]):
        raise ValueError("paths must share the edge once each, with "
                         "opposite orientations")
    joint = path_block(cs, path1.walls + path2.walls)
    matrix, _ = trace_pair(cs, joint, labels)
    return matrix


def glued_path(cs: CoefficientSystem, path1: TensorBlock, path2: TensorBlock,
               shared: Iterable[str]) -> TensorBlock:
    joint = path_block(cs, path1.walls + path2.walls)
    return trace_pair(cs, joint, frozenset(shared))[1]


# ---------------------------------------------------------------------------
# random systems (for verification sweeps)


def random_system(config: PointConfig, rng, decorated_walls: int = 3,
                  max_dim: int = 2, degree_window: tuple[int, int] = (-2, 2),
                  even_only: bool = False) -> CoefficientSystem:
    """A random nontrivial system: a few walls carry spaces of dimension up
    to max_dim with degrees from the window, one of them a random diagonal
    pairing; every other wall stays trivial.  Keeping the decorated set
    small keeps tensor blocks desk-sized."""
    d = config.dimension
    finite = [l for l in config.labels if l != INFINITY_LABEL]
    candidates = [config.sort_labels(w)
                  for w in itertools.combinations(finite, d)]
    rng.shuffle(candidates)
    chosen = candidates[:decorated_walls]

    def draw_degree():
        g = rng.randint(degree_window[0], degree_window[1])
        if even_only and g % 2:
            g += 1 if g < degree_window[1] else -1
        return g

    spaces, pairings = [], []
    for i, labels in enumerate(chosen):
        wall = (labels, rng.choice((1, -1)))
        dim = rng.randint(1, max_dim)
        degrees = tuple(sorted(draw_degree() for _ in range(dim)))
        spaces.append((wall, GradedSpace(degrees)))
        if i == 0:
            diag = [rng.choice((Q(1), Q(-1), Q(2), Q(1, 2), Q(-3)))
                    for _ in range(dim)]
            pairings.append((wall, tuple(
                tuple(diag[r] if r == c else Q(0) for c in range(dim))
                for r in range(dim))))
    return CoefficientSystem(tuple(spaces), tuple(pairings))
