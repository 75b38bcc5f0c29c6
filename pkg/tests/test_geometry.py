"""Orientation predicates, hulls, circuits, and marked subpolytopes."""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from secpoly.geometry import (
    INFINITY_LABEL,
    PointConfig,
    affine_orient_coords,
    check_general_position,
    circuit_of,
    convex_hull,
    enumerate_circuits,
    enumerate_subpolytopes,
    hull_volume,
    is_geometric,
    marked_polytope,
    orient,
    point_in_hull,
    simplex_volume,
    slope_key,
    split_families,
)

Q = Fraction
INF = INFINITY_LABEL


# ---------------------------------------------------------------------------
# orientation


def test_orient_standard_simplex():
    assert affine_orient_coords([(0, 0), (1, 0), (0, 1)]) == 1
    assert affine_orient_coords([(0, 0), (0, 1), (1, 0)]) == -1


def test_orient_with_infinity(segment_inf):
    assert orient(segment_inf, ("a", "b", INF)) == 1  # b is right of a, u up
    assert orient(segment_inf, ("b", "a", INF)) == -1
    assert orient(segment_inf, ("a", INF, "b")) == -1  # one transposition


def test_orient_infinity_matches_big_m_limit(segment_inf):
    sym = orient(segment_inf, ("a", "b", INF))
    for m in (Q(100), Q(200)):
        conc = segment_inf.concretize(m)
        assert affine_orient_coords(
            [conc.coord("a"), conc.coord("b"), conc.coord(INF)]) == sym


coords2 = st.tuples(st.integers(-6, 6), st.integers(-6, 6))


@given(coords2, coords2, coords2, st.permutations([0, 1, 2]),
       st.tuples(st.integers(-5, 5), st.integers(-5, 5)))
@settings(max_examples=80, derandomize=True)
def test_orient_alternating_and_translation_invariant(p, q, r, perm, shift):
    pts = [p, q, r]
    base = affine_orient_coords(pts)
    # parity of the permutation
    inv = sum(1 for i in range(3) for j in range(i + 1, 3) if perm[i] > perm[j])
    permuted = affine_orient_coords([pts[i] for i in perm])
    assert permuted == base * (-1) ** inv
    shifted = affine_orient_coords(
        [(x + shift[0], y + shift[1]) for x, y in pts])
    assert shifted == base


# ---------------------------------------------------------------------------
# general position


def test_square_passes(square):
    assert check_general_position(square).passed


def test_collinear_triple_fails():
    cfg = PointConfig.build(2, [("a", (0, 0)), ("b", (1, 1)), ("c", (2, 2))])
    rep = check_general_position(cfg)
    assert not rep.passed
    assert ("affinely-dependent", ("a", "b", "c")) in rep.violations


def test_axis_square_fails_with_vertical_infinity():
    cfg = PointConfig.build(2, [("a", (0, 0)), ("b", (1, 0)),
                                ("c", (1, 1)), ("d", (0, 1))], infinity=(0, 1))
    rep = check_general_position(cfg)
    assert not rep.passed
    kinds = {k for k, _ in rep.violations}
    assert kinds == {"infinity-degenerate"}  # repeated x coordinates only


def test_sheared_square_passes_with_infinity(sheared_square_inf):
    assert check_general_position(sheared_square_inf).passed


# ---------------------------------------------------------------------------
# hulls


def test_square_hull_ccw(square):
    h = convex_hull(square, ["a", "b", "c", "d"])
    assert h.vertices == ("a", "b", "c", "d")
    assert h.boundary[0] == "a"
    # counter-clockwise cycle
    assert h.boundary in (("a", "b", "c", "d"),)


def test_triangle_with_interior_point_hull(tri_interior):
    h = convex_hull(tri_interior, ["a", "b", "c", "o"])
    assert h.vertices == ("a", "b", "c")
    assert point_in_hull(tri_interior, h, "o")


def test_infinite_triangle(segment_inf):
    h = convex_hull(segment_inf, ["a", "b", INF])
    assert h.is_unbounded
    assert set(h.vertices) == {"a", "b", INF}
    unbounded_edges = [f for f, _ in h.facets if INF in f]
    assert len(unbounded_edges) == 2
    assert h.boundary == ("a", "b", INF)


def test_hull_rejects_degenerate():
    cfg = PointConfig.build(2, [("a", (0, 0)), ("b", (1, 1)), ("c", (2, 2))])
    with pytest.raises(ValueError):
        convex_hull(cfg, ["a", "b", "c"])


def test_tetrahedron_hull(tetra_interior):
    h = convex_hull(tetra_interior, ["a", "b", "c", "d", "o"])
    assert h.vertices == ("a", "b", "c", "d")
    assert len(h.facets) == 4
    assert point_in_hull(tetra_interior, h, "o")


# ---------------------------------------------------------------------------
# volumes


def test_simplex_volume_values(square, tetra_interior):
    assert simplex_volume(square, ["a", "b", "c"]) == Q(1, 2)
    assert simplex_volume(tetra_interior, ["a", "b", "c", "d"]) == Q(64, 6)


def test_hull_volume_square_and_pentagon(square, pentagon):
    assert hull_volume(square, convex_hull(square, square.labels)) == 1
    assert hull_volume(pentagon, convex_hull(pentagon, pentagon.labels)) == 13


def test_hull_volume_matches_fan_triangulation(pentagon):
    # oracle comparison: cone-over-origin formula vs an explicit fan
    fan = [("a", "b", "c"), ("a", "c", "d"), ("a", "d", "e")]
    total = sum(simplex_volume(pentagon, t) for t in fan)
    assert hull_volume(pentagon, convex_hull(pentagon, pentagon.labels)) == total


# ---------------------------------------------------------------------------
# circuits


def test_square_circuit(square):
    circuits = enumerate_circuits(square)
    assert len(circuits) == 1
    z = circuits[0]
    assert z.positive == {"a", "c"}   # (0,0) + (1,1) = (1,0) + (0,1)
    assert z.negative == {"b", "d"}
    assert sum(z.dependency) == 0


def test_triangle_interior_circuit(tri_interior):
    z = circuit_of(tri_interior, ["a", "b", "c", "o"])
    assert z.positive == {"a", "b", "c"}
    assert z.negative == {"o"}


def test_simplex_has_no_circuit():
    cfg = PointConfig.build(2, [("a", (0, 0)), ("b", (1, 0)), ("c", (0, 1))])
    assert enumerate_circuits(cfg) == []


def test_circuit_radon_property(pentagon):
    # the two parts' hulls intersect: the dependency exhibits a common point
    for z in enumerate_circuits(pentagon):
        tot = sum(z.coefficient(l) for l in z.positive)
        common = [Q(0), Q(0)]
        for l in z.positive:
            c = pentagon.coord(l)
            common[0] += Q(z.coefficient(l), tot) * c[0]
            common[1] += Q(z.coefficient(l), tot) * c[1]
        # same point from the negative side
        other = [Q(0), Q(0)]
        for l in z.negative:
            c = pentagon.coord(l)
            other[0] += Q(-z.coefficient(l), tot) * c[0]
            other[1] += Q(-z.coefficient(l), tot) * c[1]
        assert common == other


def test_infinity_circuit(sheared_square_inf):
    # d+2 points including infinity still carry a unique dependency
    z = circuit_of(sheared_square_inf, ["a", "b", "c", INF])
    finite_sum = sum(z.coefficient(l) for l in z.support if l != INF)
    assert finite_sum == 0
    assert z.coefficient(INF) != 0


# ---------------------------------------------------------------------------
# marked subpolytopes


def test_square_subpolytopes(square):
    polys = enumerate_subpolytopes(square)
    assert len(polys) == 5
    sizes = sorted(len(p.marking) for p in polys)
    assert sizes == [3, 3, 3, 3, 4]


def test_triangle_interior_subpolytopes(tri_interior):
    polys = enumerate_subpolytopes(tri_interior)
    assert len(polys) == 4
    markings = {frozenset(p.marking) for p in polys}
    assert frozenset("abco") in markings          # the big triangle, geometric
    assert frozenset("abc") not in markings       # omits the interior point
    assert not is_geometric(tri_interior, ["a", "b", "c"])


def test_generic_triangle_single_subpolytope():
    cfg = PointConfig.build(2, [("a", (0, 0)), ("b", (2, 1)), ("c", (1, 3))])
    polys = enumerate_subpolytopes(cfg)
    assert len(polys) == 1
    assert polys[0].geometric


def test_pentagon_all_subsets_geometric(pentagon):
    # convex position: every marking of size >= 3 is geometric
    assert len(enumerate_subpolytopes(pentagon)) == 16


def test_geometric_count_affine_invariant(square):
    # shear + translate the square; the catalogue size is unchanged
    mapped = PointConfig.build(2, [
        (lab, (2 * x + y + 3, x + y - 1))
        for lab, (x, y) in zip(square.labels, square.coords)])
    assert len(enumerate_subpolytopes(mapped)) == 5


def test_infinite_subpolytope_families(sheared_square_inf):
    polys = enumerate_subpolytopes(sheared_square_inf, include_infinity=True)
    finite, infinite = split_families(polys)
    assert all(not p.is_unbounded for p in finite)
    assert all(p.is_unbounded for p in infinite)
    assert len(finite) + len(infinite) == len(polys)
    assert infinite  # vertical rays over a convex quadrilateral exist


def test_marked_polytope_vertex_set(tri_interior):
    mp = marked_polytope(tri_interior, ["a", "b", "c", "o"])
    assert mp.vertex_set == {"a", "b", "c"}
    assert mp.geometric


def test_slope_order(sheared_square_inf):
    order = sorted(sheared_square_inf.labels,
                   key=lambda l: slope_key(sheared_square_inf, l))
    assert order == ["a", "d", "b", "c"]  # increasing x for u = (0,1)
