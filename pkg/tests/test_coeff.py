import json
import random
from fractions import Fraction as Q

import pytest

from secpoly.coeff import (
    CoefficientSystem,
    GradedSpace,
    boundary_tensor,
    cell_walls,
    coefficient_system,
    concatenate,
    generalization_map,
    linear_tensor,
    oriented_edge,
    path_block,
    random_system,
    reverse_wall,
    subdivision_block,
    system_from_json,
    system_to_json,
    trace_pair,
    trivial_system,
)
from secpoly.geometry import PointConfig
from secpoly.linalg import MatrixQ, rank
from secpoly.linf import build_structure_tables, verify_d_squared
from secpoly.secondary import build_secondary
from secpoly.subdivision import make_subdivision


@pytest.fixture(scope="module")
def triangle():
    return PointConfig.build(2, [("a", (0, 0)), ("b", (2, 0)), ("c", (0, 2))])


@pytest.fixture(scope="module")
def hexagon():
    return PointConfig.build(2, [
        ("a", (0, 0)), ("b", (3, 0)), ("c", (5, 2)),
        ("d", (4, 5)), ("e", (1, 6)), ("f", (-2, 3)),
    ])


def odd_system(config):
    """A small mixed-degree system touching the square's diagonal."""
    return coefficient_system(config, [
        {"from": "a", "to": "b", "graded_dims": {0: 1, 1: 1}},
        {"from": "b", "to": "c", "graded_dims": {-1: 1}},
        {"from": "a", "to": "c", "graded_dims": {1: 2},
         "pairing": [["2", "0"], ["1", "1"]]},
    ])


def test_oriented_edge_tokens(square):
    assert oriented_edge(square, "a", "b") == (("a", "b"), 1)
    assert oriented_edge(square, "b", "a") == (("a", "b"), -1)
    assert reverse_wall((("a", "b"), 1)) == (("a", "b"), -1)


def test_duality_involution(square):
    cs = odd_system(square)
    w = oriented_edge(square, "a", "c")
    assert cs.space(w).degrees == (1, 1)
    assert cs.space(reverse_wall(w)) == cs.space(w).dual()
    assert cs.space(reverse_wall(reverse_wall(w))) == cs.space(w)
    p = cs.pairing_rows(w)
    q = cs.pairing_rows(reverse_wall(w))
    n = len(p)
    assert all(p[i][j] == q[j][i] for i in range(n) for j in range(n))
    assert cs.pairing_rows(reverse_wall(reverse_wall(w))) == p


def test_system_validation(square):
    w = oriented_edge(square, "a", "b")
    with pytest.raises(ValueError, match="twice"):
        CoefficientSystem(((w, GradedSpace((0,))),
                           (reverse_wall(w), GradedSpace((0,)))))
    with pytest.raises(ValueError, match="degenerate"):
        CoefficientSystem(((w, GradedSpace((0, 0))),),
                          ((w, ((Q(1), Q(1)), (Q(1), Q(1)))),))
    with pytest.raises(ValueError, match="degree-preserving"):
        CoefficientSystem(((w, GradedSpace((0, 1))),),
                          ((w, ((Q(0), Q(1)), (Q(1), Q(0)))),))


def test_trivial_block_is_scalar(square):
    block = boundary_tensor(square, square.labels, trivial_system())
    assert block.dim == 1
    assert block.graded_dimension() == {0: 1}
    assert len(block.walls) == 4


def test_cyclic_wall_order_of_the_square(square):
    walls = cell_walls(square, square.labels)
    assert walls == (
        (("a", "b"), 1), (("b", "c"), 1), (("c", "d"), 1), (("a", "d"), -1))


def test_triangle_block_with_dim_two_edges(triangle):
    cs = coefficient_system(triangle, [
        {"from": "a", "to": "b", "graded_dims": {0: 1, 1: 1}},
        {"from": "b", "to": "c", "graded_dims": {0: 1, 1: 1}},
        {"from": "c", "to": "a", "graded_dims": {0: 1, 1: 1}},
    ])
    block = boundary_tensor(triangle, ("a", "b", "c"), cs)
    assert block.dim == 8
    assert block.graded_dimension() == {0: 1, 1: 3, 2: 3, 3: 1}


def test_wall_paired_with_its_reverse_traces_to_the_pairing(square):
    cs = odd_system(square)
    w = oriented_edge(square, "a", "c")
    block = path_block(cs, (w, reverse_wall(w)))
    m, glued = trace_pair(cs, block, ("a", "c"))
    assert glued.dim == 1 and glued.walls == ()
    rows = cs.pairing_rows(w)
    for (r, c), v in m.entries.items():
        assert r == 0
        i, j = block.unflatten(c)
        assert v == rows[i][j] != 0


def test_generalization_identity_and_trivial(square):
    tri = make_subdivision(square, square.labels, [("a", "b", "c"), ("a", "c", "d")])
    cs = odd_system(square)
    assert generalization_map(square, tri, tri, cs) == \
        MatrixQ.identity(subdivision_block(square, tri, cs).dim)
    top = make_subdivision(square, square.labels, [square.labels])
    assert generalization_map(square, tri, top, trivial_system()) == \
        MatrixQ.from_rows([[Q(1)]])


def test_generalization_rejects_non_refining(square):
    t1 = make_subdivision(square, square.labels, [("a", "b", "c"), ("a", "c", "d")])
    t2 = make_subdivision(square, square.labels, [("a", "b", "d"), ("b", "c", "d")])
    with pytest.raises(ValueError, match="refine"):
        generalization_map(square, t1, t2, trivial_system())


def test_generalization_transitive_on_pentagon_chain(pentagon):
    cs = coefficient_system(pentagon, [
        {"from": "a", "to": "c", "graded_dims": {1: 2},
         "pairing": [["1", "1"], ["0", "2"]]},
        {"from": "c", "to": "e", "graded_dims": {-1: 1, 0: 1}},
        {"from": "a", "to": "d", "graded_dims": {1: 1}},
    ])
    fine = make_subdivision(pentagon, pentagon.labels,
                            [("a", "b", "c"), ("a", "c", "e"), ("c", "d", "e")])
    mid = make_subdivision(pentagon, pentagon.labels,
                           [("a", "b", "c"), ("a", "c", "d", "e")])
    top = make_subdivision(pentagon, pentagon.labels, [pentagon.labels])
    direct = generalization_map(pentagon, fine, top, cs)
    stepped = generalization_map(pentagon, mid, top, cs) @ \
        generalization_map(pentagon, fine, mid, cs)
    assert direct == stepped and not direct.is_zero()


@pytest.mark.parametrize("name", ["square", "tri_interior", "pentagon", "hexagon"])
def test_sheaf_consistency_all_chains(name, request):
    """Generalization maps compose along every nested chain of regular
    subdivisions of the full marking."""
    config = request.getfixturevalue(name)
    cs = coefficient_system(config, [
        {"from": config.labels[0], "to": config.labels[2],
         "graded_dims": {0: 1, 1: 1}},
        {"from": config.labels[1], "to": config.labels[2],
         "graded_dims": {-1: 1}},
    ])
    sp = build_secondary(config)
    faces = sp.faces
    below = {f.index: f.vertex_ids for f in faces}
    subs = {f.index: f.subdivision for f in faces}
    comparable = [(a.index, b.index) for a in faces for b in faces
                  if below[a.index] <= below[b.index]]
    gmap = {(i, j): generalization_map(config, subs[i], subs[j], cs)
            for i, j in comparable}
    checked = 0
    for i, j in comparable:
        for k in faces:
            if below[j] <= below[k.index]:
                assert gmap[(j, k.index)] @ gmap[(i, j)] == \
                    gmap[(i, k.index)], (subs[i], subs[j], subs[k.index])
                checked += 1
    assert checked > len(faces)


def test_factorization_of_subdivision_blocks(square):
    cs = odd_system(square)
    tri = make_subdivision(square, square.labels, [("a", "b", "c"), ("a", "c", "d")])
    block = subdivision_block(square, tri, cs)
    left = boundary_tensor(square, ("a", "b", "c"), cs)
    right = boundary_tensor(square, ("a", "c", "d"), cs)
    assert block.walls == left.walls + right.walls
    assert block.dim == left.dim * right.dim
    conv: dict[int, int] = {}
    for g1, n1 in left.graded_dimension().items():
        for g2, n2 in right.graded_dimension().items():
            conv[g1 + g2] = conv.get(g1 + g2, 0) + n1 * n2
    assert block.graded_dimension() == conv


def test_disjoint_traces_commute(square):
    cs = odd_system(square)
    ab = oriented_edge(square, "a", "b")
    ac = oriented_edge(square, "a", "c")
    bc = oriented_edge(square, "b", "c")
    walls = (ab, ac, bc, reverse_wall(ac), reverse_wall(ab))
    block = path_block(cs, walls)
    m_ac, after_ac = trace_pair(cs, block, ("a", "c"))
    m_ab_then, final1 = trace_pair(cs, after_ac, ("a", "b"))
    m_ab, after_ab = trace_pair(cs, block, ("a", "b"))
    m_ac_then, final2 = trace_pair(cs, after_ab, ("a", "c"))
    assert final1.walls == final2.walls == (bc,)
    assert m_ab_then @ m_ac == m_ac_then @ m_ab
    assert not (m_ab_then @ m_ac).is_zero()


def test_concatenate_triangles_along_the_diagonal(square):
    for cs in (trivial_system(),
               coefficient_system(square, [
                   {"from": "a", "to": "c", "graded_dims": {1: 1}}])):
        p1 = path_block(cs, cell_walls(square, ("a", "b", "c")))
        p2 = path_block(cs, cell_walls(square, ("a", "c", "d")))
        m = concatenate(cs, p1, p2, ("a", "c"))
        assert m.nrows == 1 and m.ncols == 1
        assert m == MatrixQ.from_rows([[Q(1)]])
        assert rank(m.to_rows()) == 1


def test_concatenate_rejects_mismatched_paths(square):
    cs = trivial_system()
    p1 = path_block(cs, (oriented_edge(square, "a", "b"),))
    p2 = path_block(cs, (oriented_edge(square, "b", "c"),))
    with pytest.raises(ValueError, match="share"):
        concatenate(cs, p1, p2, ("a", "c"))
    p3 = path_block(cs, (oriented_edge(square, "a", "b"),))
    with pytest.raises(ValueError, match="opposite"):
        concatenate(cs, p1, p3, ("a", "b"))


def test_linear_tensor_orders_finite_edges(sheared_square_inf):
    cfg = sheared_square_inf
    cs = trivial_system()
    tri = linear_tensor(cfg, ("a", "b", "infinity"), cs)
    assert tri.walls == (oriented_edge(cfg, "a", "b"),)
    quad = linear_tensor(cfg, ("a", "b", "c", "infinity"), cs)
    assert quad.walls == (oriented_edge(cfg, "a", "b"),
                          oriented_edge(cfg, "b", "c"))
    with pytest.raises(ValueError, match="cyclic"):
        linear_tensor(cfg, ("a", "b", "c"), cs)
    with pytest.raises(ValueError, match="linear"):
        boundary_tensor(cfg, ("a", "b", "infinity"), cs)


def test_decorated_tables_reduce_to_scalar_for_trivial_system(square, tri_interior):
    for cfg in (square, tri_interior):
        plain = build_structure_tables(cfg)
        dec = build_structure_tables(cfg, coeffs=trivial_system())
        for n in plain.arities():
            for e0, e1 in zip(plain.entries(n), dec.entries(n)):
                assert (e0.inputs, e0.output) == (e1.inputs, e1.output)
                assert e1.coefficient == MatrixQ.from_rows([[e0.coefficient]])


def test_decorated_entries_preserve_block_degree(square):
    cs = odd_system(square)
    tables = build_structure_tables(square, coeffs=cs)
    for e in tables.all_entries():
        out_block = boundary_tensor(square, e.output, cs)
        in_blocks = [boundary_tensor(square, c, cs) for c in e.inputs]
        out_degs = out_block.element_degrees()
        in_degs = [b.element_degrees() for b in in_blocks]
        dims = [b.dim for b in in_blocks]
        for (row, col), v in e.coefficient.entries.items():
            combo = []
            rem = col
            for d in reversed(dims):
                combo.append(rem % d)
                rem //= d
            combo.reverse()
            assert out_degs[row] == sum(degs[k] for degs, k in
                                        zip(in_degs, combo))


def test_decorated_d_squared_passes(square, tri_interior, pentagon):
    assert verify_d_squared(
        build_structure_tables(square, coeffs=odd_system(square))).ok
    ti_cs = coefficient_system(tri_interior, [
        {"from": "a", "to": "o", "graded_dims": {1: 1}},
        {"from": "b", "to": "c", "graded_dims": {0: 2}},
        {"from": "a", "to": "b", "graded_dims": {-1: 1, 2: 1}},
    ])
    assert verify_d_squared(
        build_structure_tables(tri_interior, coeffs=ti_cs)).ok
    rng = random.Random(9)
    pent_cs = random_system(pentagon, rng)
    assert verify_d_squared(
        build_structure_tables(pentagon, coeffs=pent_cs)).ok


def test_decorated_d_squared_random_systems(square, tri_interior):
    for seed in range(4):
        for cfg in (square, tri_interior):
            rs = random_system(cfg, random.Random(seed))
            assert verify_d_squared(build_structure_tables(cfg, coeffs=rs)).ok


def test_geometric_variant_with_coefficients(square):
    cs = odd_system(square)
    tables = build_structure_tables(square, variant="geometric", coeffs=cs)
    assert verify_d_squared(tables).ok
    assert all(isinstance(e.coefficient, MatrixQ) for e in tables.all_entries())


def test_json_round_trip(square):
    cs = odd_system(square)
    text = system_to_json(cs)
    assert text == system_to_json(cs)
    back = system_from_json(square, text)
    assert back == cs
    doc = json.loads(text)
    assert {e["from"] for e in doc["edges"]} == {"a", "b"}


def test_random_system_shapes(pentagon):
    rng = random.Random(5)
    cs = random_system(pentagon, rng, decorated_walls=4, even_only=True)
    assert len(cs.spaces) == 4
    for _, space in cs.spaces:
        assert 1 <= space.dim <= 2
        assert all(g % 2 == 0 for g in space.degrees)
    assert len(cs.pairings) == 1
