import json
import random
from fractions import Fraction as Q

import pytest

from secpoly.geometry import PointConfig
from secpoly.linf import build_structure_tables
from secpoly.mc import (
    ADDITIVE,
    affine_density_exponent,
    binomial_residuals,
    binomial_system_json,
    circuit_equations,
    cocycle_lattice,
    constant_element,
    is_mc,
    mc_element,
    polytope_weight,
    simplex_basis,
    volume_exponent,
)


@pytest.fixture(scope="module")
def random6():
    return PointConfig.build(2, [
        ("a", (-5, -4)), ("b", (6, -3)), ("c", (5, 5)),
        ("d", (-4, 6)), ("e", (1, 1)), ("f", (2, -1)),
    ])


@pytest.fixture(scope="module")
def square_tables(square):
    return build_structure_tables(square)


def test_square_system_is_the_single_diagonal_binomial(square):
    system = circuit_equations(square)
    assert system.simplices == (("a", "b", "c"), ("a", "b", "d"),
                                ("a", "c", "d"), ("b", "c", "d"))
    (eq,) = system.equations
    assert eq.circuit.support == ("a", "b", "c", "d")
    assert eq.left == (("a", "b", "c"), ("a", "c", "d"))
    assert eq.right == (("a", "b", "d"), ("b", "c", "d"))


def test_interior_point_equation_is_drop_versus_star(tri_interior):
    (eq,) = circuit_equations(tri_interior).equations
    assert eq.left == (("a", "b", "c"),)
    assert set(eq.right) == {("a", "b", "o"), ("a", "c", "o"), ("b", "c", "o")}


def test_simplex_configuration_has_empty_system():
    tri = PointConfig.build(2, [("a", (0, 0)), ("b", (2, 0)), ("c", (0, 2))])
    system = circuit_equations(tri)
    assert system.equations == ()
    assert binomial_residuals(constant_element(tri, 7), system) == {}
    lat = cocycle_lattice(tri)
    assert lat.rank == 1 and lat.basis == ((1,),)


def test_element_validation(square):
    with pytest.raises(ValueError, match="simplex basis"):
        mc_element(square, {("a", "b", "c"): 1})
    full = {s: 1 for s in simplex_basis(square)}
    with pytest.raises(ValueError, match="nonzero"):
        mc_element(square, {**full, ("a", "b", "c"): 0})
    # zero exponents are legitimate additively
    zeroed = mc_element(square, {**full, ("a", "b", "c"): 0}, ADDITIVE)
    assert zeroed[("a", "b", "c")] == 0
    with pytest.raises(ValueError, match="model"):
        mc_element(square, full, "tropical")


def test_square_flat_example(square, square_tables):
    gamma = mc_element(square, {("a", "b", "c"): 2, ("a", "c", "d"): 3,
                                ("a", "b", "d"): 6, ("b", "c", "d"): 1})
    verdict = is_mc(gamma, square_tables)
    assert verdict.ok and verdict.residuals == {} and verdict.direct == {}


def test_square_perturbed_example_localizes_the_defect(square, square_tables):
    gamma = mc_element(square, {("a", "b", "c"): 2, ("a", "c", "d"): 1,
                                ("a", "b", "d"): 1, ("b", "c", "d"): 1})
    verdict = is_mc(gamma, square_tables)
    assert not verdict.ok
    assert verdict.residuals == {("a", "b", "c", "d"): Q(1)}
    assert set(verdict.direct) == {("a", "b", "c", "d")}
    assert abs(verdict.direct[("a", "b", "c", "d")]) == Q(1)


def test_is_mc_rejects_geometric_tables(square):
    geo = build_structure_tables(square, variant="geometric")
    gamma = constant_element(square)
    with pytest.raises(ValueError, match="marked"):
        is_mc(gamma, geo)


def test_is_mc_rejects_additive_elements(square, square_tables):
    with pytest.raises(ValueError, match="additive"):
        is_mc(volume_exponent(square), square_tables)


def test_is_mc_rejects_foreign_configuration(pentagon, square_tables):
    with pytest.raises(ValueError, match="support"):
        is_mc(constant_element(pentagon), square_tables)


def test_cocycle_lattice_square(square):
    lat = cocycle_lattice(square)
    assert lat.rows == ((1, -1, 1, -1),)
    assert lat.rank == 3
    assert len(lat.basis) == 3
    assert lat.is_cocycle({s: 1 for s in lat.simplices})
    assert lat.in_semigroup({s: 1 for s in lat.simplices})
    # the area exponent is a cocycle but not a lattice point here
    area = volume_exponent(square)
    assert lat.is_cocycle(area.values)
    assert not lat.in_semigroup(area.values)
    assert not lat.is_cocycle({s: i for i, s in enumerate(lat.simplices)})


def test_area_exponent_is_a_cocycle_everywhere(square, pentagon, tri_interior, random6):
    for cfg in (square, pentagon, tri_interior, random6):
        assert cocycle_lattice(cfg).is_cocycle(volume_exponent(cfg).values)


def test_affine_density_integrals_are_cocycles(pentagon, random6):
    rng = random.Random(73)
    for cfg in (pentagon, random6):
        lat = cocycle_lattice(cfg)
        area = volume_exponent(cfg)
        for _ in range(8):
            coeffs = (Q(rng.randint(-9, 9), rng.randint(1, 4)),
                      Q(rng.randint(-9, 9), rng.randint(1, 4)))
            beta = affine_density_exponent(cfg, coeffs, rng.randint(-5, 5))
            assert lat.is_cocycle(beta.values)
            shifted = {s: area[s] + beta[s] for s in lat.simplices}
            assert lat.is_cocycle(shifted)


def test_polytope_weight_of_constant_element(square, pentagon):
    for cfg in (square, pentagon):
        one = constant_element(cfg)
        assert polytope_weight(cfg, one, cfg.labels) == 1


def test_polytope_weight_square_diagonal_product(square):
    gamma = mc_element(square, {("a", "b", "c"): 2, ("a", "c", "d"): 3,
                                ("a", "b", "d"): 6, ("b", "c", "d"): 1})
    assert polytope_weight(square, gamma, ("a", "b", "c", "d")) == 6
    assert polytope_weight(square, gamma, ("a", "b", "c")) == 2


def test_polytope_weight_additive_area_is_the_area(square, pentagon):
    assert polytope_weight(square, volume_exponent(square), square.labels) == 1
    assert polytope_weight(pentagon, volume_exponent(pentagon), pentagon.labels) == 13


def test_polytope_weight_rejects_non_flat_input(square):
    bad = mc_element(square, {("a", "b", "c"): 2, ("a", "c", "d"): 1,
                              ("a", "b", "d"): 1, ("b", "c", "d"): 1})
    with pytest.raises(ValueError, match="flat"):
        polytope_weight(square, bad, square.labels)
    area = dict(volume_exponent(square).values)
    area[("a", "b", "c")] += 1
    with pytest.raises(ValueError, match="cocycle"):
        polytope_weight(square, mc_element(square, area, ADDITIVE), square.labels)


def test_direct_and_binomial_routes_agree_on_random_draws(square, tri_interior,
                                                          random6, square_tables):
    """Forced-flat draws from the cocycle lattice must pass; arbitrary draws
    must at least keep the two evaluation routes consistent (is_mc raises on
    any mismatch)."""
    rng = random.Random(20260823)
    pool = [(square, square_tables),
            (tri_interior, build_structure_tables(tri_interior)),
            (random6, build_structure_tables(random6))]
    nonzero = [Q(1), Q(-1), Q(2), Q(-2), Q(3), Q(1, 2), Q(-1, 3), Q(5, 2)]
    t = Q(3, 2)
    verdicts = set()
    for cfg, tables in pool:
        lat = cocycle_lattice(cfg)
        for i in range(40):
            if i % 2 == 0:
                coeffs = [rng.randint(-2, 2) for _ in lat.basis]
                beta = [sum(c * b[j] for c, b in zip(coeffs, lat.basis))
                        for j in range(len(lat.simplices))]
                gamma = mc_element(cfg, {s: t ** e for s, e in
                                         zip(lat.simplices, beta)})
                verdict = is_mc(gamma, tables)
                assert verdict.ok, beta
            else:
                gamma = mc_element(cfg, {s: rng.choice(nonzero)
                                         for s in lat.simplices})
                verdict = is_mc(gamma, tables)
            verdicts.add(verdict.ok)
    assert verdicts == {True, False}


def test_json_layout_round_trips(square, random6):
    system = circuit_equations(square)
    text = binomial_system_json(system)
    assert text == binomial_system_json(circuit_equations(square))
    doc = json.loads(text)
    assert doc["simplices"] == [["a", "b", "c"], ["a", "b", "d"],
                               ["a", "c", "d"], ["b", "c", "d"]]
    (eq,) = doc["equations"]
    assert eq["left"] == [1, 0, 1, 0]
    assert eq["right"] == [0, 1, 0, 1]
    assert eq["positive"] == ["a", "c"] and eq["negative"] == ["b", "d"]
    big = json.loads(binomial_system_json(circuit_equations(random6)))
    assert len(big["equations"]) == 15
    for e in big["equations"]:
        # sides partition the circuit's four one-point deletions
        assert sum(e["left"]) + sum(e["right"]) == 4
        assert sum(e["left"]) >= 1 and sum(e["right"]) >= 1
