"""Exact LP feasibility: simplex witnesses cross-checked against
Fourier-Motzkin elimination."""

from fractions import Fraction

from hypothesis import given, settings, strategies as st

from secpoly.lp import fourier_motzkin_feasible, lp_strict_feasible

Q = Fraction


def check_witness(res, equalities, stricts):
    x = res.witness
    for a, b in equalities:
        assert sum(ai * xi for ai, xi in zip(a, x)) == b
    for c, d in stricts:
        assert sum(ci * xi for ci, xi in zip(c, x)) > d


def test_open_interval_feasible():
    eqs = []
    stricts = [([Q(1)], Q(0)), ([Q(-1)], Q(-1))]  # x > 0, x < 1
    res = lp_strict_feasible(eqs, stricts, 1)
    assert res.feasible
    check_witness(res, eqs, stricts)
    assert Q(0) < res.witness[0] < Q(1)


def test_contradictory_stricts_infeasible():
    res = lp_strict_feasible([], [([Q(1)], Q(0)), ([Q(-1)], Q(0))], 1)
    assert not res.feasible


def test_square_diagonal_fold_feasible():
    # unit square a=(0,0), b=(1,0), c=(0,1), d=(1,1), cells abd / acd.
    # Convexity across the diagonal a-d asks psi_b + psi_c - psi_a - psi_d > 0.
    stricts = [([Q(-1), Q(1), Q(1), Q(-1)], Q(0))]
    res = lp_strict_feasible([], stricts, 4)
    assert res.feasible
    check_witness(res, [], stricts)
    # the hand lift (0, 1, 1, 0) is also a witness
    psi = (Q(0), Q(1), Q(1), Q(0))
    assert -psi[0] + psi[1] + psi[2] - psi[3] > 0


def test_equalities_restrict_witness():
    eqs = [([Q(1), Q(1)], Q(1))]
    stricts = [([Q(1), Q(0)], Q(0)), ([Q(0), Q(1)], Q(0))]
    res = lp_strict_feasible(eqs, stricts, 2)
    assert res.feasible
    check_witness(res, eqs, stricts)


def test_equalities_alone_solved_directly():
    res = lp_strict_feasible([([Q(1), Q(2)], Q(5))], [], 2)
    assert res.feasible
    assert res.witness[0] + 2 * res.witness[1] == 5
    bad = lp_strict_feasible([([Q(0), Q(0)], Q(1))], [], 2)
    assert not bad.feasible


def test_unbounded_slack_still_witnessed():
    # x > 0 alone: slack is capped at 1, witness must exist
    res = lp_strict_feasible([], [([Q(1)], Q(0))], 1)
    assert res.feasible
    assert res.witness[0] > 0
    assert res.slack == 1


def test_infeasible_by_equality_conflict():
    res = lp_strict_feasible([([Q(1)], Q(0))], [([Q(1)], Q(1))], 1)
    assert not res.feasible  # x = 0 but x > 1


def test_fourier_motzkin_agrees_on_knowns():
    assert fourier_motzkin_feasible([], [([Q(1)], Q(0)), ([Q(-1)], Q(-1))], 1)
    assert not fourier_motzkin_feasible([], [([Q(1)], Q(0)), ([Q(-1)], Q(0))], 1)
    assert fourier_motzkin_feasible([([Q(1), Q(1)], Q(1))],
                                    [([Q(1), Q(0)], Q(0)), ([Q(0), Q(1)], Q(0))], 2)


coeffs = st.integers(min_value=-4, max_value=4)


@given(st.lists(st.tuples(st.tuples(coeffs, coeffs, coeffs), coeffs),
                min_size=1, max_size=6))
@settings(max_examples=80, derandomize=True, deadline=None)
def test_simplex_matches_fourier_motzkin(raw):
    stricts = [(tuple(map(Q, a)), Q(b)) for a, b in raw]
    res = lp_strict_feasible([], stricts, 3)
    assert res.feasible == fourier_motzkin_feasible([], stricts, 3)
    if res.feasible:
        check_witness(res, [], stricts)


@given(st.lists(st.tuples(st.tuples(coeffs, coeffs), coeffs), min_size=1, max_size=3),
       st.lists(st.tuples(st.tuples(coeffs, coeffs), coeffs), min_size=1, max_size=4))
@settings(max_examples=60, derandomize=True, deadline=None)
def test_simplex_with_equalities_matches_oracle(raw_eq, raw_strict):
    eqs = [(tuple(map(Q, a)), Q(b)) for a, b in raw_eq]
    stricts = [(tuple(map(Q, a)), Q(b)) for a, b in raw_strict]
    res = lp_strict_feasible(eqs, stricts, 2)
    assert res.feasible == fourier_motzkin_feasible(eqs, stricts, 2)
    if res.feasible:
        check_witness(res, eqs, stricts)
