from fractions import Fraction as F
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from percentile.ratlp import (EQ, GE, LE, LinearProgram, LpError, SingularMatrix, solve_linear_system,
                              solve_lp)


def test_textbook_maximum():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
    lp = LinearProgram.dense(2, [([1, 0], LE, 4), ([0, 2], LE, 12), ([3, 2], LE, 18)], objective=[3, 5])
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.point == [2, 6] and res.value == 36
    assert all(type(x) is F for x in res.point)


def test_minimize_with_equalities_and_free_variable():
    lp = LinearProgram()
    x = lp.add_var("x", nonneg=False)
    y = lp.add_var("y")
    lp.add_constraint({x: 1, y: 1}, EQ, F(1, 3))
    lp.add_constraint({y: 1}, GE, F(1, 2))
    lp.set_objective({x: 1, y: 1}, maximize=False)
    res = solve_lp(lp)
    assert res.status == "optimal" and res.value == F(1, 3)
    assert lp.check(res.point) == []


def test_infeasible_and_unbounded():
    lp = LinearProgram.dense(1, [([1], LE, 1), ([1], GE, 2)])
    assert solve_lp(lp).status == "infeasible"
    lp = LinearProgram.dense(2, [([1, -1], LE, 1)], objective=[1, 0])
    res = solve_lp(lp)
    assert res.status == "unbounded"
    # the ray keeps the constraint and increases the objective
    r = res.ray
    assert r[0] - r[1] <= 0 and r[0] > 0


def test_feasibility_only():
    lp = LinearProgram.dense(2, [([1, 1], EQ, 1), ([1, 0], GE, F(1, 4))])
    res = solve_lp(lp)
    assert res.status == "feasible" and lp.check(res.point) == []


def test_rejects_floats_and_bad_rows():
    lp = LinearProgram.dense(2, [])
    with pytest.raises(LpError):
        lp.add_constraint([0.5, 1], LE, 1)
    with pytest.raises(LpError):
        lp.add_constraint([1], LE, 1)
    with pytest.raises(LpError):
        lp.add_constraint({5: 1}, LE, 1)
    with pytest.raises(LpError):
        lp.add_constraint([1, 1], "<>", 1)


def test_degenerate_program_terminates():
    # Beale's cycling example for the textbook rule, here with exact arithmetic
    rows = [([F(1, 4), -60, F(-1, 25), 9], LE, 0),
            ([F(1, 2), -90, F(-1, 50), 3], LE, 0),
            ([0, 0, 1, 0], LE, 1)]
    lp = LinearProgram.dense(4, rows, objective=[F(3, 4), -150, F(1, 50), -6])
    res = solve_lp(lp)
    assert res.status == "optimal" and res.value == F(1, 20)


def test_linear_system():
    x = solve_linear_system([[2, 1], [1, 3]], [3, 5])
    assert x == [F(4, 5), F(7, 5)]
    assert solve_linear_system([{0: 1}, {1: F(1, 2)}], [1, 1]) == [1, 2]
    with pytest.raises(SingularMatrix):
        solve_linear_system([[1, 2], [2, 4]], [1, 2])


small = st.integers(-3, 3)


@given(st.lists(st.tuples(small, small, st.integers(0, 6)), min_size=1, max_size=4), small, small)
def test_optimum_matches_vertex_enumeration(rows, c0, c1):
    """Over the box [0,5]^2 plus random cuts, the simplex optimum equals the best vertex."""
    cons = [([a, b], LE, r) for a, b, r in rows] + [([1, 0], LE, 5), ([0, 1], LE, 5)]
    lp = LinearProgram.dense(2, cons, objective=[c0, c1])
    res = solve_lp(lp)
    all_rows = [(r, b) for r, _, b in cons] + [([-1, 0], 0), ([0, -1], 0)]
    best = None
    for (r1, b1), (r2, b2) in combinations(all_rows, 2):
        try:
            v = solve_linear_system([r1, r2], [b1, b2])
        except SingularMatrix:
            continue
        if all(F(r[0]) * v[0] + F(r[1]) * v[1] <= b for r, b in all_rows):
            val = c0 * v[0] + c1 * v[1]
            best = val if best is None else max(best, val)
    if best is None:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal" and res.value == best
        assert lp.check(res.point) == []


@given(st.lists(st.lists(st.integers(-4, 4), min_size=3, max_size=3), min_size=3, max_size=3),
       st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_linear_system_solution_checks(A, b):
    try:
        x = solve_linear_system(A, b)
    except SingularMatrix:
        return
    for row, rhs in zip(A, b):
        assert sum(F(a) * xi for a, xi in zip(row, x)) == rhs
