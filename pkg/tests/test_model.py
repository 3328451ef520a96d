from fractions import Fraction as F

import pytest

from percentile.fixtures import randomness_mdp, switch_mdp
from percentile.model import (Action, MooreStrategy, PercentileConstraint, SymbolicStrategy, WeightedMdp,
                              as_fraction, induced_chain, repair_deadlocks, tabulate, validate_mdp)


def test_build_and_validate():
    m = switch_mdp()
    assert m.n_states == 2 and m.dim == 2
    assert sum(len(r) for r in m.actions) == 4
    assert validate_mdp(m) == []
    assert m.index("t") == 1 and m.action_index(1, "go") == 1


def test_validation_catches_broken_models():
    bad = WeightedMdp(("a", "a"), ((Action("x", (0,), ((0, F(2, 3)),)),), ()), 1, 0)
    problems = validate_mdp(bad)
    assert any("duplicate state" in p for p in problems)
    assert any("deadlock" in p for p in problems)
    assert any("sum" in p for p in problems)
    fixed = repair_deadlocks(WeightedMdp(("a",), ((),), 1, 0))
    assert fixed.is_absorbing(0)


def test_floats_refused():
    with pytest.raises(TypeError):
        as_fraction(0.5)
    assert as_fraction("1/3") == F(1, 3)


@pytest.mark.parametrize("kw", [
    dict(kind="nope", dim=0, value=0, prob=0),
    dict(kind="sup", dim=0, value=0, prob=F(3, 2)),
    dict(kind="truncated_sum", dim=0, value=0, prob=1),
    dict(kind="discounted_sum", dim=0, value=0, prob=1),
    dict(kind="discounted_sum", dim=0, value=0, prob=1, discount=1),
    dict(kind="sup", dim=0, value=0, prob=1, discount=F(1, 2)),
    dict(kind="sup", dim=0, value=0, prob=1, target={0}),
])
def test_constraint_validation(kw):
    with pytest.raises(ValueError):
        PercentileConstraint(**kw)


def test_memoryless_strategy_and_chain():
    m = randomness_mdp()
    s = MooreStrategy.memoryless(m, 0, {0: {0: F(1, 2), 1: F(1, 2)}, 1: 0, 2: 0})
    assert s.memory_size == 1 and not s.is_pure()
    ch = induced_chain(m, s)
    assert len(ch) == 3


def test_tabulate_rejects_bad_distributions():
    m = randomness_mdp()
    with pytest.raises(ValueError):
        tabulate(m, 0, {0: F(1)}, lambda s, mm: {0: F(1, 2)}, lambda *a: {0: F(1)})
    with pytest.raises(ValueError):
        tabulate(m, 0, {0: F(1)}, lambda s, mm: {5: F(1)}, lambda *a: {0: F(1)})


def test_symbolic_strategy_instantiates_to_a_prefix():
    m = switch_mdp()
    # alternate: loop while the counter is even, go when odd; memory grows forever
    sym = SymbolicStrategy(0, {0: F(1)}, lambda s, k: {k % 2: F(1)}, lambda s, k, a, t: {k + 1: F(1)})
    with pytest.raises(Exception):
        induced_chain(m, sym)
    fin = sym.instantiate(m, 6)
    assert fin.finite and fin.memory_size == 7
