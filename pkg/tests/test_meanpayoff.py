from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from percentile.chain import constraint_probabilities
from percentile.fixtures import switch_mdp
from percentile.graph import max_end_components
from percentile.meanpayoff import (SwitchingSchedule, mec_max_expected_mp, mp_inf_joint_feasible, mp_inf_solve,
                                   mp_sup_solve, schedule_bound_k0, solve_mean_payoff)
from percentile.model import PercentileConstraint as C, WeightedMdp
from percentile.randgen import random_query

from conftest import mdp_from_seed, seeds

HALF = F(1, 2)


@pytest.fixture
def sw():
    m = switch_mdp()
    return m, max_end_components(m).mecs[0]


def test_single_dimension_optimum(sw):
    m, ec = sw
    assert mec_max_expected_mp(m, ec, 0)[0] == 1
    assert mec_max_expected_mp(m, ec, 1)[0] == 1


def test_joint_flows(sw):
    m, ec = sw
    assert mp_inf_joint_feasible(m, ec, [(0, HALF), (1, HALF)]) is not None
    assert mp_inf_joint_feasible(m, ec, [(0, 1), (1, 1)]) is None


def test_mp_sup_needs_switching(sw):
    m, _ = sw
    v = mp_sup_solve(m, 0, [C("mp_sup", 0, 1, 1), C("mp_sup", 1, 1, 1)])
    assert v.yes and v.strategy is not None and not v.strategy.finite
    # no joint flow reaches (1, 1) - (eps/2), so no finite relaxed alternative is claimed
    assert v.relaxed_strategy is None
    assert mp_sup_solve(m, 0, [C("mp_sup", 0, 1, 1), C("mp_sup", 1, 2, 1)]).no


def test_mp_inf(sw):
    m, _ = sw
    cs = [C("mp_inf", 0, HALF, F(3, 5)), C("mp_inf", 1, HALF, F(3, 5))]
    v = mp_inf_solve(m, 0, cs)
    assert v.yes
    assert mp_inf_solve(m, 0, [C("mp_inf", 0, 1, 1), C("mp_inf", 1, 1, 1)]).no


def test_mp_inf_relaxed_strategy_is_finite(sw):
    m, _ = sw
    cs = [C("mp_inf", 0, HALF, 1), C("mp_inf", 1, HALF, 1)]
    v = mp_inf_solve(m, 0, cs, F(1, 10))
    assert v.yes
    for s, meets in v.finite_witnesses():
        assert all(c.value >= HALF - F(1, 10) for c in meets)
        assert constraint_probabilities(m, s, meets, 0) == [1, 1]


def test_schedule_bounds():
    cyc = WeightedMdp.build(["a", "b"], {"a": [("x", (0,), {"b": 1})], "b": [("x", (1,), {"a": 1})]})
    e = max_end_components(cyc).mecs[0]
    assert schedule_bound_k0(cyc, e, 0, HALF, F(1, 4)) == 1
    assert schedule_bound_k0(cyc, e, 0, HALF, 1) == 1
    coin = WeightedMdp.build(["a"], {"a": [("x", (0,), {"a": 1}), ("y", (1,), {"a": 1})]})
    e = max_end_components(coin).mecs[0]
    fair = {0: {0: HALF, 1: HALF}}
    ks = [schedule_bound_k0(coin, e, 0, eps, F(1, 4), policy=fair) for eps in (HALF, F(1, 4), F(1, 10))]
    assert ks == sorted(ks) and ks[0] >= 1


def test_schedule_lengths_grow(sw):
    m, ec = sw
    pols = tuple(mec_max_expected_mp(m, ec, d)[1] for d in (0, 1))
    sch = SwitchingSchedule(m, ec, (0, 1), pols)
    lengths = sch.lengths(5)
    assert lengths == sorted(lengths) and sch.check_growth(5)


def test_mixed_kinds_in_several_dimensions_rejected(sw):
    m, _ = sw
    with pytest.raises(ValueError):
        solve_mean_payoff(m, 0, [C("mp_inf", 0, HALF, HALF), C("mp_sup", 1, HALF, HALF)])


@given(seeds)
@settings(max_examples=40)
def test_mp_inf_finite_witnesses_verify(seed):
    import random
    rng = random.Random(seed)
    mdp = mdp_from_seed(seed, dim=2)
    cs = random_query(rng, mdp, ["mp_inf"])
    v = mp_inf_solve(mdp, 0, cs, F(1, 4))
    for s, meets in v.finite_witnesses():
        probs = constraint_probabilities(mdp, s, meets, 0)
        assert all(p >= c.prob for p, c in zip(probs, meets))


@given(seeds)
@settings(max_examples=40)
def test_one_dimension_sup_and_inf_agree(seed):
    import random
    rng = random.Random(seed)
    mdp = mdp_from_seed(seed, dim=1)
    cs = random_query(rng, mdp, ["mp_inf"])
    sup = [C("mp_sup", c.dim, c.value, c.prob) for c in cs]
    assert mp_inf_solve(mdp, 0, cs).status == mp_sup_solve(mdp, 0, sup).status
