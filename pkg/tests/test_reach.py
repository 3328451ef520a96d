from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percentile.fixtures import exp_memory_mdp, nested_mdp, randomness_mdp, route_mdp, switch_mdp
from percentile.horizon import ds_build_rounded_unfolding
from percentile.randgen import random_mdp, random_query
from percentile.reach import (NotAcyclic, TargetsNotAbsorbing, absorbing_flow, absorbing_multi_reach,
                              acyclic_multi_reach, almost_sure_multi_reach, check_flow_certificate,
                              general_multi_reach, nested_multi_reach)
from percentile.sim import minimize_memory, reach_probability_of

from conftest import mdp_from_seed, seeds

ALPHAS = st.sampled_from([F(0), F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(3, 4), F(1)])


@pytest.mark.parametrize("n", [2, 3])
def test_nested_thresholds_are_tight(n):
    mdp, targets, alphas = nested_mdp(n)
    s = nested_multi_reach(mdp, 0, targets, alphas)
    assert s is not None
    for T, a in zip(targets, alphas):
        assert reach_probability_of(mdp, s, T) >= a
    for i in range(n):
        bumped = list(alphas)
        bumped[i] += F(1, 100)
        assert nested_multi_reach(mdp, 0, targets, bumped) is None


@pytest.mark.parametrize("k", [1, 2, 3])
def test_exponential_memory(k):
    mdp, targets = exp_memory_mdp(k)
    res = almost_sure_multi_reach(mdp, 0, targets)
    assert res is not None
    strategy, _ = res
    for T in targets:
        assert reach_probability_of(mdp, strategy, T) == 1
    assert minimize_memory(mdp, strategy).lower_bound >= 2 ** k


def test_randomization_needed_for_two_branches():
    m = randomness_mdp()
    s = absorbing_multi_reach(m, 0, [{1}, {2}], [F(1, 2), F(1, 2)])
    assert s is not None and not s.is_pure()
    assert absorbing_multi_reach(m, 0, [{1}, {2}], [F(1, 2), F(51, 100)]) is None


def test_targets_must_be_absorbing():
    m = route_mdp()
    with pytest.raises(TargetsNotAbsorbing):
        absorbing_flow(m, 0, [{1}], [F(1, 2)])


def test_flow_certificate_revalidates():
    m = randomness_mdp()
    sol = absorbing_flow(m, 0, [{1}, {2}], [F(1, 2), F(1, 2)])
    assert check_flow_certificate(m, 0, [{1}, {2}], [F(1, 2), F(1, 2)], sol.flow, sol.reach) == []
    forged = dict(sol.reach)
    forged[1] = F(3, 4)
    assert check_flow_certificate(m, 0, [{1}, {2}], [F(1, 2), F(1, 2)], sol.flow, forged) != []


@given(seeds, ALPHAS, ALPHAS)
@settings(max_examples=40)
def test_general_multi_reach_witness_is_exact(seed, a1, a2):
    mdp = mdp_from_seed(seed, max_states=4)
    T1, T2 = {0}, {mdp.n_states - 1}
    s = general_multi_reach(mdp, 0, [T1, T2], [a1, a2])
    if s is not None:
        assert reach_probability_of(mdp, s, T1) >= a1
        assert reach_probability_of(mdp, s, T2) >= a2


@given(seeds, ALPHAS, ALPHAS)
@settings(max_examples=40)
def test_acyclic_route_agrees_with_flow_program(seed, a1, a2):
    """Frontier tracing and the LP decide the same instances; the mixture meets the goals exactly."""
    import random
    rng = random.Random(seed)
    mdp = random_mdp(rng, max_states=3, dim=2)
    cons = [c.replace(prob=F(1, 2)) for c in random_query(rng, mdp, ["discounted_sum"], q=2)]
    unf = ds_build_rounded_unfolding(mdp, 0, cons, F(1, 2))
    goals = unf.leaf_set(cons, F(0))
    mix = acyclic_multi_reach(unf.mdp, unf.mdp.initial, goals, [a1, a2])
    lp = absorbing_flow(unf.mdp, unf.mdp.initial, goals, [a1, a2])
    assert (mix is None) == (lp is None)
    if mix is not None:
        s = mix.strategy(unf.mdp, unf.mdp.initial)
        for T, a in zip(goals, (a1, a2)):
            assert reach_probability_of(unf.mdp, s, T) >= a


def test_acyclic_rejects_cycles():
    with pytest.raises(NotAcyclic):
        acyclic_multi_reach(switch_mdp(), 0, [set()], [F(0)])
