from itertools import combinations

from hypothesis import given

from percentile.fixtures import exp_memory_mdp, randomness_mdp, switch_mdp
from percentile.graph import (STAR, almost_sure_attractor, contract_mecs, forward_reach_set, is_end_component,
                              max_end_components, positive_reach_set, scc_decompose)

from conftest import mdp_from_seed, seeds


def _all_end_components(mdp):
    """Brute force: every state set whose maximal closed action choice is strongly connected."""
    n = mdp.n_states
    out = []
    for size in range(1, n + 1):
        for S in combinations(range(n), size):
            S = set(S)
            # largest action sets staying inside S, iterated to a fixed point
            acts = {s: tuple(k for k, a in enumerate(mdp.actions[s]) if set(a.support()) <= S) for s in S}
            if any(not a for a in acts.values()):
                continue
            if is_end_component(mdp, S, acts):
                out.append((frozenset(S), acts))
    return out


def test_switch_fixture_is_one_mec():
    dec = max_end_components(switch_mdp())
    assert len(dec) == 1
    assert dec.mecs[0].states == {0, 1}


def test_randomness_fixture_mecs():
    m = randomness_mdp()
    dec = max_end_components(m)
    assert sorted(sorted(ec.states) for ec in dec) == [[1], [2]]
    assert 0 not in dec.membership


def test_contraction_adds_absorbing_proxies():
    m = randomness_mdp()
    con = contract_mecs(m)
    assert len(con.mec_state) == 2
    for p in con.mec_state:
        assert con.mdp.is_absorbing(p)
    for s, k in con.star_action.items():
        assert con.mdp.actions[s][k].name == STAR


def test_scc_on_cycle_and_tail():
    succ = [[1], [2], [0], [0]]
    comps = scc_decompose(succ)
    assert sorted(map(sorted, comps)) == [[0, 1, 2], [3]]


@given(seeds)
def test_mecs_match_brute_force(seed):
    mdp = mdp_from_seed(seed, max_states=4)
    dec = max_end_components(mdp)
    for ec in dec:
        assert is_end_component(mdp, ec.states, ec.actions)
    seen = set()
    for ec in dec:
        assert not (ec.states & seen), "MECs overlap"
        seen |= ec.states
    # every end component sits inside one MEC, and every MEC is a maximal EC
    ecs = _all_end_components(mdp)
    for S, acts in ecs:
        owners = {dec.membership.get(s) for s in S}
        assert len(owners) == 1 and None not in owners
        ec = dec.mecs[owners.pop()]
        assert all(set(acts[s]) <= set(ec.actions[s]) for s in S)
    maximal = {S for S, _ in ecs if not any(S < T for T, _ in ecs)}
    assert maximal == {ec.states for ec in dec}


@given(seeds)
def test_attractor_reaches_with_probability_one(seed):
    mdp = mdp_from_seed(seed, max_states=5)
    target = {mdp.n_states - 1}
    win = almost_sure_attractor(mdp, target)
    win = win[0] if isinstance(win, tuple) else win
    assert target <= set(win)
    pos = positive_reach_set(mdp, target)
    assert set(win) <= set(pos)
    # from a state outside the positive-reach set nothing reaches the target
    for s in range(mdp.n_states):
        if s not in pos:
            assert not (forward_reach_set(mdp, [s]) & target)


def test_exp_memory_fixture_is_acyclic_until_the_end():
    m, targets = exp_memory_mdp(2)
    dec = max_end_components(m)
    assert all(len(ec.states) == 1 for ec in dec)
