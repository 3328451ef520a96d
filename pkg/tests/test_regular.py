from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from percentile.chain import constraint_probabilities
from percentile.fixtures import randomness_mdp, route_mdp, switch_mdp
from percentile.model import PercentileConstraint as C
from percentile.randgen import FAMILIES, random_query
from percentile.regular import solve_regular, weights_to_states

from conftest import mdp_from_seed, seeds

HALF = F(1, 2)


@pytest.mark.parametrize("kind", ["inf", "sup", "liminf", "limsup"])
def test_randomness_fixture(kind):
    m = randomness_mdp()
    cs = [C(kind, 0, 1, HALF), C(kind, 1, 1, HALF)]
    v = solve_regular(m, 0, cs)
    assert v.yes
    assert constraint_probabilities(m, v.strategy, cs, 0) == [HALF, HALF]
    assert solve_regular(m, 0, [C(kind, 0, 1, F(51, 100)), C(kind, 1, 1, HALF)]).no


@pytest.mark.parametrize("alpha,expected", [(HALF, "yes"), (F(3, 5), "no"), (F(1), "no")])
def test_switch_liminf(alpha, expected):
    # liminf >= 1 on both dimensions would need both loops forever: one or the other
    v = solve_regular(switch_mdp(), 0, [C("liminf", 0, 1, alpha), C("liminf", 1, 1, alpha)])
    assert v.status == expected


def test_switch_limsup_is_sure():
    m = switch_mdp()
    cs = [C("limsup", 0, 1, 1), C("limsup", 1, 1, 1)]
    v = solve_regular(m, 0, cs)
    assert v.yes and constraint_probabilities(m, v.strategy, cs, 0) == [1, 1]


def test_single_dimension_inf_and_sup():
    r = route_mdp()
    for kind in ("inf", "sup"):
        cs = [C(kind, 0, 4, HALF), C(kind, 0, 5, HALF), C(kind, 0, 2, F(3, 4))]
        v = solve_regular(r, 0, cs)
        if v.yes:
            assert all(p >= c.prob for p, c in zip(constraint_probabilities(r, v.strategy, cs, 0), cs))


def test_weight_splitting_keeps_runs():
    m = switch_mdp()
    prod, labels = weights_to_states(m, 0)
    assert prod.mdp.n_states >= m.n_states
    assert set(labels.values()) <= {0, 1}


@given(seeds)
@settings(max_examples=40)
def test_yes_witnesses_verify_exactly(seed):
    import random
    rng = random.Random(seed)
    mdp = mdp_from_seed(seed, dim=2)
    cs = random_query(rng, mdp, FAMILIES["regular"])
    v = solve_regular(mdp, 0, cs)
    if v.yes:
        probs = constraint_probabilities(mdp, v.strategy, cs, 0)
        assert all(p >= c.prob for p, c in zip(probs, cs))


@given(seeds)
@settings(max_examples=40)
def test_raising_a_threshold_never_helps(seed):
    import random
    rng = random.Random(seed)
    mdp = mdp_from_seed(seed, dim=2)
    cs = random_query(rng, mdp, FAMILIES["regular"])
    base = solve_regular(mdp, 0, cs)
    for i, c in enumerate(cs):
        harder = list(cs)
        harder[i] = c.replace(prob=min(F(1), c.prob + F(1, 4)))
        if base.no:
            assert solve_regular(mdp, 0, harder).no
        harder[i] = c.replace(value=c.value + 1)
        if base.no:
            assert solve_regular(mdp, 0, harder).no
