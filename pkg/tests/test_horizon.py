import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percentile.chain import constraint_probabilities
from percentile.fixtures import coin_mdp, route_mdp, split_mdp
from percentile.horizon import (NegativeWeights, PreciseDiscountUnsupported, ds_build_rounded_unfolding,
                                ds_eps_gap_solve, ds_horizon_bound, round_to_grid, rounded_branch,
                                sp_build_product, sp_solve)
from percentile.reach import acyclic_multi_reach
from percentile.model import PercentileConstraint as C, WeightedMdp
from percentile.randgen import random_mdp, random_query

from conftest import seeds

HALF = F(1, 2)
DISCOUNTS = st.sampled_from([F(1, 4), F(1, 3), HALF, F(2, 3), F(3, 4)])
EPS = st.sampled_from([F(1, 4), F(1, 8)])


def ds(dim, value, prob=1, lam=HALF):
    return C("discounted_sum", dim, value, prob, discount=lam)


def test_horizon_bound_examples():
    assert ds_horizon_bound(HALF, 1, HALF) == 3
    assert ds_horizon_bound(HALF, 1, 1) == 2
    assert ds_horizon_bound(HALF, 0, HALF) == 1


@given(DISCOUNTS, st.integers(1, 4), EPS)
def test_horizon_bound_is_minimal(lam, W, eps):
    h = ds_horizon_bound(lam, W, eps)
    assert W * lam ** h / (1 - lam) <= eps / 2
    if h > 1:
        assert W * lam ** (h - 1) / (1 - lam) > eps / 2


def test_round_half_up():
    g = F(1, 4)
    assert round_to_grid(F(1, 8), g) == F(1, 4)
    assert round_to_grid(F(-1, 8), g) == 0
    assert round_to_grid(F(1, 9), g) == 0


def test_coin_gap_verdicts():
    m = coin_mdp()
    assert ds_eps_gap_solve(m, 0, [ds(0, HALF)], F(1, 16)).yes
    assert ds_eps_gap_solve(m, 0, [ds(0, 2)], F(1, 4)).no
    v = ds_eps_gap_solve(m, 0, [ds(0, 1), ds(1, -1)], F(1, 8))
    assert v.status == "unknown" and v.suggested_epsilon == F(1, 16)
    lo = constraint_probabilities(m, v.relaxed_strategy, v.relaxed_constraints, 0, ds_depth=12)
    assert all(l >= 1 for l, _ in lo)


def test_precise_discount_rejected():
    with pytest.raises(PreciseDiscountUnsupported):
        ds_eps_gap_solve(coin_mdp(), 0, [ds(0, HALF)], 0)


def _random_path(rng, mdp, length, init=0):
    path, s = [], init
    for _ in range(length):
        k = rng.randrange(len(mdp.actions[s]))
        act = mdp.actions[s][k]
        t = rng.choices([t for t, _ in act.succ], weights=[float(p) for _, p in act.succ])[0]
        path.append((k, t))
        s = t
    return path


@given(seeds, EPS, DISCOUNTS, DISCOUNTS)
@settings(max_examples=100)
def test_unfolding_error_budget(seed, eps, lam0, lam1):
    """Along a random branch the leaf label is within eps/2 of the exact prefix sum, and the tail within eps/2."""
    rng = random.Random(seed)
    mdp = random_mdp(rng, max_states=4, dim=2, weights=(-4, -1, 0, 1, 2, 4))
    cons = [ds(0, 0, lam=lam0), ds(1, 0, lam=lam1)]
    h, W = ds_horizon_bound(max(lam0, lam1), mdp.max_abs_weight(), eps), mdp.max_abs_weight()
    path = _random_path(rng, mdp, h - 1)
    labels = rounded_branch(mdp, 0, cons, eps, path)
    assert len(labels) == h
    s, exact = 0, [F(0), F(0)]
    for j, (k, t) in enumerate(path):
        w = mdp.actions[s][k].weights
        for i, c in enumerate(cons):
            exact[i] += c.discount ** (j + 1) * w[c.dim]
        s = t
    for i, c in enumerate(cons):
        assert abs(labels[-1][i] - exact[i]) <= eps / 2
        assert W * c.discount ** h / (1 - c.discount) <= eps / 2


@given(seeds, EPS)
@settings(max_examples=30)
def test_branch_walk_matches_unfolding(seed, eps):
    rng = random.Random(seed)
    mdp = random_mdp(rng, max_states=3, dim=2)
    cons = [ds(0, 1, lam=HALF), ds(1, 0, lam=F(1, 3))]
    unf = ds_build_rounded_unfolding(mdp, 0, cons, eps, settle=False)
    assert unf.layers == unf.horizon
    path = _random_path(rng, mdp, unf.horizon - 1)
    node = unf.mdp.initial
    for (k, t), lab in zip(path, rounded_branch(mdp, 0, cons, eps, path)[1:]):
        node = unf.succ_index[(node, k, t)]
        assert unf.labels[node] == lab
    assert node in set(unf.leaves)


@given(seeds, EPS)
@settings(max_examples=30)
def test_settling_keeps_verdicts(seed, eps):
    rng = random.Random(seed)
    mdp = random_mdp(rng, max_states=3, dim=2)
    cons = [ds(0, rng.choice([0, 1]), rng.choice([HALF, 1])), ds(1, HALF, rng.choice([F(1, 4), 1]), lam=F(1, 3))]
    a = ds_build_rounded_unfolding(mdp, 0, cons, eps, settle=True)
    b = ds_build_rounded_unfolding(mdp, 0, cons, eps, settle=False)
    assert a.layers == b.layers == b.horizon
    assert a.mdp.n_states <= b.mdp.n_states
    for shift in (eps, -eps):
        ra = acyclic_multi_reach(a.mdp, a.mdp.initial, a.leaf_set(cons, shift), [c.prob for c in cons])
        rb = acyclic_multi_reach(b.mdp, b.mdp.initial, b.leaf_set(cons, shift), [c.prob for c in cons])
        assert (ra is None) == (rb is None)


@given(seeds, EPS)
@settings(max_examples=30)
def test_gap_answers_are_sound(seed, eps):
    """Yes witnesses meet the query; Unknown witnesses meet the query lowered by 2 eps."""
    rng = random.Random(seed)
    mdp = random_mdp(rng, max_states=3, dim=2)
    cons = random_query(rng, mdp, ["discounted_sum"])
    v = ds_eps_gap_solve(mdp, 0, cons, eps)
    for s, meets in v.finite_witnesses():
        for (lo, _), c in zip(constraint_probabilities(mdp, s, meets, 0, ds_depth=16), meets):
            assert lo >= c.prob


# ----------------------------------------------------------------------------
# truncated sums


def test_split_fixture():
    m = split_mdp()
    t = {m.index("t")}
    assert sp_solve(m, 0, [C("truncated_sum", 0, 1, HALF, target=t)]).yes
    assert sp_solve(m, 0, [C("truncated_sum", 0, 1, F(3, 5), target=t)]).no


def test_route_needs_randomization():
    m = route_mdp()
    t = {m.index("t")}
    cs = [C("truncated_sum", 0, 1, F(1, 4), target=t), C("truncated_sum", 0, 5, F(3, 4), target=t)]
    v = sp_solve(m, 0, cs)
    assert v.yes and not v.strategy.is_pure()
    assert constraint_probabilities(m, v.strategy, cs, 0) == [F(1, 4), F(3, 4)]


def test_negative_weights_rejected():
    m = WeightedMdp.build(["a"], {"a": [("x", (-1,), {"a": 1})]})
    with pytest.raises(NegativeWeights):
        sp_solve(m, 0, [C("truncated_sum", 0, 1, HALF, target={0})])


@given(seeds)
@settings(max_examples=40)
def test_product_size_bound(seed):
    rng = random.Random(seed)
    mdp = random_mdp(rng, dim=2)
    cons = random_query(rng, mdp, ["truncated_sum"])
    cp = sp_build_product(mdp, 0, cons)
    vmax = max(int(c.value) for c in cons)
    assert cp.product.mdp.n_states <= mdp.n_states * (vmax + 2) ** mdp.dim


@given(seeds)
@settings(max_examples=40)
def test_sp_witnesses_verify(seed):
    rng = random.Random(seed)
    mdp = random_mdp(rng, dim=2)
    cons = random_query(rng, mdp, ["truncated_sum"])
    v = sp_solve(mdp, 0, cons)
    if v.yes:
        probs = constraint_probabilities(mdp, v.strategy, cons, 0)
        assert all(p >= c.prob for p, c in zip(probs, cons))
