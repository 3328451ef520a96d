from fractions import Fraction as F

import pytest

from percentile.fixtures import randomness_mdp, route_mdp, switch_mdp
from percentile.model import PercentileConstraint as C, WeightedMdp
from percentile.oracle import InstanceTooLarge, Reach, brute_force_oracle

HALF = F(1, 2)


def test_pure_strategies_cannot_split():
    m = randomness_mdp()
    cs = [C("sup", 0, 1, HALF), C("sup", 1, 1, HALF)]
    assert brute_force_oracle(m, 0, cs, pure_only=True).verdict == "no"
    assert brute_force_oracle(m, 0, cs).verdict == "yes"


def test_reach_objectives():
    m = route_mdp()
    t = m.index("t")
    assert brute_force_oracle(m, 0, [Reach(frozenset({t}), 1)]).verdict == "yes"


def test_liminf_no_on_switch():
    m = switch_mdp()
    cs = [C("liminf", 0, 1, F(3, 5)), C("liminf", 1, 1, F(3, 5))]
    assert brute_force_oracle(m, 0, cs).verdict == "no"


def test_size_limits():
    big = WeightedMdp.build(["s%d" % i for i in range(7)], {"s%d" % i: [("x", (0,), {"s%d" % i: 1})] for i in range(7)})
    with pytest.raises(InstanceTooLarge):
        brute_force_oracle(big, 0, [C("sup", 0, 0, 1)])
