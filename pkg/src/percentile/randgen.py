"""Random small MDPs and queries for cross-checking."""
from __future__ import annotations

import random
from fractions import Fraction as F
from typing import List, Optional

from .model import PercentileConstraint, WeightedMdp

PROBS = [F(0), F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(3, 4), F(1)]
DISCOUNTS = [F(1, 2), F(2, 3), F(3, 4)]


def random_distribution(rng: random.Random, n: int, support: int):
    targets = rng.sample(range(n), min(support, n))
    if len(targets) == 1:
        return {targets[0]: F(1)}
    cuts = sorted(rng.sample(range(1, 4), len(targets) - 1)) if len(targets) <= 4 else None
    parts, prev = [], 0
    for c in cuts + [4]:
        parts.append(F(c - prev, 4))
        prev = c
    return {t: p for t, p in zip(targets, parts)}


def random_mdp(rng: random.Random, max_states: int = 5, max_actions: int = 2, dim: int = 2,
               weights=(0, 1, 2)) -> WeightedMdp:
    n = rng.randint(1, max_states)
    names = ["s%d" % i for i in range(n)]
    trans = {}
    for s in names:
        row = []
        for k in range(rng.randint(1, max_actions)):
            dist = random_distribution(rng, n, rng.choice([1, 1, 2]))
            row.append(("a%d" % k, tuple(rng.choice(weights) for _ in range(dim)),
                        {names[t]: p for t, p in dist.items()}))
        trans[s] = row
    return WeightedMdp.build(names, trans)


def random_constraint(rng: random.Random, mdp: WeightedMdp, kind: str) -> PercentileConstraint:
    l = rng.randrange(mdp.dim)
    prob = rng.choice(PROBS)
    if kind in ("inf", "sup", "liminf", "limsup"):
        return PercentileConstraint(kind, l, rng.choice([0, 1, 2]), prob)
    if kind in ("mp_inf", "mp_sup"):
        return PercentileConstraint(kind, l, rng.choice([F(1, 2), F(1), F(3, 2), F(2)]), prob)
    if kind == "truncated_sum":
        target = frozenset(rng.sample(range(mdp.n_states), rng.randint(1, max(1, mdp.n_states // 2))))
        return PercentileConstraint(kind, l, rng.choice([0, 1, 2, 3]), prob, target=target)
    if kind == "discounted_sum":
        return PercentileConstraint(kind, l, rng.choice([F(0), F(1, 2), F(1), F(2)]), prob,
                                    discount=rng.choice(DISCOUNTS))
    raise ValueError(kind)


def random_query(rng: random.Random, mdp: WeightedMdp, kinds, q: Optional[int] = None) -> List[PercentileConstraint]:
    q = q or rng.randint(1, 2)
    return [random_constraint(rng, mdp, rng.choice(kinds)) for _ in range(q)]


FAMILIES = {
    "regular": ["inf", "sup", "liminf", "limsup"],
    "mp_inf": ["mp_inf"],
    "mp_sup": ["mp_sup"],
    "truncated_sum": ["truncated_sum"],
    "discounted_sum": ["discounted_sum"],
}
