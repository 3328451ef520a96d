"""Random cross-checks of the solvers against the brute-force oracle."""
from __future__ import annotations

import random
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence

from .model import PercentileConstraint, WeightedMdp
from .oracle import brute_force_oracle
from .randgen import FAMILIES, random_mdp, random_query
from .solve import solve_conjunction
from .verdict import Verdict

EPSILONS = (Fraction(1, 4), Fraction(1, 8))


@dataclass
class Case:
    index: int
    family: str
    mdp: WeightedMdp
    constraints: List[PercentileConstraint]
    epsilon: Fraction
    verdict: Verdict
    oracle: str
    reason: str

    @property
    def disagrees(self) -> bool:
        s = self.verdict.status
        return (s == "yes" and self.oracle == "no") or (s == "no" and self.oracle == "yes")


@dataclass
class SweepResult:
    cases: List[Case] = field(default_factory=list)
    seconds: Counter = field(default_factory=Counter)

    @property
    def disagreements(self) -> List[Case]:
        return [c for c in self.cases if c.disagrees]

    def tally(self) -> Counter:
        return Counter((c.family, c.verdict.status, c.oracle) for c in self.cases)


def sweep(n_mdps: int = 200, seed: int = 7, families: Sequence[str] = tuple(FAMILIES)) -> SweepResult:
    """One random MDP per round (<= 5 states, <= 2 actions, d <= 2, weights 0..2), one query per family."""
    rng = random.Random(seed)
    out = SweepResult()
    for k in range(n_mdps):
        mdp = random_mdp(rng, dim=rng.randint(1, 2))
        for fam in families:
            cons = random_query(rng, mdp, FAMILIES[fam])
            eps = rng.choice(EPSILONS) if fam == "discounted_sum" else None
            t0 = time.perf_counter()
            v = solve_conjunction(mdp, 0, cons, eps)
            t1 = time.perf_counter()
            o = brute_force_oracle(mdp, 0, cons)
            out.seconds[(fam, "solver")] += t1 - t0
            out.seconds[(fam, "oracle")] += time.perf_counter() - t1
            out.cases.append(Case(k, fam, mdp, cons, eps, v, o.verdict, o.reason))
    return out
