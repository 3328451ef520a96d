from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from .model import MooreStrategy, PercentileConstraint, WeightedMdp

YES, NO, UNKNOWN = "yes", "no", "unknown"


@dataclass
class Verdict:
    """Answer of a percentile solver.

    ``strategy`` is set for Yes answers (it may be symbolic for exact
    mean-payoff answers, or None when only a certificate is available).
    ``verified_against`` lists the constraints the strategy is meant to
    satisfy; for relaxed answers these are the relaxed constraints.
    """

    status: str
    constraints: Tuple[PercentileConstraint, ...] = ()
    strategy: Any = None
    certificate: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    verified_against: Optional[Tuple[PercentileConstraint, ...]] = None
    epsilon: Optional[Fraction] = None
    suggested_epsilon: Optional[Fraction] = None
    relaxed_strategy: Any = None
    relaxed_constraints: Optional[Tuple[PercentileConstraint, ...]] = None

    @property
    def yes(self):
        return self.status == YES

    @property
    def no(self):
        return self.status == NO

    def finite_witnesses(self):
        """(strategy, constraints) pairs whose strategy has finite memory."""
        out = []
        if self.strategy is not None and getattr(self.strategy, "finite", False):
            out.append((self.strategy, self.verified_against or self.constraints))
        if self.relaxed_strategy is not None and getattr(self.relaxed_strategy, "finite", False):
            out.append((self.relaxed_strategy, self.relaxed_constraints))
        return out

    def __bool__(self):
        raise TypeError("use .yes / .no / .status on a Verdict")


def trivial_strategy(mdp: WeightedMdp, init: int) -> MooreStrategy:
    return MooreStrategy.memoryless(mdp, init, lambda s: 0)


def yes(constraints, strategy, **kw) -> Verdict:
    kw.setdefault("verified_against", tuple(constraints))
    return Verdict(YES, tuple(constraints), strategy, **kw)


def no(constraints, **kw) -> Verdict:
    return Verdict(NO, tuple(constraints), **kw)
