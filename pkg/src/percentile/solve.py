"""Dispatch of conjunctions and disjunctive queries to the payoff-specific solvers."""
from __future__ import annotations

from typing import Optional, Sequence

from .horizon import ds_eps_gap_solve, sp_solve
from .meanpayoff import solve_mean_payoff
from .model import INF_KINDS, MP_KINDS, PercentileConstraint, PercentileQuery, WeightedMdp, as_fraction
from .regular import solve_regular
from .verdict import NO, UNKNOWN, YES, Verdict


class QueryError(ValueError):
    pass


def family(kind: str) -> str:
    if kind in INF_KINDS:
        return "regular"
    if kind in MP_KINDS:
        return "mean_payoff"
    return kind


def solve_conjunction(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint],
                      epsilon=None) -> Verdict:
    constraints = tuple(constraints)
    if not constraints:
        raise QueryError("empty conjunction")
    for c in constraints:
        if not 0 <= c.dim < mdp.dim:
            raise QueryError("dimension %d out of range (model has %d)" % (c.dim, mdp.dim))
    fams = {family(c.kind) for c in constraints}
    if len(fams) > 1:
        raise QueryError("one conjunction mixes payoff families %s" % sorted(fams))
    fam = fams.pop()
    eps = as_fraction(epsilon) if epsilon is not None else None
    if fam == "regular":
        return solve_regular(mdp, init, constraints)
    if fam == "mean_payoff":
        return solve_mean_payoff(mdp, init, constraints, eps)
    if fam == "truncated_sum":
        return sp_solve(mdp, init, constraints)
    if fam == "discounted_sum":
        return ds_eps_gap_solve(mdp, init, constraints, eps)
    raise QueryError("unknown payoff %s" % fam)


def solve_query(mdp: WeightedMdp, query: PercentileQuery) -> Verdict:
    """Disjuncts are solved independently; the first Yes wins.

    The aggregate is Unknown when some disjunct is Unknown and none is Yes,
    and No otherwise.  ``certificate['disjuncts']`` lists every verdict.
    """
    init = mdp.initial if query.initial is None else query.initial
    verdicts = []
    for block in query.disjuncts:
        v = solve_conjunction(mdp, init, block, query.epsilon)
        verdicts.append(v)
        if v.status == YES:
            break
    statuses = [v.status for v in verdicts]
    if YES in statuses:
        out = verdicts[statuses.index(YES)]
        out.certificate = dict(out.certificate, disjunct=statuses.index(YES), disjuncts=statuses)
        return out
    if UNKNOWN in statuses:
        out = verdicts[statuses.index(UNKNOWN)]
        out.certificate = dict(out.certificate, disjunct=statuses.index(UNKNOWN), disjuncts=statuses)
        return out
    return Verdict(NO, tuple(c for b in query.disjuncts for c in b),
                   certificate={"disjuncts": statuses, "details": [v.certificate for v in verdicts]})
