"""Percentile queries for mean-payoff objectives (limsup and liminf of running averages).

Inside an end component everything is phrased through steady-state flows:
non-negative frequencies x[s, a] over the component's actions that are
flow-invariant and sum to one.  A flow with full support is realized
exactly by the memoryless strategy sigma(s)(a) proportional to x[s, a]; flows
with smaller support are first mixed with the uniform strategy's flow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .graph import EndComponent
from .model import PercentileConstraint, WeightedMdp, as_fraction
from .product import MemorylessMode, Mode
from .ratlp import LinearProgram, solve_linear_system, solve_lp
from .reach import lambda_decomposition_solve, lambda_strategy, prefix_independent_solve, uniform_mode
from .verdict import Verdict, no, trivial_strategy, yes

Flow = Dict[Tuple[int, int], Fraction]
Policy = Dict[int, Dict[int, Fraction]]


def _flow_lp(mdp: WeightedMdp, ec: EndComponent):
    lp = LinearProgram()
    x = {(s, a): lp.add_var("x[%s,%d]" % (mdp.states[s], a)) for s, a in ec.pairs()}
    inflow: Dict[int, Dict[int, Fraction]] = {}
    for (s, a), j in x.items():
        for t, p in mdp.actions[s][a].succ:
            d = inflow.setdefault(t, {})
            d[j] = d.get(j, Fraction(0)) + p
    for s in sorted(ec.states):
        row = {x[(s, a)]: Fraction(1) for a in ec.actions[s]}
        for j, p in inflow.get(s, {}).items():
            row[j] = row.get(j, Fraction(0)) - p
        lp.add_constraint(row, "==", 0)
    lp.add_constraint({j: 1 for j in x.values()}, "==", 1)
    return lp, x


def flow_value(mdp: WeightedMdp, flow: Flow, dim: int) -> Fraction:
    return sum((q * mdp.actions[s][a].weights[dim] for (s, a), q in flow.items()), Fraction(0))


def _attract(mdp: WeightedMdp, ec: EndComponent, support: Policy) -> Policy:
    """Extend a policy defined on part of ``ec`` so every state of ``ec`` reaches it almost surely."""
    policy = dict(support)
    frontier = list(support)
    while frontier:
        nxt = []
        for s in sorted(ec.states - set(policy)):
            for a in ec.actions[s]:
                if any(t in policy for t in mdp.actions[s][a].support()):
                    policy[s] = {a: Fraction(1)}
                    nxt.append(s)
                    break
        frontier = nxt
    missing = ec.states - set(policy)
    if missing:
        raise ValueError("not strongly connected: %s" % sorted(missing))
    return policy


def mec_max_expected_mp(mdp: WeightedMdp, ec: EndComponent, dim: int) -> Tuple[Fraction, Policy]:
    """Best expected mean payoff on ``dim`` inside a strongly connected component.

    Returns the value and a pure memoryless strategy that attains it from
    every state of the component (one optimal recurrent class plus an
    attractor into it).
    """
    lp, x = _flow_lp(mdp, ec)
    lp.set_objective({j: mdp.actions[s][a].weights[dim] for (s, a), j in x.items()}, maximize=True)
    res = solve_lp(lp)
    if res.status != "optimal":
        raise ValueError("flow LP for a component must be feasible and bounded, got %s" % res.status)
    support: Policy = {}
    for (s, a), j in sorted(x.items()):
        q = res.point[j]
        if q > 0 and (s not in support or q > next(iter(support[s].values()))):
            support[s] = {a: q}
    support = {s: {next(iter(d)): Fraction(1)} for s, d in support.items()}
    return res.value, _attract(mdp, ec, support)


def mp_inf_joint_feasible(mdp: WeightedMdp, ec: EndComponent,
                          requirements: Sequence[Tuple[int, Fraction]]) -> Optional[Flow]:
    """A steady-state flow of ``ec`` meeting every (dimension, threshold) pair, or None."""
    lp, x = _flow_lp(mdp, ec)
    for dim, v in requirements:
        lp.add_constraint({j: mdp.actions[s][a].weights[dim] for (s, a), j in x.items()}, ">=", v)
    res = solve_lp(lp)
    if not res.ok:
        return None
    return {key: res.point[j] for key, j in x.items() if res.point[j]}


def uniform_flow(mdp: WeightedMdp, ec: EndComponent) -> Flow:
    """Steady-state flow of the strategy playing all component actions uniformly."""
    states = sorted(ec.states)
    pos = {s: i for i, s in enumerate(states)}
    n = len(states)
    cols = [dict() for _ in range(n)]
    for s in states:
        r = pos[s]
        cols[r][r] = cols[r].get(r, Fraction(0)) - 1
        share = Fraction(1, len(ec.actions[s]))
        for a in ec.actions[s]:
            for t, p in mdp.actions[s][a].succ:
                c = pos[t]
                cols[c][r] = cols[c].get(r, Fraction(0)) + share * p
    rows = cols[:-1] + [{k: Fraction(1) for k in range(n)}]
    pi = solve_linear_system(rows, [Fraction(0)] * (n - 1) + [Fraction(1)])
    return {(s, a): pi[pos[s]] / len(ec.actions[s]) for s in states for a in ec.actions[s]}


def _dyadic_floor(x: Fraction) -> Fraction:
    t = Fraction(1, 2)
    while t > x:
        t /= 2
    return t


def mixing_weight(mdp, flow: Flow, uflow: Flow, requirements, slack=Fraction(0)) -> Fraction:
    """Largest dyadic theta <= 1/2 with (1-theta)flow + theta*uflow meeting v - slack; 0 if none."""
    bound = Fraction(1, 2)
    for dim, v in requirements:
        a, b = flow_value(mdp, flow, dim), flow_value(mdp, uflow, dim)
        target = v - slack
        if b >= target:
            continue
        room = a - target
        if room <= 0:
            return Fraction(0)
        bound = min(bound, room / (a - b))
    return _dyadic_floor(bound)


def flow_policy(mdp: WeightedMdp, ec: EndComponent, flow: Flow, uflow: Flow, theta: Fraction) -> Policy:
    mixed = {k: (1 - theta) * flow.get(k, Fraction(0)) + theta * q for k, q in uflow.items()}
    policy = {}
    for s in ec.states:
        tot = sum(mixed[(s, a)] for a in ec.actions[s])
        policy[s] = {a: mixed[(s, a)] / tot for a in ec.actions[s] if mixed[(s, a)]}
    return policy


def flow_mode(mdp, ec, requirements, slack=Fraction(0)) -> Optional[MemorylessMode]:
    """Memoryless in-component strategy whose unique mean payoff meets every requirement minus ``slack``."""
    if not requirements:
        return uniform_mode(ec)
    flow = mp_inf_joint_feasible(mdp, ec, [(d, v - slack / 2) for d, v in requirements])
    if flow is None:
        return None
    uflow = uniform_flow(mdp, ec)
    theta = mixing_weight(mdp, flow, uflow, requirements, slack)
    if theta == 0:
        return None
    return MemorylessMode(flow_policy(mdp, ec, flow, uflow, theta), "flow(theta=%s)" % theta)


# ----------------------------------------------------------------------------
# switching schedules


def _policy_chain(mdp: WeightedMdp, ec: EndComponent, policy: Policy, dim: int):
    states = sorted(ec.states)
    pos = {s: i for i, s in enumerate(states)}
    edges = []  # per state: (weight, next index, probability)
    for s in states:
        row = []
        for a, q in policy[s].items():
            w = Fraction(mdp.actions[s][a].weights[dim])
            for t, p in mdp.actions[s][a].succ:
                row.append((w, pos[t], q * p))
        edges.append(row)
    return states, edges


def _poisson(edges) -> Tuple[Fraction, List[Fraction]]:
    """Gain g and bias h with h(s) + g = r(s) + (P h)(s), h(0) = 0, for a unichain."""
    n = len(edges)
    # unknowns: h_1..h_{n-1}, g   (h_0 = 0)
    rows, rhs = [], []
    for i, row in enumerate(edges):
        coef: Dict[int, Fraction] = {}
        r = Fraction(0)
        if i > 0:
            coef[i - 1] = Fraction(1)
        coef[n - 1] = coef.get(n - 1, Fraction(0)) + 1
        for w, j, p in row:
            r += w * p
            if j > 0:
                coef[j - 1] = coef.get(j - 1, Fraction(0)) - p
        rows.append(coef)
        rhs.append(r)
    sol = solve_linear_system(rows, rhs)
    return sol[n - 1], [Fraction(0)] + list(sol[: n - 1])


def _exact_tail_ok(edges, g, eps, eta, lo, hi, cap=20000) -> Optional[int]:
    """Smallest K in [lo, hi) such that every K' in [K, hi) already meets the guarantee exactly."""
    n = len(edges)
    dists = [{(i, Fraction(0)): Fraction(1)} for i in range(n)]
    good = []
    for K in range(1, hi):
        new = []
        for d in dists:
            nd: Dict[Tuple[int, Fraction], Fraction] = {}
            for (i, acc), p in d.items():
                for w, j, q in edges[i]:
                    key = (j, acc + w)
                    nd[key] = nd.get(key, Fraction(0)) + p * q
            if len(nd) > cap:
                return None
            new.append(nd)
        dists = new
        thr = K * (g - eps)
        good.append(all(sum((p for (_, acc), p in d.items() if acc >= thr), Fraction(0)) >= 1 - eta for d in dists))
    K = hi
    while K - 1 >= max(lo, 1) and good[K - 2]:
        K -= 1
    return K


def schedule_bound_k0(mdp: WeightedMdp, ec: EndComponent, dim: int, eps, eta,
                      policy: Optional[Policy] = None, exact_limit: int = 256) -> int:
    """A K0 such that, for every K >= K0 and every start in ``ec``, the K-step average on ``dim``
    under ``policy`` (default: an optimal memoryless one) is >= gain - eps with probability >= 1 - eta.

    The certificate combines the Poisson decomposition of the running sum
    (bias span plus a martingale with bounded increments) with Azuma's
    inequality, using exp(-y) <= 1/(1+y) to stay in rationals.  Below
    ``exact_limit`` the bound is tightened by exact distributions.
    """
    eps, eta = as_fraction(eps), as_fraction(eta)
    if eta >= 1:
        return 1
    if not (0 < eps and 0 < eta):
        raise ValueError("eps and eta must be positive")
    if policy is None:
        policy = mec_max_expected_mp(mdp, ec, dim)[1]
    states, edges = _policy_chain(mdp, ec, policy, dim)
    g, h = _poisson(edges)
    span = max(h) - min(h)
    c = Fraction(0)
    for i, row in enumerate(edges):
        rbar = sum((w * p for w, _, p in row), Fraction(0))
        ph = sum((p * h[j] for _, j, p in row), Fraction(0))
        for w, j, _ in row:
            c = max(c, abs(w - rbar + h[j] - ph))
    if c == 0:
        k_az = max(1, math.ceil(span / eps))
    else:
        k_az = max(1, math.ceil(2 * span / eps), math.ceil(8 * c * c * (1 / eta - 1) / (eps * eps)))
    if k_az <= exact_limit and k_az > 1:
        tight = _exact_tail_ok(edges, g, eps, eta, 1, k_az)
        if tight is not None:
            return tight
    return k_az


@dataclass
class SwitchingSchedule:
    """Round-robin over per-dimension optimal strategies with growing phase lengths.

    Phase i (1-based) runs ``policies[(i - 1) % d]`` for ``length(i)``
    steps, where length(i) = max(K0_i, i^2 * sum of earlier lengths) and
    K0_i certifies an average within 1/(i+1) of the optimum with
    probability at least 1 - eta.
    """

    mdp: WeightedMdp
    ec: EndComponent
    dims: Tuple[int, ...]
    policies: Tuple[Policy, ...]
    eta: Fraction = Fraction(1, 4)
    _lengths: List[int] = field(default_factory=list, repr=False)
    _k0: Dict[Tuple[int, Fraction], int] = field(default_factory=dict, repr=False)

    def k0(self, i: int) -> int:
        j = (i - 1) % len(self.dims)
        key = (j, Fraction(1, i + 1))
        if key not in self._k0:
            self._k0[key] = schedule_bound_k0(self.mdp, self.ec, self.dims[j], key[1], self.eta, self.policies[j])
        return self._k0[key]

    def length(self, i: int) -> int:
        while len(self._lengths) < i:
            n = len(self._lengths) + 1
            self._lengths.append(max(self.k0(n), n * n * sum(self._lengths)))
        return self._lengths[i - 1]

    def lengths(self, n: int) -> List[int]:
        self.length(n)
        return list(self._lengths[:n])

    def check_growth(self, n: int) -> bool:
        t = self.lengths(n)
        return all(t[i - 1] >= i * i * sum(t[: i - 1]) for i in range(1, n + 1))



class ScheduleMode(Mode):
    """In-component mode running a switching schedule; memory is (phase, steps taken in phase)."""

    finite = False

    def __init__(self, schedule: SwitchingSchedule):
        self.schedule = schedule

    def initial(self, s):
        return {(1, 0): Fraction(1)}

    def act(self, s, m):
        i, _ = m
        return self.schedule.policies[(i - 1) % len(self.schedule.dims)][s]

    def update(self, s, m, a, t):
        i, c = m
        if c + 1 >= self.schedule.length(i):
            return {(i + 1, 0): Fraction(1)}
        return {(i, c + 1): Fraction(1)}


# ----------------------------------------------------------------------------
# solvers


def _live(constraints):
    return [c for c in constraints if c.prob > 0]


def _requirements(live, I):
    return [(live[i].dim, live[i].value) for i in sorted(I)]


def _relaxed(constraints, eps):
    return tuple(replace(c, value=c.value - eps) for c in constraints)


def mp_sup_solve(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint],
                 epsilon=None) -> Verdict:
    """MP-sup constraints.  The exact witness may need a switching schedule (infinite memory);
    with ``epsilon`` a finite alternative for thresholds v - epsilon is added when one exists."""
    constraints = tuple(constraints)
    live = _live(constraints)
    if not live:
        return yes(constraints, trivial_strategy(mdp, init))
    best: Dict[Tuple[frozenset, int], Tuple[Fraction, Policy]] = {}

    def vstar(ec, dim):
        key = (ec.states, dim)
        if key not in best:
            best[key] = mec_max_expected_mp(mdp, ec, dim)
        return best[key]

    def oracle(ec, i):
        return vstar(ec, live[i].dim)[0] >= live[i].value

    def in_mec(ec, I):
        mode = flow_mode(mdp, ec, _requirements(live, I))
        if mode is not None:
            return mode
        dims = tuple(sorted({live[i].dim for i in I}))
        return ScheduleMode(SwitchingSchedule(mdp, ec, dims, tuple(vstar(ec, d)[1] for d in dims)))

    res = prefix_independent_solve(mdp, init, [c.prob for c in live], oracle, in_mec)
    if res is None:
        return no(constraints, notes=["no end-component assignment reaches the optimal averages"])
    v = yes(constraints, res.strategy, certificate=res.certificate)
    if not res.strategy.finite:
        v.notes.append("exact witness uses switching schedules (infinite memory)")
        if epsilon is not None:
            eps = as_fraction(epsilon)
            failed = []

            def relaxed_mode(ec, I):
                mode = flow_mode(mdp, ec, _requirements(live, I), eps)
                if mode is None:
                    failed.append(sorted(I))
                    return uniform_mode(ec)
                return mode
            alt = prefix_independent_solve(mdp, init, [c.prob for c in live], oracle, relaxed_mode)
            if failed:
                v.notes.append("no finite-memory strategy meets the thresholds minus %s" % eps)
            else:
                v.relaxed_strategy = alt.strategy
                v.relaxed_constraints = _relaxed(constraints, eps)
                v.epsilon = eps
    return v


def mp_inf_solve(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint],
                 epsilon=0) -> Verdict:
    """MP-inf constraints through the subset decomposition.

    The verdict is for the exact thresholds.  A finite strategy is attached
    when possible: exact if the in-component flows admit full-support
    mixing, and otherwise (for epsilon > 0) one meeting thresholds v - epsilon.
    """
    constraints = tuple(constraints)
    eps = as_fraction(epsilon or 0)
    live = _live(constraints)
    if not live:
        return yes(constraints, trivial_strategy(mdp, init))
    res = lambda_decomposition_solve(
        mdp, init, [c.prob for c in live],
        lambda ec, I: mp_inf_joint_feasible(mdp, ec, _requirements(live, I)) is not None)
    cert = {"maximal_subsets": {k: [sorted(I) for I in v] for k, v in res.maximal.items()}}
    if not res.feasible:
        return no(constraints, certificate=cert)
    cert["weights"] = {"%d:%s" % (k, sorted(I)): w for (k, I), w in res.weights.items()}
    assert res.check(), "decomposition certificate failed re-substitution"
    used = [(res.mecs.mecs[k], I) for (k, I), w in res.weights.items() if w > 0]
    exact = {}
    for ec, I in used:
        exact[(ec.states, I)] = flow_mode(mdp, ec, _requirements(live, I))
    v = yes(constraints, None, certificate=cert)
    if all(m is not None for m in exact.values()):
        v.strategy = lambda_strategy(mdp, init, res, lambda ec, I: exact.get((ec.states, I)) or uniform_mode(ec))
        return v
    v.notes.append("exact witness needs infinite memory")
    if eps > 0:
        v.relaxed_strategy = lambda_strategy(
            mdp, init, res,
            lambda ec, I: flow_mode(mdp, ec, _requirements(live, I), eps) or uniform_mode(ec))
        v.relaxed_constraints = _relaxed(constraints, eps)
        v.epsilon = eps
    return v


def solve_mean_payoff(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint], epsilon=None) -> Verdict:
    kinds = {c.kind for c in constraints}
    if kinds == {"mp_sup"}:
        return mp_sup_solve(mdp, init, constraints, epsilon)
    if kinds == {"mp_inf"}:
        return mp_inf_solve(mdp, init, constraints, epsilon or 0)
    if len({c.dim for c in constraints}) == 1 and len(constraints) >= 1:
        # one dimension: both flavours coincide
        return mp_inf_solve(mdp, init, [replace(c, kind="mp_inf") for c in constraints], epsilon or 0)
    raise ValueError("mixing MP-sup and MP-inf constraints in one conjunction is not supported")
