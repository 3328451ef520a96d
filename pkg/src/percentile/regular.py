"""Percentile queries for inf, sup, liminf and limsup payoffs."""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .graph import EndComponent, end_components_within, sure_safe_region
from .model import Action, INF_KINDS, PercentileConstraint, WeightedMdp
from .product import (MemorylessMode, Product, ProductBuilder, absorbing_action, lift_strategy,
                      switching_strategy)
from .reach import (absorbing_flow, lambda_decomposition_solve, nested_multi_reach,
                    prefix_independent_solve, uniform_mode)
from .verdict import Verdict, no, trivial_strategy, yes


def weights_to_states(mdp: WeightedMdp, dim: int) -> Tuple[Product, Dict[int, int]]:
    """Route every action through a fresh middle state labelled with its weight.

    Returns the product and the labels of the middle states.  A run of the
    base MDP corresponds to exactly one run of the product, twice as long.
    """
    b = ProductBuilder(mdp)
    labels: Dict[int, int] = {}
    start = b.state(("s", mdp.initial), mdp.initial, 0)

    def expand(p):
        key = b.keys[p]
        if key[0] == "s":
            s = key[1]
            acts, origins = [], []
            for k, act in enumerate(mdp.actions[s]):
                mid = b.state(("mid", s, k), None, ("mid", s, k), "%s.%s" % (mdp.states[s], act.name))
                labels[mid] = act.weights[dim]
                acts.append(Action(act.name, act.weights, ((mid, Fraction(1)),)))
                origins.append(k)
            b.set_actions(p, acts, origins)
        else:
            _, s, k = key
            act = mdp.actions[s][k]
            succ = tuple((b.state(("s", t), t, 0), pr) for t, pr in act.succ)
            b.set_actions(p, [Action("go", (0,) * mdp.dim, tuple(sorted(succ)))], [None])

    b.explore(expand)
    return b.finish(start), labels


def _split_from(mdp, init, dim):
    return weights_to_states(mdp.with_initial(init), dim)


def _live(constraints):
    return [c for c in constraints if c.prob > 0]


def _w(mdp, s, a, l):
    return mdp.actions[s][a].weights[l]


def reach_then_uniform(outer: EndComponent, inner: EndComponent) -> MemorylessMode:
    """Roam ``outer`` uniformly until entering ``inner``, then roam ``inner`` uniformly."""
    pol = {}
    for s, acts in outer.actions.items():
        use = inner.actions[s] if s in inner.states else acts
        pol[s] = {a: Fraction(1, len(use)) for a in use}
    return MemorylessMode(pol, "reach-then-roam")


# ----------------------------------------------------------------------------
# single dimension


def solve_single_dim(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint]) -> Verdict:
    """All constraints of one kind on one dimension."""
    constraints = tuple(constraints)
    kinds = {c.kind for c in constraints}
    dims = {c.dim for c in constraints}
    if len(kinds) > 1 or len(dims) > 1:
        return solve_multi_dim_regular(mdp, init, constraints)
    live = _live(constraints)
    if not live:
        return yes(constraints, trivial_strategy(mdp, init))
    kind, l = live[0].kind, live[0].dim
    if kind == "sup":
        return _single_sup(mdp, init, constraints, live, l)
    if kind == "inf":
        return _single_inf(mdp, init, constraints, live, l)
    if kind == "liminf":
        return _single_liminf(mdp, init, constraints, live, l)
    if kind == "limsup":
        return _limsup(mdp, init, constraints, live)
    raise ValueError("not a regular payoff: %s" % kind)


def _single_sup(mdp, init, constraints, live, l):
    split, labels = _split_from(mdp, init, l)
    order = sorted(range(len(live)), key=lambda i: -live[i].value)
    targets = [frozenset(p for p, w in labels.items() if w >= live[i].value) for i in order]
    inner = nested_multi_reach(split.mdp, split.init, targets, [live[i].prob for i in order])
    if inner is None:
        return no(constraints, notes=["nested reachability infeasible"])
    return yes(constraints, lift_strategy(split, inner),
               certificate={"method": "nested reachability on split states",
                            "product_states": split.mdp.n_states})


def _single_inf(mdp, init, constraints, live, l):
    q = len(live)
    order = sorted(range(q), key=lambda i: live[i].value)
    v = [live[i].value for i in order]  # v[0] <= ... <= v[q-1]; copy j (1-based) uses v[j-1]

    def first_violated(w):
        return next((j for j in range(1, q + 1) if w < v[j - 1]), q + 1)

    safe = []
    for k in range(1, q + 1):
        region, acts = sure_safe_region(mdp, lambda s, a, k=k: _w(mdp, s, a, l) >= v[k - 1])
        safe.append((region, acts))

    b = ProductBuilder(mdp)
    tops = {}

    def top(k):
        if k not in tops:
            tops[k] = b.state(("top", k), None, ("top", k), "⊤%d" % k)
        return tops[k]

    start = b.state((init, q + 1), init, q + 1)

    def expand(p):
        key = b.keys[p]
        if key[0] == "top":
            b.set_actions(p, [absorbing_action(p, mdp.dim)], [None])
            return
        s, i = key
        acts, origins = [], []
        for k, act in enumerate(mdp.actions[s]):
            j = min(i, first_violated(act.weights[l]))
            succ = tuple((b.state((t, j), t, j), pr) for t, pr in act.succ)
            acts.append(Action(act.name, act.weights, succ))
            origins.append(k)
        if i >= 2 and s in safe[i - 2][0]:
            b.tags[(p, len(acts))] = ("safe", i - 1)
            acts.append(Action("a⊤", (0,) * mdp.dim, ((top(i - 1), Fraction(1)),)))
            origins.append(None)
        b.set_actions(p, acts, origins)

    b.explore(expand)
    prod = b.finish(start)
    goals = [frozenset(tops[k] for k in range(r + 1, q + 1) if k in tops) for r in range(q)]
    sol = absorbing_flow(prod.mdp, prod.init, goals, [live[i].prob for i in order])
    if sol is None:
        return no(constraints, notes=["copy construction infeasible"])
    modes = {}
    for k in range(1, q + 1):
        region, acts = safe[k - 1]
        modes[("safe", k)] = MemorylessMode({s: {acts[s][0]: Fraction(1)} for s in region}, "safe")
    strat = switching_strategy(prod, sol.policy, modes)
    return yes(constraints, strat, certificate={"method": "violation copies", "product_states": prod.mdp.n_states,
                                                 "flow": sol.flow})


def _restricted_ecs(mdp, ec: EndComponent, ok):
    return end_components_within(mdp, ec.states, lambda s, a: a in ec.actions[s] and ok(s, a))


def _single_liminf(mdp, init, constraints, live, l):
    def oracle(ec, i):
        return bool(_restricted_ecs(mdp, ec, lambda s, a: _w(mdp, s, a, l) >= live[i].value))

    def in_mec(ec, I):
        if not I:
            return uniform_mode(ec)
        top = max(I, key=lambda i: live[i].value)
        inner = _restricted_ecs(mdp, ec, lambda s, a: _w(mdp, s, a, l) >= live[top].value)[0]
        return reach_then_uniform(ec, inner)

    res = prefix_independent_solve(mdp, init, [c.prob for c in live], oracle, in_mec)
    if res is None:
        return no(constraints, notes=["no end-component assignment meets the thresholds"])
    return yes(constraints, res.strategy, certificate=res.certificate)


def _limsup(mdp, init, constraints, live):
    def oracle(ec, i):
        c = live[i]
        return any(_w(mdp, s, a, c.dim) >= c.value for s, a in ec.pairs())

    res = prefix_independent_solve(mdp, init, [c.prob for c in live], oracle, lambda ec, I: uniform_mode(ec))
    if res is None:
        return no(constraints, notes=["no end-component assignment meets the thresholds"])
    return yes(constraints, res.strategy, certificate=res.certificate)


# ----------------------------------------------------------------------------
# several dimensions / mixed kinds


def monitor_product(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint]) -> Tuple[Product, Dict[int, int]]:
    """Product with one violation bit per inf constraint and one seen bit per sup constraint.

    Returns the product (aux = tuple of bits) and the map constraint
    index -> bit position.
    """
    pos = {}
    for i, c in enumerate(constraints):
        if c.kind in ("inf", "sup"):
            pos[i] = len(pos)
    watched = [(i, constraints[i]) for i in pos]

    def step(flags, weights):
        out = list(flags)
        for i, c in watched:
            hit = weights[c.dim] >= c.value
            if c.kind == "inf" and not hit:
                out[pos[i]] = True
            elif c.kind == "sup" and hit:
                out[pos[i]] = True
        return tuple(out)

    b = ProductBuilder(mdp)
    f0 = (False,) * len(pos)
    start = b.state((init, f0), init, f0)

    def expand(p):
        s, flags = b.keys[p]
        acts, origins = [], []
        for k, act in enumerate(mdp.actions[s]):
            nf = step(flags, act.weights)
            succ = tuple((b.state((t, nf), t, nf), pr) for t, pr in act.succ)
            acts.append(Action(act.name, act.weights, succ))
            origins.append(k)
        b.set_actions(p, acts, origins)

    b.explore(expand)
    return b.finish(start), pos


def mec_subset_feasible_regular(prod: Product, ec: EndComponent, I: FrozenSet[int],
                                constraints: Sequence[PercentileConstraint], pos: Dict[int, int]) -> Optional[EndComponent]:
    """A sub-component of ``ec`` in which every constraint of I holds almost surely, or None.

    inf/sup constraints are read off the (constant) flags; liminf
    constraints restrict the usable actions; limsup constraints need a
    witnessing action inside one maximal end component of the restriction.
    """
    flags = prod.aux[min(ec.states)]
    for i in I:
        c = constraints[i]
        if c.kind == "inf" and flags[pos[i]]:
            return None
        if c.kind == "sup" and not flags[pos[i]]:
            return None
    m = prod.mdp
    lows = [constraints[i] for i in I if constraints[i].kind == "liminf"]
    highs = [constraints[i] for i in I if constraints[i].kind == "limsup"]
    for sub in _restricted_ecs(m, ec, lambda s, a: all(_w(m, s, a, c.dim) >= c.value for c in lows)):
        if all(any(_w(m, s, a, c.dim) >= c.value for s, a in sub.pairs()) for c in highs):
            return sub
    return None


def solve_multi_dim_regular(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint]) -> Verdict:
    constraints = tuple(constraints)
    for c in constraints:
        if c.kind not in INF_KINDS:
            raise ValueError("not a regular payoff: %s" % c.kind)
    live = _live(constraints)
    if not live:
        return yes(constraints, trivial_strategy(mdp, init))
    if all(c.kind == "limsup" for c in live):
        return _limsup(mdp, init, constraints, live)
    prod, pos = monitor_product(mdp, init, live)
    witness: Dict[Tuple[FrozenSet[int], FrozenSet[int]], Optional[EndComponent]] = {}

    def check(ec, I):
        key = (ec.states, I)
        if key not in witness:
            witness[key] = mec_subset_feasible_regular(prod, ec, I, live, pos)
        return witness[key]

    res = lambda_decomposition_solve(prod.mdp, prod.init, [c.prob for c in live],
                                     lambda ec, I: check(ec, I) is not None,
                                     lambda ec, I: reach_then_uniform(ec, check(ec, I)) if I else uniform_mode(ec))
    cert = {"method": "monitor product + subset decomposition", "product_states": prod.mdp.n_states,
            "maximal_subsets": {k: [sorted(I) for I in v] for k, v in res.maximal.items()}}
    if not res.feasible:
        return no(constraints, certificate=cert)
    cert.update(weights={"%d:%s" % (k, sorted(I)): w for (k, I), w in res.weights.items()})
    return yes(constraints, lift_strategy(prod, res.strategy), certificate=cert)


def solve_regular(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint]) -> Verdict:
    constraints = tuple(constraints)
    if len({c.kind for c in constraints}) == 1 and len({c.dim for c in constraints}) == 1:
        return solve_single_dim(mdp, init, constraints)
    return solve_multi_dim_regular(mdp, init, constraints)
